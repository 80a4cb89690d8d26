#include <doctest.h>

#include <set>

#include "engage/cluster.hpp"
#include "engage/embed.hpp"
#include "engage/rng.hpp"
#include "engage/synthetic.hpp"

using namespace engage;

namespace {

Matrix blobs(int per, int centers, int d, double spread, std::uint64_t seed) {
  Rng rng(seed);
  Matrix c(centers, d);
  for (int i = 0; i < centers; ++i) {
    for (int j = 0; j < d; ++j) c(i, j) = rng.uniform(-10, 10);
  }
  Matrix pts(per * centers, d);
  for (int i = 0; i < per * centers; ++i) {
    for (int j = 0; j < d; ++j) pts(i, j) = c(i % centers, j) + spread * rng.normal();
  }
  return pts;
}

}  // namespace

TEST_CASE("n equal to k gives zero inertia") {
  Matrix pts = blobs(1, 6, 3, 0.0, 4);
  auto model = fit_kmeans(pts, {.k = 6, .seed = 1});
  CHECK(model.inertia == doctest::Approx(0.0));
}

TEST_CASE("two separated pairs land on their means") {
  Matrix pts(4, 2);
  pts << 0, 0, 0, 2, 100, 100, 102, 100;
  auto model = fit_kmeans(pts, {.k = 2, .seed = 3});
  std::set<std::pair<double, double>> centers;
  for (int i = 0; i < 2; ++i) centers.insert({model.centroids(i, 0), model.centroids(i, 1)});
  CHECK(centers == std::set<std::pair<double, double>>{{0, 1}, {101, 100}});
  CHECK(model.inertia == doctest::Approx(4.0));
}

TEST_CASE("inertia never increases and refits are bit-identical") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Matrix pts = blobs(30, 7, 5, 2.5, seed);
    KMeansOptions opt{.k = 7, .seed = seed, .n_init = 2};
    auto a = fit_kmeans(pts, opt);
    auto b = fit_kmeans(pts, opt);
    CHECK(a.centroids == b.centroids);
    CHECK(a.inertia_trace == b.inertia_trace);
    for (std::size_t t = 1; t < a.inertia_trace.size(); ++t) CHECK(a.inertia_trace[t] <= a.inertia_trace[t - 1]);
  }
}

TEST_CASE("fitted points sit at their nearest centroid, centroids are member means") {
  Matrix pts = blobs(25, 5, 4, 1.0, 12);
  auto model = fit_kmeans(pts, {.k = 5, .seed = 2, .tol = 0.0});
  Matrix sums = Matrix::Zero(5, 4);
  std::vector<int> counts(5, 0);
  double inertia = 0.0;
  for (int i = 0; i < pts.rows(); ++i) {
    Vector p = pts.row(i).transpose();
    auto a = assign(model, p);
    int best = 0;
    for (int c = 1; c < 5; ++c) {
      if ((model.centroids.row(c).transpose() - p).squaredNorm() <
          (model.centroids.row(best).transpose() - p).squaredNorm()) {
        best = c;
      }
    }
    CHECK(a.cluster_id == best);
    CHECK(a.distance == doctest::Approx((model.centroids.row(best).transpose() - p).norm()));
    sums.row(a.cluster_id) += p.transpose();
    ++counts[a.cluster_id];
    inertia += a.distance * a.distance;
  }
  for (int c = 0; c < 5; ++c) {
    REQUIRE(counts[c] > 0);
    CHECK((sums.row(c) / counts[c] - model.centroids.row(c)).norm() < 1e-9);
  }
  CHECK(inertia == doctest::Approx(model.inertia).epsilon(1e-9));
}

TEST_CASE("assign: exact hit and ties") {
  ClusterModel m;
  m.k = 5;
  m.centroids = Matrix(5, 1);
  m.centroids << 10, -1, 7, 3, 1;
  Vector v(1);
  v << 3;
  auto a = assign(m, v);
  CHECK(a.cluster_id == 3);
  CHECK(a.distance == 0.0);
  v << 0;  // equidistant to centroids 1 and 4
  CHECK(assign(m, v).cluster_id == 1);
  CHECK_THROWS_AS(assign(m, Vector::Zero(2)), Error);
}

TEST_CASE("too few points") {
  Matrix pts = Matrix::Zero(3, 2);
  try {
    fit_kmeans(pts, {.k = 4});
    FAIL("expected TooFewPoints");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TooFewPoints);
  }
}

TEST_CASE("describe_clusters counts") {
  ClusterModel m;
  m.k = 3;
  m.centroids = Matrix::Zero(3, 1);
  std::vector<ClusterAssignment> as;
  for (int i = 0; i < 4; ++i) as.push_back({"energetic music", Modality::Audio, 0, 0.0});
  as.push_back({"calm voice", Modality::Audio, 2, 0.0});
  as.push_back({"soft voice", Modality::Audio, 2, 0.0});
  as.push_back({"calm voice", Modality::Audio, 2, 0.0});
  auto s = describe_clusters(m, as, 5);
  REQUIRE(s.size() == 3);
  CHECK(s[0].count == 4);
  REQUIRE(s[0].top_phrases.size() == 1);
  CHECK(s[0].top_phrases[0] == std::pair<std::string, std::size_t>{"energetic music", 4});
  CHECK(s[1].count == 0);
  CHECK(s[1].label() == "(empty)");
  CHECK(s[2].label() == "calm voice");
  CHECK(s[0].count + s[1].count + s[2].count == as.size());
}

TEST_CASE("synthetic themes separate under the hashing embedder") {
  HashingEmbedder h;
  for (auto modality : {Modality::Audio, Modality::Visual}) {
    std::vector<std::string> phrases;
    std::vector<int> theme;
    for (const auto& t : synthetic_themes()) {
      if (t.modality != modality) continue;
      for (const auto& p : t.phrases) {
        phrases.push_back(p);
        theme.push_back(t.index);
      }
    }
    auto model = fit_kmeans(embed_all(phrases, h), {.k = 10, .seed = 21, .n_init = 5}, modality);
    std::map<int, std::set<int>> themes_per_cluster;
    auto points = embed_all(phrases, h);
    for (std::size_t i = 0; i < phrases.size(); ++i) {
      themes_per_cluster[assign(model, points.row(static_cast<Eigen::Index>(i)).transpose()).cluster_id].insert(
          theme[i]);
    }
    CHECK(themes_per_cluster.size() == 10);
    for (const auto& [c, ts] : themes_per_cluster) CHECK(ts.size() == 1);
  }
}
