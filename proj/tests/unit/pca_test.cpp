#include <doctest.h>

#include "engage/embed.hpp"
#include "engage/pca.hpp"
#include "engage/rng.hpp"

using namespace engage;

namespace {

Matrix random_matrix(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = rng.normal();
  }
  return m;
}

double column_variance(const Matrix& m, int j) {
  const double mean = m.col(j).mean();
  return (m.col(j).array() - mean).square().sum() / static_cast<double>(m.rows() - 1);
}

}  // namespace

TEST_CASE("three collinear points give +e1") {
  Matrix pts = Matrix::Zero(3, kEmbeddingDim);
  pts(1, 0) = 1.0;
  pts(2, 0) = 2.0;
  Warnings w;
  auto model = fit_pca(pts, 1, &w);
  REQUIRE(model.k() == 1);
  CHECK(model.components(0, 0) == doctest::Approx(1.0));
  CHECK(model.components.row(0).tail(kEmbeddingDim - 1).norm() < 1e-12);
  CHECK(model.explained_variance[0] == doctest::Approx(1.0));
}

TEST_CASE("points in a plane reconstruct exactly") {
  Rng rng(2);
  Matrix basis = random_matrix(2, 20, 5);
  Matrix pts(40, 20);
  for (int i = 0; i < 40; ++i) pts.row(i) = rng.normal() * basis.row(0) + rng.normal() * basis.row(1);
  auto model = fit_pca(pts, 2);
  for (int i = 0; i < 40; ++i) {
    Vector p = pts.row(i).transpose();
    CHECK((inverse_transform_pca(model, transform_pca(model, p)) - p).norm() < 1e-8);
  }
  CHECK(transform_pca(model, model.mean).norm() < 1e-12);
}

TEST_CASE("full rank: explained variance covers the total") {
  Matrix pts = random_matrix(60, 12, 8);
  auto model = fit_pca(pts, 12);
  double total = 0.0;
  for (int j = 0; j < 12; ++j) total += column_variance(pts, j);
  CHECK(model.explained_variance.sum() == doctest::Approx(total).epsilon(1e-9));
  Matrix gram = model.components * model.components.transpose();
  CHECK((gram - Matrix::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-9);
  validate(model);
}

TEST_CASE("projected coordinates carry the explained variance") {
  Matrix pts = random_matrix(80, 30, 9);
  auto model = fit_pca(pts, 10);
  Matrix proj = transform_pca(model, pts);
  for (int j = 0; j < 10; ++j) CHECK(std::abs(column_variance(proj, j) - model.explained_variance[j]) < 1e-6);
  for (int j = 1; j < 10; ++j) CHECK(model.explained_variance[j] <= model.explained_variance[j - 1]);
  for (int j = 0; j < 10; ++j) {
    Eigen::Index arg;
    model.components.row(j).cwiseAbs().maxCoeff(&arg);
    CHECK(model.components(j, arg) > 0.0);
  }
}

TEST_CASE("reconstruction error does not grow with k") {
  Matrix pts = random_matrix(50, 16, 10);
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 16; ++k) {
    auto model = fit_pca(pts, k);
    double err = 0.0;
    for (int i = 0; i < pts.rows(); ++i) {
      Vector p = pts.row(i).transpose();
      err += (inverse_transform_pca(model, transform_pca(model, p)) - p).squaredNorm();
    }
    CHECK(err <= prev + 1e-9);
    prev = err;
  }
  CHECK(prev < 1e-12);
}

TEST_CASE("rank deficiency shrinks k with a warning") {
  Matrix pts = Matrix::Zero(5, 8);
  for (int i = 0; i < 5; ++i) pts(i, i % 2) = i;
  Warnings w;
  auto model = fit_pca(pts, 4, &w);
  CHECK(model.k() == 2);
  REQUIRE(!w.empty());
  CHECK(w.messages[0].find("RankDeficient") != std::string::npos);
}

TEST_CASE("errors") {
  Matrix pts = random_matrix(10, 4, 1);
  CHECK_THROWS_AS(fit_pca(pts, 5), Error);
  CHECK_THROWS_AS(fit_pca(pts.topRows(1), 1), Error);
  auto model = fit_pca(pts, 2);
  CHECK_THROWS_AS(transform_pca(model, Vector(Vector::Zero(3))), Error);
}
