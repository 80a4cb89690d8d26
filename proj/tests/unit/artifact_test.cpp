#include <doctest.h>

#include <fstream>

#include "engage/artifact.hpp"
#include "model_fixture.hpp"

using namespace engage;
using nlohmann::json;

namespace {

json model_doc() { return json::parse(serialize_artifact(fixtures::quick_model().artifact)); }

ErrorKind load_kind(const json& doc) {
  return fixtures::kind_of([&] { artifact_from_json(doc); });
}

}  // namespace

TEST_CASE("serialization round trip is exact") {
  const auto& a = fixtures::quick_model().artifact;
  const std::string text = serialize_artifact(a);
  auto back = deserialize_artifact(text);
  CHECK(serialize_artifact(back) == text);
  CHECK(back.ensemble.trees == a.ensemble.trees);
  CHECK(back.ensemble.base_score == a.ensemble.base_score);
  CHECK(back.weights.weights == a.weights.weights);
  CHECK(back.audio.clusters.centroids == a.audio.clusters.centroids);
  CHECK(back.visual.pca.components == a.visual.pca.components);
  CHECK(back.test_metrics == a.test_metrics);
  const auto dir = fixtures::scratch("artifact");
  save_artifact((dir / "m.json").string(), a);
  CHECK(serialize_artifact(load_artifact((dir / "m.json").string())) == text);
}

TEST_CASE("rating tables") {
  auto t = make_rating_table({0.0, 0.0, 0.5, 1.0});
  CHECK(t.values == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(t.total == 4);
  CHECK(t.rate(0.0) == doctest::Approx(2.5));
  CHECK(t.rate(0.5) == doctest::Approx(6.25));
  CHECK(t.rate(1.0) == doctest::Approx(8.75));
  CHECK(t.rate(2.0) == 10.0);
  CHECK(t.rate(-1.0) == 0.0);
}

TEST_CASE("format version and schema errors") {
  auto doc = model_doc();
  doc["format_version"] = 2;
  CHECK(load_kind(doc) == ErrorKind::FormatVersion);
  doc.erase("format_version");
  CHECK(load_kind(doc) == ErrorKind::FormatVersion);

  doc = model_doc();
  doc.erase("weights");
  CHECK(load_kind(doc) == ErrorKind::SchemaViolation);
  CHECK(fixtures::kind_of([] { deserialize_artifact("{ nope"); }) == ErrorKind::MalformedJson);
  CHECK(fixtures::kind_of([] { load_artifact("/nonexistent/model.json"); }) == ErrorKind::Io);
}

TEST_CASE("invariant violations are caught on load") {
  auto a = fixtures::quick_model().artifact;
  auto kind = [](ModelArtifact m) { return fixtures::kind_of([&] { validate(m); }); };
  CHECK_NOTHROW(validate(a));

  auto m = a;
  m.shares.audio[0] += 0.5;
  CHECK(kind(m) == ErrorKind::InvariantViolation);
  m = a;
  m.weights.weights[0] += 0.5;
  CHECK(kind(m) == ErrorKind::InvariantViolation);
  m = a;
  m.ensemble.n_features = 12;
  CHECK(kind(m) == ErrorKind::InvariantViolation);
  m = a;
  m.audio.clusters.centroids.conservativeResize(9, Eigen::NoChange);
  CHECK(kind(m) == ErrorKind::InvariantViolation);
  m = a;
  m.ratings.pop_back();
  CHECK(kind(m) == ErrorKind::InvariantViolation);
  m = a;
  m.modality = ModalityMask::Audio;
  CHECK(kind(m) == ErrorKind::InvariantViolation);
}
