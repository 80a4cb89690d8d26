#include <doctest.h>

#include <sstream>

#include "engage/ingest.hpp"
#include "engage/synthetic.hpp"
#include "fixtures.hpp"

using namespace engage;

namespace {

std::vector<std::string> corpus_lines(const std::vector<VideoRecord>& records) {
  std::ostringstream out;
  write_corpus(out, records);
  std::vector<std::string> lines;
  std::istringstream in(out.str());
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("raw lines resolved through fixture sources") {
  FixtureDescriptorSource descriptors(fixtures::data_dir() / "descriptors");
  FixtureMetadataSource metadata(fixtures::data_dir() / "metadata");
  IngestOptions opt;
  opt.descriptors = &descriptors;
  opt.metadata = &metadata;
  auto result = ingest(read_lines((fixtures::data_dir() / "raw_videos.jsonl").string()), opt);

  CHECK(result.report.total == 3);
  CHECK(result.report.kept == 2);
  REQUIRE(result.report.dropped.size() == 1);
  CHECK(result.report.dropped[0].id == "zero-views");
  CHECK(result.report.dropped[0].line == 3);

  const auto& quake = result.records[0];
  CHECK(quake.id == "infographics-quake");
  CHECK(quake.title == "What If the Biggest Earthquake Hit Your City");
  CHECK(quake.views == 1250000);
  CHECK(quake.descriptors.audio[0] == "clear, informative narration");
  CHECK(quake.descriptors.visual[4] == "construction of earthquake-resistant buildings");
  CHECK(quake.engagement.raw_ratio == doctest::Approx(41300.0 / 1250000.0));
  CHECK(result.records[1].engagement.normalized == 1.0);
  CHECK(quake.engagement.normalized == 0.0);
}

TEST_CASE("a single recorded response with metadata yields one canonical record") {
  FixtureDescriptorSource descriptors(fixtures::data_dir() / "descriptors");
  FixtureMetadataSource metadata(fixtures::data_dir() / "metadata");
  IngestOptions opt;
  opt.descriptors = &descriptors;
  opt.metadata = &metadata;
  auto result = ingest({R"({"id": "infographics-quake"})"}, opt);
  REQUIRE(result.records.size() == 1);
  CHECK(result.records[0].engagement.normalized == 0.5);
  CHECK(!result.report.warnings.empty());
  auto doc = record_to_json(result.records[0]);
  CHECK(doc["descriptors"]["audio"].size() == 5);
  CHECK(doc["descriptors"]["visual"].size() == 5);
}

TEST_CASE("zero views dropped and counted") {
  IngestOptions opt;
  std::vector<std::string> lines{
      R"({"id":"a","duration_s":10,"views":100,"likes":5,"descriptors":{"audio":["x"],"visual":["y"]}})",
      R"({"id":"b","duration_s":10,"views":0,"likes":5,"descriptors":{"audio":["x"],"visual":["y"]}})",
      R"({"id":"c","duration_s":10,"views":100,"likes":9,"descriptors":{"audio":["x"],"visual":["y"]}})"};
  auto result = ingest(lines, opt);
  CHECK(result.report.kept == 2);
  REQUIRE(result.report.dropped.size() == 1);
  CHECK(result.report.dropped[0].id == "b");
  CHECK(result.report.dropped[0].reason.find("ZeroViews") != std::string::npos);
}

TEST_CASE("invalid records are collected, too many failures are fatal") {
  std::vector<std::string> lines{
      R"({"id":"ok","duration_s":10,"views":100,"likes":5,"descriptors":{"audio":["x"],"visual":["y"]}})",
      R"({"id":"long","duration_s":91,"views":100,"likes":5,"descriptors":{"audio":["x"],"visual":["y"]}})",
      R"(not json at all)",
      R"({"duration_s":10,"views":100,"likes":5})"};
  CHECK_THROWS_AS(ingest(lines, {}), Error);
  lines.push_back(R"({"id":"ok2","duration_s":10,"views":100,"likes":7,"vlm_raw":"{\"audio\":[\"x\"],\"video\":[\"y\"]}"})");
  lines.push_back(R"({"id":"ok3","duration_s":10,"views":100,"likes":3,"descriptors":{"audio":["x"],"visual":["y"]}})");
  auto result = ingest(lines, {});
  CHECK(result.report.kept == 3);
  CHECK(result.report.dropped.size() == 3);
}

TEST_CASE("ingestion of canonical output is a fixed point") {
  const auto& corpus = fixtures::planted();
  auto lines = corpus_lines(corpus.records);
  auto first = ingest(lines, {});
  auto second = ingest(corpus_lines(first.records), {});
  CHECK(corpus_lines(first.records) == lines);
  CHECK(corpus_lines(second.records) == lines);
}

TEST_CASE("record json round trip") {
  const auto& r = fixtures::planted().records[3];
  auto back = record_from_json(nlohmann::json::parse(record_to_json(r).dump()));
  CHECK(back.id == r.id);
  CHECK(back.views == r.views);
  CHECK(back.descriptors == r.descriptors);
  CHECK(back.engagement.normalized == r.engagement.normalized);
  CHECK(back.engagement.raw_ratio == r.engagement.raw_ratio);
  CHECK(back.vlm_raw == r.vlm_raw);
}
