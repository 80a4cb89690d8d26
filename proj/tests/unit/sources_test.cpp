#include <doctest.h>

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "engage/ingest.hpp"
#include "engage/sources.hpp"
#include "fixtures.hpp"

using namespace engage;

TEST_CASE("fixture sources read per-video files") {
  FixtureDescriptorSource d(fixtures::data_dir() / "descriptors");
  auto raw = d.fetch({"zack-umbrella", "", ""});
  CHECK(parse_vlm_response(raw).visual.front() == "Dynamic 3D Animation");
  FixtureMetadataSource m(fixtures::data_dir() / "metadata");
  CHECK(m.fetch({"zack-umbrella", "", ""})["views"] == 880000);
  CHECK_THROWS_AS(d.fetch({"missing", "", ""}), Error);
}

TEST_CASE("descriptor request carries the prompt and a title header") {
  auto body = descriptor_request({"v1", "Why Umbrellas Flip", "https://example.test/v1"});
  CHECK(body["video_id"] == "v1");
  const std::string prompt = body["prompt"];
  CHECK(prompt.rfind("Title: Why Umbrellas Flip\nURL: https://example.test/v1\n\n", 0) == 0);
  CHECK(prompt.find("Give the 5 most impactful video elements") != std::string::npos);
}

TEST_CASE("endpoint_from_env requires both variables") {
  ::unsetenv("ENGAGE_TEST_ENDPOINT");
  ::unsetenv("ENGAGE_TEST_API_KEY");
  CHECK_THROWS_AS(endpoint_from_env("ENGAGE_TEST"), Error);
  ::setenv("ENGAGE_TEST_ENDPOINT", "http://127.0.0.1:1/x", 1);
  ::setenv("ENGAGE_TEST_API_KEY", "k", 1);
  auto e = endpoint_from_env("ENGAGE_TEST");
  CHECK(e.url == "http://127.0.0.1:1/x");
  CHECK(e.api_key == "k");
}

TEST_CASE("remote sources against a local server") {
  httplib::Server server;
  std::string seen_auth;
  server.Post("/describe", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json reply{{"text", R"({"audio":["Calm Voice"],"video":["Wide Shot"]})"}};
    if (body["video_id"] == "bare") reply = nlohmann::json::parse(R"({"audio":["Hum"],"video":["Pan"]})");
    res.set_content(reply.dump(), "application/json");
  });
  server.Post("/meta", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"title":"t","duration_s":12,"views":40,"likes":4})", "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string base = "http://127.0.0.1:" + std::to_string(port);

  RemoteDescriptorSource descriptors({base + "/describe", "secret"});
  CHECK(parse_vlm_response(descriptors.fetch({"v1", "t", "u"})).audio.front() == "Calm Voice");
  CHECK(seen_auth == "Bearer secret");
  CHECK(parse_vlm_response(descriptors.fetch({"bare", "", ""})).visual.front() == "Pan");

  RemoteMetadataSource metadata({base + "/meta", "secret"});
  IngestOptions opt;
  opt.descriptors = &descriptors;
  opt.metadata = &metadata;
  auto result = ingest({R"({"id":"v1"})", R"({"id":"v2"})"}, opt);
  CHECK(result.records.size() == 2);
  CHECK(result.records[0].descriptors.audio[0] == "calm voice");

  RemoteDescriptorSource broken({base + "/broken", "secret"});
  try {
    broken.fetch({"v1", "", ""});
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RemoteUnavailable);
  }
  server.stop();
  worker.join();
}
