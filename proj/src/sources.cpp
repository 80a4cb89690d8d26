#include "engage/sources.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>

#include "engage/error.hpp"

namespace engage {

const char* const kDescriptorPrompt =
    "Give the 5 most impactful video elements and 5 impactful audio elements "
    "that impact the engagement for the given video. An element should be "
    "described in a few words. Return in a JSON format as per the following "
    "example: {'audio': ['', '', '', '', ''], 'video': ['', '', '', '', '']}. "
    "Make sure to return exactly 5 video and 5 audio elements, and the output "
    "matches the JSON formatting.";

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct SplitUrl {
  std::string origin;
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    fail(ErrorKind::RemoteUnavailable, "endpoint must include a scheme: " + url);
  }
  auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, "/"};
  return {url.substr(0, path_begin), url.substr(path_begin)};
}

}  // namespace

std::string FixtureDescriptorSource::fetch(const VideoRef& video) {
  auto path = dir_ / (video.id + ".json");
  if (!std::filesystem::exists(path)) {
    fail(ErrorKind::Io, "no descriptor fixture for video " + video.id);
  }
  return read_file(path);
}

nlohmann::json FixtureMetadataSource::fetch(const VideoRef& video) {
  auto path = dir_ / (video.id + ".json");
  if (!std::filesystem::exists(path)) {
    fail(ErrorKind::Io, "no metadata fixture for video " + video.id);
  }
  auto doc = nlohmann::json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    fail(ErrorKind::MalformedJson, "metadata fixture for " + video.id);
  }
  return doc;
}

RemoteEndpoint endpoint_from_env(const std::string& prefix) {
  const char* url = std::getenv((prefix + "_ENDPOINT").c_str());
  const char* key = std::getenv((prefix + "_API_KEY").c_str());
  if (url == nullptr || *url == '\0' || key == nullptr || *key == '\0') {
    fail(ErrorKind::RemoteUnavailable,
         prefix + "_ENDPOINT and " + prefix + "_API_KEY must be set for remote mode");
  }
  return {url, key};
}

nlohmann::json descriptor_request(const VideoRef& video) {
  nlohmann::json body;
  body["video_id"] = video.id;
  body["prompt"] = "Title: " + video.title + "\nURL: " + video.url + "\n\n" +
                   kDescriptorPrompt;
  return body;
}

std::string http_post_json(const RemoteEndpoint& endpoint, const nlohmann::json& body) {
  auto [origin, path] = split_url(endpoint.url);
  httplib::Client client(origin);
  client.set_connection_timeout(10);
  client.set_read_timeout(120);
  httplib::Headers headers{{"Authorization", "Bearer " + endpoint.api_key}};
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    fail(ErrorKind::RemoteUnavailable,
         "request to " + endpoint.url + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    fail(ErrorKind::RemoteUnavailable,
         "endpoint returned HTTP " + std::to_string(res->status));
  }
  return res->body;
}

std::string RemoteDescriptorSource::fetch(const VideoRef& video) {
  auto text = http_post_json(endpoint_, descriptor_request(video));
  auto doc = nlohmann::json::parse(text, nullptr, false);
  if (!doc.is_discarded() && doc.is_object() && doc.contains("text") &&
      doc["text"].is_string()) {
    return doc["text"].get<std::string>();
  }
  return text;
}

nlohmann::json RemoteMetadataSource::fetch(const VideoRef& video) {
  nlohmann::json body{{"video_id", video.id}};
  auto text = http_post_json(endpoint_, body);
  auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    fail(ErrorKind::MalformedJson, "metadata response for " + video.id);
  }
  return doc;
}

}  // namespace engage
