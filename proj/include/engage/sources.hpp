#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

namespace engage {

// Prompt sent to the descriptor model in remote mode.
extern const char* const kDescriptorPrompt;

struct VideoRef {
  std::string id;
  std::string title;
  std::string url;
};

// Supplies the verbatim descriptor-model response for a video.
class DescriptorSource {
 public:
  virtual ~DescriptorSource() = default;
  virtual std::string fetch(const VideoRef& video) = 0;
};

// Supplies {title, duration_s, views, likes, category, upload_date} for a
// video.
class MetadataSource {
 public:
  virtual ~MetadataSource() = default;
  virtual nlohmann::json fetch(const VideoRef& video) = 0;
};

// Reads <dir>/<id>.json.
class FixtureDescriptorSource : public DescriptorSource {
 public:
  explicit FixtureDescriptorSource(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::string fetch(const VideoRef& video) override;

 private:
  std::filesystem::path dir_;
};

class FixtureMetadataSource : public MetadataSource {
 public:
  explicit FixtureMetadataSource(std::filesystem::path dir) : dir_(std::move(dir)) {}
  nlohmann::json fetch(const VideoRef& video) override;

 private:
  std::filesystem::path dir_;
};

struct RemoteEndpoint {
  std::string url;  // scheme://host[:port]/path
  std::string api_key;
};

// Reads <prefix>_ENDPOINT and <prefix>_API_KEY; throws RemoteUnavailable when
// either is unset.
RemoteEndpoint endpoint_from_env(const std::string& prefix);

// Request body posted to the descriptor endpoint.
nlohmann::json descriptor_request(const VideoRef& video);

// POSTs the prompt with a title/URL header. Accepts either the model JSON
// directly or an envelope {"text": "<model JSON>"}.
class RemoteDescriptorSource : public DescriptorSource {
 public:
  explicit RemoteDescriptorSource(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  std::string fetch(const VideoRef& video) override;

 private:
  RemoteEndpoint endpoint_;
};

class RemoteMetadataSource : public MetadataSource {
 public:
  explicit RemoteMetadataSource(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
  nlohmann::json fetch(const VideoRef& video) override;

 private:
  RemoteEndpoint endpoint_;
};

// Returns the response body of a JSON POST; throws RemoteUnavailable on
// transport errors or non-2xx status.
std::string http_post_json(const RemoteEndpoint& endpoint, const nlohmann::json& body);

}  // namespace engage
