#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "engage/error.hpp"
#include "engage/matrix.hpp"

namespace engage {

inline constexpr int kEmbeddingDim = 768;

struct PhraseEmbedding {
  std::string phrase;
  Vector vector;  // kEmbeddingDim components, unit L2 norm
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string name() const = 0;
  // Receives a normalized, non-empty phrase.
  virtual Vector embed_normalized(const std::string& phrase) const = 0;
};

// Signed feature hashing of word tokens and character trigrams into 768
// buckets. Deterministic and model-free.
class HashingEmbedder : public EmbeddingProvider {
 public:
  std::string name() const override { return "hashing"; }
  Vector embed_normalized(const std::string& phrase) const override;
};

// Lookup table loaded from CSV rows `phrase,v0,...,v767`. The phrase field
// may be double-quoted. Vectors are L2-normalized on load.
class PrecomputedEmbedder : public EmbeddingProvider {
 public:
  explicit PrecomputedEmbedder(std::map<std::string, Vector> table) : table_(std::move(table)) {}
  static PrecomputedEmbedder load_csv(const std::string& path);

  std::string name() const override { return "precomputed"; }
  Vector embed_normalized(const std::string& phrase) const override;
  std::size_t size() const { return table_.size(); }

 private:
  std::map<std::string, Vector> table_;
};

std::unique_ptr<EmbeddingProvider> make_provider(std::string_view name,
                                                 const std::string& table_path = {});

// Normalizes the phrase, rejects empties, and returns a unit vector.
PhraseEmbedding embed_phrase(std::string_view phrase, const EmbeddingProvider& provider);

// Rows follow the order of `phrases`.
Matrix embed_all(const std::vector<std::string>& phrases, const EmbeddingProvider& provider);

void write_embeddings_csv(const std::string& path, const std::vector<std::string>& phrases,
                          const Matrix& vectors);

}  // namespace engage
