#include "engage/embed.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "engage/corpus.hpp"
#include "engage/rng.hpp"

namespace engage {

namespace {

void add_token(Vector& v, std::string_view token) {
  const std::uint64_t h = fnv1a64(token);
  const auto bucket = static_cast<Eigen::Index>(h % kEmbeddingDim);
  v[bucket] += (h >> 63) != 0 ? -1.0 : 1.0;
}

// Splits one CSV line; the first field may be quoted with "" escapes.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string quote_csv(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

Vector HashingEmbedder::embed_normalized(const std::string& phrase) const {
  Vector v = Vector::Zero(kEmbeddingDim);
  std::size_t start = 0;
  while (start < phrase.size()) {
    std::size_t end = phrase.find(' ', start);
    if (end == std::string::npos) end = phrase.size();
    if (end > start) add_token(v, "w:" + phrase.substr(start, end - start));
    start = end + 1;
  }
  const std::string padded = "^" + phrase + "$";
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    add_token(v, "c:" + padded.substr(i, 3));
  }
  const double norm = v.norm();
  if (norm == 0.0) {
    // Every contribution cancelled; fall back to a single phrase-keyed bucket.
    add_token(v, "p:" + phrase);
    return v.normalized();
  }
  return v / norm;
}

PrecomputedEmbedder PrecomputedEmbedder::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read embeddings table " + path);
  std::map<std::string, Vector> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (line_no == 1 && fields.size() == kEmbeddingDim + 1 && fields[0] == "phrase") continue;
    if (fields.size() != kEmbeddingDim + 1) {
      fail(ErrorKind::DimensionMismatch,
           path + ":" + std::to_string(line_no) + " has " + std::to_string(fields.size() - 1) +
               " components, expected 768");
    }
    Vector v(kEmbeddingDim);
    for (int j = 0; j < kEmbeddingDim; ++j) {
      const auto& f = fields[j + 1];
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), x);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        fail(ErrorKind::SchemaViolation, path + ":" + std::to_string(line_no) + " bad number");
      }
      v[j] = x;
    }
    const double norm = v.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      fail(ErrorKind::SchemaViolation, path + ":" + std::to_string(line_no) + " zero vector");
    }
    table[normalize_phrase(fields[0])] = v / norm;
  }
  return PrecomputedEmbedder(std::move(table));
}

Vector PrecomputedEmbedder::embed_normalized(const std::string& phrase) const {
  auto it = table_.find(phrase);
  if (it == table_.end()) fail(ErrorKind::MissingEmbedding, "no embedding for '" + phrase + "'");
  return it->second;
}

std::unique_ptr<EmbeddingProvider> make_provider(std::string_view name,
                                                 const std::string& table_path) {
  if (name == "hashing") return std::make_unique<HashingEmbedder>();
  if (name == "precomputed") {
    if (table_path.empty()) {
      fail(ErrorKind::InvalidConfig, "precomputed provider requires an embeddings file");
    }
    return std::make_unique<PrecomputedEmbedder>(PrecomputedEmbedder::load_csv(table_path));
  }
  fail(ErrorKind::InvalidConfig, "unknown embedding provider '" + std::string(name) + "'");
}

PhraseEmbedding embed_phrase(std::string_view phrase, const EmbeddingProvider& provider) {
  std::string normalized = normalize_phrase(phrase);
  if (normalized.empty()) fail(ErrorKind::EmptyPhrase, "cannot embed an empty phrase");
  Vector v = provider.embed_normalized(normalized);
  if (v.size() != kEmbeddingDim) {
    fail(ErrorKind::DimensionMismatch, "provider returned " + std::to_string(v.size()) + " dims");
  }
  return {std::move(normalized), std::move(v)};
}

Matrix embed_all(const std::vector<std::string>& phrases, const EmbeddingProvider& provider) {
  Matrix out(static_cast<Eigen::Index>(phrases.size()), kEmbeddingDim);
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = embed_phrase(phrases[i], provider).vector.transpose();
  }
  return out;
}

void write_embeddings_csv(const std::string& path, const std::vector<std::string>& phrases,
                          const Matrix& vectors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << "phrase";
  for (int j = 0; j < kEmbeddingDim; ++j) out << ",v" << j;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    out << quote_csv(phrases[i]);
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), vectors(static_cast<Eigen::Index>(i), j));
      out << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
}

}  // namespace engage
