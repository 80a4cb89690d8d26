#include "engage/ingest.hpp"

#include <fstream>
#include <iostream>
#include <optional>

#include "engage/error.hpp"

namespace engage {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json record_to_json(const VideoRecord& r) {
  ordered_json doc;
  doc["id"] = r.id;
  doc["title"] = r.title;
  doc["duration_s"] = r.duration_s;
  doc["views"] = r.views;
  doc["likes"] = r.likes;
  doc["category"] = r.category;
  if (!r.upload_date.empty()) doc["upload_date"] = r.upload_date;
  if (!r.vlm_raw.empty()) doc["vlm_raw"] = r.vlm_raw;
  doc["descriptors"]["audio"] = r.descriptors.audio;
  doc["descriptors"]["visual"] = r.descriptors.visual;
  doc["engagement"]["raw_ratio"] = r.engagement.raw_ratio;
  doc["engagement"]["normalized"] = r.engagement.normalized;
  return doc;
}

namespace {

template <std::size_t N>
void read_fixed(const json& list, std::array<std::string, N>& out, const char* key) {
  if (!list.is_array() || list.size() != N) {
    fail(ErrorKind::SchemaViolation, std::string("descriptors.") + key + " must list 5 phrases");
  }
  for (std::size_t i = 0; i < N; ++i) {
    if (!list[i].is_string()) {
      fail(ErrorKind::SchemaViolation, std::string("descriptors.") + key + " has a non-string entry");
    }
    out[i] = list[i].get<std::string>();
  }
}

std::uint64_t read_count(const json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  fail(ErrorKind::InvalidRecord, std::string(key) + " must be a non-negative integer");
}

std::string optional_string(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return {};
  if (!it->is_string()) fail(ErrorKind::InvalidRecord, std::string(key) + " must be a string");
  return it->get<std::string>();
}

std::string vlm_raw_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

VideoRecord record_from_json(const json& doc) {
  try {
    VideoRecord r;
    r.id = doc.at("id").get<std::string>();
    r.title = optional_string(doc, "title");
    r.duration_s = doc.at("duration_s").get<double>();
    r.views = read_count(doc, "views");
    r.likes = read_count(doc, "likes");
    r.category = optional_string(doc, "category");
    r.upload_date = optional_string(doc, "upload_date");
    if (doc.contains("vlm_raw")) r.vlm_raw = vlm_raw_text(doc["vlm_raw"]);
    const auto& d = doc.at("descriptors");
    read_fixed(d.at("audio"), r.descriptors.audio, "audio");
    read_fixed(d.at("visual"), r.descriptors.visual, "visual");
    const auto& e = doc.at("engagement");
    r.engagement.raw_ratio = e.at("raw_ratio").get<double>();
    r.engagement.normalized = e.at("normalized").get<double>();
    return r;
  } catch (const json::exception& ex) {
    fail(ErrorKind::SchemaViolation, std::string("canonical record: ") + ex.what());
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<VideoRecord> read_corpus(const std::string& path) {
  std::vector<VideoRecord> records;
  std::size_t n = 0;
  for (const auto& line : read_lines(path)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto doc = json::parse(line, nullptr, false);
    if (doc.is_discarded()) {
      fail(ErrorKind::MalformedJson, path + ":" + std::to_string(n));
    }
    records.push_back(record_from_json(doc));
  }
  return records;
}

void write_corpus(std::ostream& out, const std::vector<VideoRecord>& records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

void write_corpus(const std::string& path, const std::vector<VideoRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  write_corpus(out, records);
}

ordered_json IngestReport::to_json() const {
  ordered_json doc;
  doc["total"] = total;
  doc["kept"] = kept;
  doc["dropped_count"] = dropped.size();
  doc["dropped"] = ordered_json::array();
  for (const auto& d : dropped) {
    doc["dropped"].push_back({{"line", d.line}, {"id", d.id}, {"reason", d.reason}});
  }
  doc["warnings"] = warnings;
  return doc;
}

namespace {

struct Pending {
  std::size_t line = 0;
  VideoRecord record;
  DescriptorCandidates candidates;
};

Pending parse_line(const std::string& line, std::size_t line_no, const IngestOptions& options,
                   std::string& id_out) {
  json doc = json::parse(line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    fail(ErrorKind::MalformedJson, "record is not a JSON object");
  }
  Pending p;
  p.line = line_no;
  VideoRecord& r = p.record;
  auto id_it = doc.find("id");
  if (id_it == doc.end() || !id_it->is_string() || id_it->get<std::string>().empty()) {
    fail(ErrorKind::InvalidRecord, "missing id");
  }
  r.id = id_it->get<std::string>();
  id_out = r.id;
  VideoRef ref{r.id, optional_string(doc, "title"), optional_string(doc, "url")};

  if (!doc.contains("views") && options.metadata != nullptr) {
    json meta = options.metadata->fetch(ref);
    for (auto& [key, value] : meta.items()) {
      if (!doc.contains(key)) doc[key] = value;
    }
    if (ref.title.empty()) ref.title = optional_string(doc, "title");
  }
  try {
    r.title = optional_string(doc, "title");
    r.category = optional_string(doc, "category");
    r.upload_date = optional_string(doc, "upload_date");
    r.duration_s = doc.at("duration_s").get<double>();
    r.views = read_count(doc, "views");
    r.likes = read_count(doc, "likes");
  } catch (const json::exception& ex) {
    fail(ErrorKind::InvalidRecord, std::string("metadata: ") + ex.what());
  }
  if (!(r.duration_s > 0.0) || r.duration_s > kMaxDurationSeconds) {
    fail(ErrorKind::InvalidRecord, "duration_s outside (0, 90]");
  }

  if (doc.contains("vlm_raw")) {
    r.vlm_raw = vlm_raw_text(doc["vlm_raw"]);
  } else if (!doc.contains("descriptors") && options.descriptors != nullptr) {
    r.vlm_raw = options.descriptors->fetch(ref);
  }
  if (!r.vlm_raw.empty()) {
    p.candidates = parse_vlm_response(r.vlm_raw);
  } else if (doc.contains("descriptors")) {
    const auto& d = doc["descriptors"];
    json shaped{{"audio", d.value("audio", json::array())},
                {"video", d.value("visual", json::array())}};
    p.candidates = parse_vlm_response(shaped.dump());
  } else {
    fail(ErrorKind::SchemaViolation, "record has neither vlm_raw nor descriptors");
  }
  // Zero-view records are dropped before labeling.
  compute_engagement(r.likes, r.views);
  return p;
}

}  // namespace

IngestResult ingest(const std::vector<std::string>& lines, const IngestOptions& options) {
  IngestResult result;
  auto& report = result.report;
  std::vector<Pending> pending;

  std::size_t line_no = 0;
  for (const auto& line : lines) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++report.total;
    std::string id;
    try {
      pending.push_back(parse_line(line, line_no, options, id));
    } catch (const Error& e) {
      report.dropped.push_back({line_no, id, e.what()});
    }
  }

  PhraseFrequency freq;
  for (const auto& p : pending) freq.add(p.candidates);

  std::vector<Pending> kept;
  kept.reserve(pending.size());
  for (auto& p : pending) {
    try {
      Warnings w;
      p.record.descriptors = filter_top5(p.candidates, freq, &w);
      for (auto& m : w.messages) report.warnings.push_back(p.record.id + ": " + m);
      kept.push_back(std::move(p));
    } catch (const Error& e) {
      report.dropped.push_back({p.line, p.record.id, e.what()});
    }
  }

  if (report.total == 0 ||
      static_cast<double>(report.dropped.size()) >
          options.max_failure_fraction * static_cast<double>(report.total)) {
    fail(ErrorKind::EmptyCorpus, std::to_string(report.dropped.size()) + " of " +
                                     std::to_string(report.total) + " records failed ingestion");
  }

  std::vector<double> ratios;
  ratios.reserve(kept.size());
  for (const auto& p : kept) ratios.push_back(compute_engagement(p.record.likes, p.record.views));
  Warnings w;
  auto normalized = normalize_engagement(ratios, options.scheme, &w);
  for (auto& m : w.messages) report.warnings.push_back(m);

  std::sort(report.dropped.begin(), report.dropped.end(),
            [](const DroppedRecord& a, const DroppedRecord& b) { return a.line < b.line; });
  for (std::size_t i = 0; i < kept.size(); ++i) {
    kept[i].record.engagement = {ratios[i], normalized[i]};
    result.records.push_back(std::move(kept[i].record));
  }
  report.kept = result.records.size();
  return result;
}

}  // namespace engage
