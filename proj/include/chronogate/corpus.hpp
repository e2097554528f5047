// Copyright 2026 The ChronoGate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronogate/date.hpp"
#include "chronogate/error.hpp"
#include "chronogate/text.hpp"

namespace chronogate {

using json = nlohmann::json;

/// One dated publication: the abstract is the ground-truth completion
/// target, pub_date is t_p.
struct PublicationRecord {
  std::string doi;
  std::string title;
  std::string abstract;
  Date pub_date;
  int breakthrough_year = 0;
  std::string breakthrough_label;
  std::string source;
  json extra = json::object();  // unknown JSONL fields, preserved on round-trip
};

/// A dated document in the simulated web environment.
struct Document {
  std::string id;
  Date date;
  std::string title;
  std::string body;
  std::string url;
};

inline constexpr int kMinAbstractTokens = 20;
inline constexpr int kMinPubYear = 1990;
inline constexpr int kMaxPubYear = 2100;

/// Returns every violated invariant, not just the first. Empty means ok.
inline std::vector<std::string> validate_record(const PublicationRecord& r) {
  std::vector<std::string> violations;
  if (r.doi.empty()) violations.push_back("doi is empty");
  const auto tokens = whitespace_tokens(r.abstract);
  if (tokens.size() < kMinAbstractTokens)
    violations.push_back("abstract has " + std::to_string(tokens.size()) +
                         " tokens, need >= " + std::to_string(kMinAbstractTokens));
  if (!is_valid_date(r.pub_date) || r.pub_date.year < kMinPubYear || r.pub_date.year > kMaxPubYear)
    violations.push_back("pub_date year " + std::to_string(r.pub_date.year) +
                         " outside [" + std::to_string(kMinPubYear) + ", " +
                         std::to_string(kMaxPubYear) + "]");
  if (r.breakthrough_year < r.pub_date.year - 1)
    violations.push_back("breakthrough_year " + std::to_string(r.breakthrough_year) +
                         " < pub_date.year - 1");
  return violations;
}

inline PublicationRecord record_from_json(const json& j) {
  PublicationRecord r;
  r.doi = j.value("doi", "");
  r.title = j.value("title", "");
  r.abstract = j.value("abstract", "");
  if (j.contains("pub_date")) r.pub_date = parse_date(j.at("pub_date").get<std::string>());
  r.breakthrough_year = j.value("breakthrough_year", 0);
  r.breakthrough_label = j.value("breakthrough_label", "");
  r.source = j.value("source", "");
  static const char* known[] = {"doi", "title", "abstract", "pub_date",
                                "breakthrough_year", "breakthrough_label", "source"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool is_known = false;
    for (const char* k : known) is_known = is_known || it.key() == k;
    if (!is_known) r.extra[it.key()] = it.value();
  }
  return r;
}

inline json record_to_json(const PublicationRecord& r) {
  json j = r.extra;
  j["doi"] = r.doi;
  j["title"] = r.title;
  j["abstract"] = r.abstract;
  j["pub_date"] = to_string(r.pub_date);
  j["breakthrough_year"] = r.breakthrough_year;
  j["breakthrough_label"] = r.breakthrough_label;
  j["source"] = r.source;
  return j;
}

struct SkippedLine {
  std::size_t line_no = 0;  // 1-based
  std::string doi;
  std::string reason;
};

struct LoadReport {
  std::vector<PublicationRecord> records;
  std::vector<SkippedLine> skipped;
};

/// Loads a JSONL dataset. Invalid records are skipped and reported unless
/// strict, in which case the first problem aborts the load.
inline LoadReport load_records(const std::filesystem::path& path, bool strict = false) {
  std::ifstream in(path);
  if (!in) raise(Errc::file_unreadable, "cannot open " + path.string());
  LoadReport report;
  std::unordered_set<std::string> seen_dois;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    PublicationRecord rec;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) raise(Errc::malformed_line, "not a JSON object");
      rec = record_from_json(j);
    } catch (const json::exception& e) {
      if (strict)
        raise(Errc::malformed_line, "line " + std::to_string(line_no) + ": " + e.what());
      report.skipped.push_back({line_no, "", std::string("malformed line: ") + e.what()});
      continue;
    } catch (const Error& e) {
      if (strict) throw;
      report.skipped.push_back({line_no, "", e.what()});
      continue;
    }
    auto violations = validate_record(rec);
    if (!rec.doi.empty() && !seen_dois.insert(rec.doi).second)
      violations.push_back("duplicate doi '" + rec.doi + "'");
    if (!violations.empty()) {
      std::string reason;
      for (const auto& v : violations) reason += (reason.empty() ? "" : "; ") + v;
      if (strict)
        raise(Errc::validation_failed, "line " + std::to_string(line_no) + " (" + rec.doi + "): " + reason);
      report.skipped.push_back({line_no, rec.doi, reason});
      continue;
    }
    report.records.push_back(std::move(rec));
  }
  return report;
}

inline void save_records(const std::filesystem::path& path,
                         const std::vector<PublicationRecord>& records) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_error, "cannot write " + path.string());
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

inline Document document_from_json(const json& j) {
  Document d;
  d.id = j.value("id", "");
  if (j.contains("date")) d.date = parse_date(j.at("date").get<std::string>());
  d.title = j.value("title", "");
  d.body = j.value("body", "");
  d.url = j.value("url", "");
  return d;
}

inline json document_to_json(const Document& d) {
  json j;
  j["id"] = d.id;
  j["date"] = to_string(d.date);
  j["title"] = d.title;
  j["body"] = d.body;
  if (!d.url.empty()) j["url"] = d.url;
  return j;
}

inline std::vector<Document> load_documents(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::file_unreadable, "cannot open " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      docs.push_back(document_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      raise(Errc::malformed_line, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

/// Publication abstracts dated at t_p, so the offline environment contains
/// the publication itself.
inline std::vector<Document> documents_from_records(const std::vector<PublicationRecord>& records) {
  std::vector<Document> docs;
  docs.reserve(records.size());
  for (const auto& r : records)
    docs.push_back({r.doi, r.pub_date, r.title, r.abstract, "doi:" + r.doi});
  return docs;
}

struct Posting {
  uint32_t doc = 0;  // index into documents()
  uint32_t tf = 0;
};

/// Immutable inverted index over document bodies. Rebuild to change.
class TemporalCorpus {
 public:
  TemporalCorpus() = default;

  const std::vector<Document>& documents() const { return docs_; }
  std::size_t size() const { return docs_.size(); }
  double avg_doc_length() const { return avg_doc_length_; }
  uint32_t doc_length(std::size_t i) const { return doc_lengths_[i]; }

  const std::vector<Posting>* postings(const std::string& term) const {
    auto it = index_.find(term);
    return it == index_.end() ? nullptr : &it->second;
  }

  std::vector<std::string> terms() const {
    std::vector<std::string> out;
    out.reserve(index_.size());
    for (const auto& [term, _] : index_) out.push_back(term);
    return out;
  }

  friend TemporalCorpus build_corpus(std::vector<Document> documents);

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::vector<Posting>> index_;
  std::vector<uint32_t> doc_lengths_;
  double avg_doc_length_ = 0.0;
};

inline TemporalCorpus build_corpus(std::vector<Document> documents) {
  TemporalCorpus corpus;
  std::unordered_set<std::string> ids;
  for (const auto& d : documents) {
    if (d.id.empty() || !ids.insert(d.id).second)
      raise(Errc::duplicate_doc_id, "document id '" + d.id + "'");
    if (d.body.empty()) raise(Errc::validation_failed, "document '" + d.id + "' has empty body");
    if (!is_valid_date(d.date)) raise(Errc::validation_failed, "document '" + d.id + "' has invalid date");
  }
  corpus.docs_ = std::move(documents);
  corpus.doc_lengths_.resize(corpus.docs_.size(), 0);
  uint64_t total_tokens = 0;
  for (uint32_t i = 0; i < corpus.docs_.size(); ++i) {
    const auto tokens = alnum_tokens(corpus.docs_[i].body);
    corpus.doc_lengths_[i] = static_cast<uint32_t>(tokens.size());
    total_tokens += tokens.size();
    std::unordered_map<std::string, uint32_t> tf;
    for (const auto& t : tokens) ++tf[t];
    for (auto& [term, count] : tf) corpus.index_[term].push_back({i, count});
  }
  corpus.avg_doc_length_ =
      corpus.docs_.empty() ? 0.0 : static_cast<double>(total_tokens) / corpus.docs_.size();
  return corpus;
}

}  // namespace chronogate
