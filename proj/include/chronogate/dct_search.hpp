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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronogate/corpus.hpp"
#include "chronogate/date.hpp"
#include "chronogate/error.hpp"
#include "chronogate/text.hpp"

namespace chronogate {

// ---------------------------------------------------------------------------
// Window algebra
// ---------------------------------------------------------------------------

/// Half-open-below window (lower, upper]: lower exclusive (absent means
/// unbounded below), upper inclusive.
struct DateWindow {
  std::optional<Date> lower;
  Date upper;

  bool contains(const Date& d) const {
    return (!lower || *lower < d) && !(upper < d);
  }

  std::string str() const {
    return "(" + (lower ? to_string(*lower) : std::string("-inf")) + ", " + to_string(upper) + "]";
  }

  friend bool operator==(const DateWindow&, const DateWindow&) = default;
};

inline DateWindow make_window(std::optional<Date> lower, Date upper) {
  if (!is_valid_date(upper)) raise(Errc::out_of_range, "upper bound is not a valid date");
  if (lower) {
    if (!is_valid_date(*lower)) raise(Errc::out_of_range, "lower bound is not a valid date");
    if (!(*lower < upper))
      raise(Errc::inverted_window,
            "lower " + to_string(*lower) + " must precede upper " + to_string(upper));
  }
  return DateWindow{lower, upper};
}

/// Shifts the year by k, clamping Feb 29 to Feb 28 in non-leap targets.
inline Date offset_years(const Date& d, int k) {
  Date shifted{d.year + k, d.month, d.day};
  if (shifted.year < 1900 || shifted.year > 2200)
    raise(Errc::out_of_range, "year " + std::to_string(shifted.year) + " outside [1900, 2200]");
  const int max_day = days_in_month(shifted.year, shifted.month);
  if (shifted.day > max_day) shifted.day = max_day;
  return shifted;
}

/// N consecutive one-year windows covering (t_minus, t_plus] with no gap or
/// overlap. The span must be a whole number of years.
inline std::vector<DateWindow> yearly_windows(const Date& t_minus, const Date& t_plus) {
  if (!(t_minus < t_plus))
    raise(Errc::inverted_window, "t_minus must precede t_plus");
  std::vector<DateWindow> windows;
  Date lo = t_minus;
  for (int i = 1; i <= 2200 - 1900; ++i) {
    const Date hi = offset_years(t_minus, i);
    windows.push_back(DateWindow{lo, hi});
    if (hi == t_plus) return windows;
    if (t_plus < hi) break;
    lo = hi;
  }
  raise(Errc::non_integral_span,
        "span " + to_string(t_minus) + " .. " + to_string(t_plus) + " is not a whole number of years");
}

// ---------------------------------------------------------------------------
// Search backends
// ---------------------------------------------------------------------------

/// Ranked excerpt returned by a search tool; the agent's observation unit.
struct Snippet {
  std::string doc_id;
  Date doc_date;
  std::string title;
  std::string text;
  double score = 0.0;
};

class SearchBackend {
 public:
  virtual ~SearchBackend() = default;
  virtual std::vector<Snippet> search(const std::string& query, const DateWindow& window,
                                      int k) const = 0;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
  int snippet_chars = 300;
};

namespace detail {

// Non-negative idf variant, ln(1 + (N - df + 0.5)/(df + 0.5)), so a document
// scores > 0 iff it matches at least one query term. Computed over the whole
// corpus, never per window: restricting the window can then only filter
// results, which keeps nested windows giving nested result sets.
inline double bm25_idf(std::size_t num_docs, std::size_t df) {
  return std::log(1.0 + (static_cast<double>(num_docs) - static_cast<double>(df) + 0.5) /
                            (static_cast<double>(df) + 0.5));
}

inline std::string make_snippet_text(const std::string& body, const std::string& center_term,
                                     int snippet_chars) {
  if (static_cast<int>(body.size()) <= snippet_chars) return body;
  std::size_t start = 0;
  if (auto span = find_token(body, center_term)) {
    const std::size_t center = span->begin + span->length / 2;
    const std::size_t half = static_cast<std::size_t>(snippet_chars) / 2;
    start = center > half ? center - half : 0;
  }
  if (start + snippet_chars > body.size()) start = body.size() - snippet_chars;
  return body.substr(start, snippet_chars);
}

}  // namespace detail

/// Top-k in-window documents by BM25 over the shared tokenizer. Zero-score
/// documents are excluded; ties break by doc_id ascending. The snippet is a
/// fixed-length character window centered on the first occurrence of the
/// highest-idf matching term.
inline std::vector<Snippet> bm25_search(const TemporalCorpus& corpus, const std::string& query,
                                        const DateWindow& window, int k,
                                        const Bm25Params& params = {}) {
  if (k <= 0) raise(Errc::invalid_argument, "k must be positive");
  std::vector<std::string> terms = alnum_tokens(query);
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

  const std::size_t n = corpus.size();
  struct Candidate {
    double score = 0.0;
    double best_idf = -1.0;
    std::string best_term;  // highest-idf matching term, for snippet centering
  };
  std::unordered_map<uint32_t, Candidate> candidates;
  for (const auto& term : terms) {
    const auto* postings = corpus.postings(term);
    if (!postings) continue;
    const double idf = detail::bm25_idf(n, postings->size());
    for (const auto& p : *postings) {
      const double dl = corpus.doc_length(p.doc);
      const double norm = params.k1 * (1.0 - params.b + params.b * dl / corpus.avg_doc_length());
      auto& c = candidates[p.doc];
      c.score += idf * (p.tf * (params.k1 + 1.0)) / (p.tf + norm);
      if (idf > c.best_idf || (idf == c.best_idf && term < c.best_term)) {
        c.best_idf = idf;
        c.best_term = term;
      }
    }
  }

  std::vector<std::pair<uint32_t, Candidate>> ranked;
  ranked.reserve(candidates.size());
  for (auto& [doc, c] : candidates) {
    if (c.score <= 0.0) continue;
    if (!window.contains(corpus.documents()[doc].date)) continue;
    ranked.emplace_back(doc, std::move(c));
  }
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.second.score != b.second.score) return a.second.score > b.second.score;
    return corpus.documents()[a.first].id < corpus.documents()[b.first].id;
  });
  if (ranked.size() > static_cast<std::size_t>(k)) ranked.resize(k);

  std::vector<Snippet> out;
  out.reserve(ranked.size());
  for (const auto& [doc, c] : ranked) {
    const Document& d = corpus.documents()[doc];
    out.push_back({d.id, d.date, d.title,
                   detail::make_snippet_text(d.body, c.best_term, params.snippet_chars), c.score});
  }
  return out;
}

class Bm25Backend : public SearchBackend {
 public:
  explicit Bm25Backend(std::shared_ptr<const TemporalCorpus> corpus, Bm25Params params = {})
      : corpus_(std::move(corpus)), params_(params) {}

  std::vector<Snippet> search(const std::string& query, const DateWindow& window,
                              int k) const override {
    return bm25_search(*corpus_, query, window, k, params_);
  }

 private:
  std::shared_ptr<const TemporalCorpus> corpus_;
  Bm25Params params_;
};

// ---------------------------------------------------------------------------
// Tool registration, parameter lock, audit
// ---------------------------------------------------------------------------

/// A date-controlled tool: a frozen window over a search backend.
struct ToolSpec {
  std::string tool_id;
  DateWindow window;
  std::shared_ptr<const SearchBackend> backend;
  int max_results = 10;
  bool frozen = false;  // set on registration; window/max_results immutable after
};

struct AuditEvent {
  std::string timestamp;
  std::string tool_id;
  std::string event_kind;  // invoke | param_mutation_rejected | unknown_tool
  json detail;
};

inline std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(ms));
  return buf;
}

/// Append-only event sink; appends are serialized.
class AuditLog {
 public:
  AuditLog() = default;
  explicit AuditLog(const std::filesystem::path& sink_path) {
    sink_.open(sink_path, std::ios::app);
    if (!sink_) raise(Errc::io_error, "cannot open audit sink " + sink_path.string());
  }

  void append(AuditEvent ev) {
    std::lock_guard lock(mu_);
    if (sink_.is_open()) {
      json j{{"timestamp", ev.timestamp},
             {"tool_id", ev.tool_id},
             {"event_kind", ev.event_kind},
             {"detail", ev.detail}};
      sink_ << j.dump() << '\n';
      sink_.flush();
    }
    events_.push_back(std::move(ev));
  }

  std::vector<AuditEvent> events() const {
    std::lock_guard lock(mu_);
    return events_;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return events_.size();
  }

  std::size_t count(const std::string& event_kind) const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& e : events_)
      if (e.event_kind == event_kind) ++n;
    return n;
  }

 private:
  mutable std::mutex mu_;
  std::vector<AuditEvent> events_;
  std::ofstream sink_;
};

struct ParamRejection {
  std::string tool_id;
  std::string key;
  std::string value;
};

struct ToolOutcome {
  enum class Status { ok, param_rejected, unknown_tool };
  Status status = Status::ok;
  std::vector<Snippet> snippets;
  ParamRejection rejection;

  bool ok() const { return status == Status::ok; }
};

/// Holds frozen ToolSpecs. Invocations either pass through to the backend
/// with the frozen window or get rejected: any requested parameter beyond
/// the query counts as an attempt to reset date control.
class ToolRegistry {
 public:
  explicit ToolRegistry(AuditLog* audit = nullptr) : audit_(audit) {}

  ToolRegistry(const std::vector<ToolSpec>& tools, AuditLog* audit = nullptr) : audit_(audit) {
    for (const auto& t : tools) register_tool(t);
  }

  const ToolSpec& register_tool(ToolSpec spec) {
    if (spec.tool_id.empty()) raise(Errc::invalid_argument, "tool_id is empty");
    if (!spec.backend) raise(Errc::invalid_argument, "tool '" + spec.tool_id + "' has no backend");
    if (spec.max_results <= 0) raise(Errc::invalid_argument, "max_results must be positive");
    if (by_id_.count(spec.tool_id))
      raise(Errc::invalid_argument, "tool '" + spec.tool_id + "' already registered");
    spec.frozen = true;
    specs_.push_back(std::move(spec));
    by_id_[specs_.back().tool_id] = specs_.size() - 1;
    return specs_.back();
  }

  const ToolSpec* find(const std::string& tool_id) const {
    auto it = by_id_.find(tool_id);
    return it == by_id_.end() ? nullptr : &specs_[it->second];
  }

  const std::vector<ToolSpec>& specs() const { return specs_; }

  ToolOutcome invoke(const std::string& tool_id, const std::string& query,
                     const std::map<std::string, std::string>& requested_params = {}) const {
    const ToolSpec* spec = find(tool_id);
    if (!spec) {
      audit({now_iso8601(), tool_id, "unknown_tool", json{{"query", query}}});
      return ToolOutcome{ToolOutcome::Status::unknown_tool, {}, {tool_id, "", ""}};
    }
    if (!requested_params.empty()) {
      const auto& [key, value] = *requested_params.begin();
      audit({now_iso8601(), tool_id, "param_mutation_rejected",
             json{{"attempted_key", key}, {"attempted_value", value}, {"query", query}}});
      return ToolOutcome{ToolOutcome::Status::param_rejected, {}, {tool_id, key, value}};
    }
    auto snippets = spec->backend->search(query, spec->window, spec->max_results);
    audit({now_iso8601(), tool_id, "invoke",
           json{{"query", query}, {"result_count", snippets.size()}}});
    return ToolOutcome{ToolOutcome::Status::ok, std::move(snippets), {}};
  }

 private:
  void audit(AuditEvent ev) const {
    if (audit_) audit_->append(std::move(ev));
  }

  std::vector<ToolSpec> specs_;
  std::unordered_map<std::string, std::size_t> by_id_;
  AuditLog* audit_ = nullptr;
};

}  // namespace chronogate
