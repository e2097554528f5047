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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronogate/agent.hpp"
#include "chronogate/cloze.hpp"
#include "chronogate/corpus.hpp"
#include "chronogate/dct_search.hpp"
#include "chronogate/error.hpp"
#include "chronogate/metrics.hpp"
#include "chronogate/rng.hpp"

namespace chronogate {

inline constexpr int kRunRecordSchemaVersion = 1;
inline constexpr const char* kRq1ToolId = "web_search";

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class Protocol { rq1, rq2 };

inline const char* protocol_name(Protocol p) { return p == Protocol::rq1 ? "rq1" : "rq2"; }

struct SubsetFilter {
  std::vector<int> years;        // keep records published in these years (empty = all)
  std::vector<std::string> dois; // keep these DOIs (empty = all)
  std::size_t limit = 0;         // keep at most this many, 0 = no cap
};

struct BackendSettings {
  std::string kind = "stub";  // stub | scripted | http
  std::vector<std::string> script;
  std::string script_path;  // JSON array of messages; used when script is empty
  ChatBackendConfig http;
};

struct EmbedderSettings {
  std::string kind = "hash";  // hash | remote
  int dimension = 256;
  std::string endpoint;
  std::string model;
};

struct SearchSettings {
  std::string kind = "bm25";  // bm25 | live
  int max_results = 10;
  int snippet_chars = 300;
  bool index_abstracts = true;  // add publication abstracts to the offline corpus
  std::string documents_path;   // auxiliary Document JSONL
  std::string live_url;
};

struct ExperimentConfig {
  std::string experiment_id = "experiment";
  Protocol protocol = Protocol::rq1;
  double gamma = 0.5;
  uint64_t seed = 0;
  SubsetFilter subset;
  std::vector<int> cutoff_offsets = {-3, 0, 3};              // RQ1
  std::optional<std::pair<Date, Date>> toolset_range;        // RQ2 (t_minus, t_plus)
  std::vector<AgentPattern> patterns = {AgentPattern::react, AgentPattern::react_cot};
  BackendSettings backend;
  EmbedderSettings embedder;
  SearchSettings search;
  int max_steps = 8;
  int workers = 1;
};

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.experiment_id = j.value("experiment_id", c.experiment_id);
  if (j.contains("protocol")) {
    const auto p = j.at("protocol").get<std::string>();
    if (p == "rq1") c.protocol = Protocol::rq1;
    else if (p == "rq2") c.protocol = Protocol::rq2;
    else raise(Errc::invalid_argument, "unknown protocol '" + p + "'");
  }
  c.gamma = j.value("gamma", c.gamma);
  c.seed = j.value("seed", c.seed);
  if (j.contains("subset")) {
    const auto& s = j.at("subset");
    c.subset.years = s.value("years", c.subset.years);
    c.subset.dois = s.value("dois", c.subset.dois);
    c.subset.limit = s.value("limit", c.subset.limit);
  }
  c.cutoff_offsets = j.value("cutoff_offsets", c.cutoff_offsets);
  if (j.contains("toolset_range")) {
    const auto& r = j.at("toolset_range");
    c.toolset_range = {parse_date(r.at("t_minus").get<std::string>()),
                       parse_date(r.at("t_plus").get<std::string>())};
  }
  if (j.contains("patterns")) {
    c.patterns.clear();
    for (const auto& p : j.at("patterns")) {
      const auto name = p.get<std::string>();
      if (name == "react") c.patterns.push_back(AgentPattern::react);
      else if (name == "react_cot") c.patterns.push_back(AgentPattern::react_cot);
      else raise(Errc::invalid_argument, "unknown pattern '" + name + "'");
    }
  }
  if (j.contains("backend")) {
    const auto& b = j.at("backend");
    c.backend.kind = b.value("kind", c.backend.kind);
    c.backend.script = b.value("script", c.backend.script);
    c.backend.script_path = b.value("script_path", c.backend.script_path);
    if (b.contains("http")) {
      const auto& h = b.at("http");
      c.backend.http.endpoint = h.value("endpoint", "");
      c.backend.http.model_name = h.value("model_name", "");
      c.backend.http.temperature = h.value("temperature", 0.0);
      c.backend.http.max_output_tokens = h.value("max_output_tokens", 1024);
      c.backend.http.timeout_seconds = h.value("timeout_seconds", 60.0);
    }
  }
  if (j.contains("embedder")) {
    const auto& e = j.at("embedder");
    c.embedder.kind = e.value("kind", c.embedder.kind);
    c.embedder.dimension = e.value("dimension", c.embedder.dimension);
    c.embedder.endpoint = e.value("endpoint", c.embedder.endpoint);
    c.embedder.model = e.value("model", c.embedder.model);
  }
  if (j.contains("search")) {
    const auto& s = j.at("search");
    c.search.kind = s.value("kind", c.search.kind);
    c.search.max_results = s.value("max_results", c.search.max_results);
    c.search.snippet_chars = s.value("snippet_chars", c.search.snippet_chars);
    c.search.index_abstracts = s.value("index_abstracts", c.search.index_abstracts);
    c.search.documents_path = s.value("documents_path", c.search.documents_path);
    c.search.live_url = s.value("live_url", c.search.live_url);
  }
  c.max_steps = j.value("max_steps", c.max_steps);
  c.workers = j.value("workers", c.workers);
  if (c.gamma < 0.0 || c.gamma > 1.0) raise(Errc::invalid_argument, "gamma must be in [0, 1]");
  if (c.workers < 1) raise(Errc::invalid_argument, "workers must be >= 1");
  if (c.max_steps < 1) raise(Errc::invalid_argument, "max_steps must be >= 1");
  if (c.protocol == Protocol::rq1 && c.cutoff_offsets.empty())
    raise(Errc::invalid_argument, "rq1 requires non-empty cutoff_offsets");
  if (c.protocol == Protocol::rq2 && !c.toolset_range)
    raise(Errc::invalid_argument, "rq2 requires toolset_range");
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::file_unreadable, "cannot open " + path.string());
  try {
    json j;
    in >> j;
    return config_from_json(j);
  } catch (const json::exception& e) {
    raise(Errc::malformed_line, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Run records
// ---------------------------------------------------------------------------

struct RunRecord {
  int schema_version = kRunRecordSchemaVersion;
  std::string run_id;
  std::string experiment_id;
  std::string protocol;
  std::string source_doi;
  int pub_year = 0;
  double gamma = 0.0;
  uint64_t seed = 0;
  std::string model;
  std::string pattern;              // react | react_cot | input
  std::string cutoff;               // tp-3 | tp | tp+3 | ... | "-"
  std::string tool_window;          // window of the single RQ1 tool, "-" otherwise
  std::vector<std::string> toolset;       // RQ2 tool ids shown to the agent
  std::vector<std::string> chosen_tools;  // tool ids in invocation order
  std::string trajectory_ref;
  std::string final_text;
  MetricReport metrics;
  double wall_time_ms = 0.0;
  std::string status = "ok";  // ok | budget_exhausted | backend_error
  std::string error;
};

inline json run_record_to_json(const RunRecord& r) {
  json m{{"rouge_l_precision", r.metrics.rouge_l_precision},
         {"rouge_l_recall", r.metrics.rouge_l_recall},
         {"rouge_l_f", r.metrics.rouge_l_f},
         {"sts", r.metrics.sts},
         {"candidate_tokens", r.metrics.candidate_tokens},
         {"reference_tokens", r.metrics.reference_tokens}};
  return json{{"schema_version", r.schema_version},
              {"run_id", r.run_id},
              {"experiment_id", r.experiment_id},
              {"protocol", r.protocol},
              {"source_doi", r.source_doi},
              {"pub_year", r.pub_year},
              {"gamma", r.gamma},
              {"seed", r.seed},
              {"model", r.model},
              {"pattern", r.pattern},
              {"cutoff", r.cutoff},
              {"tool_window", r.tool_window},
              {"toolset", r.toolset},
              {"chosen_tools", r.chosen_tools},
              {"trajectory_ref", r.trajectory_ref},
              {"final_text", r.final_text},
              {"metrics", m},
              {"wall_time_ms", r.wall_time_ms},
              {"status", r.status},
              {"error", r.error}};
}

inline RunRecord run_record_from_json(const json& j) {
  const int version = j.value("schema_version", 0);
  if (version > kRunRecordSchemaVersion)
    raise(Errc::schema_mismatch, "record schema version " + std::to_string(version) +
                                     " is newer than supported " +
                                     std::to_string(kRunRecordSchemaVersion));
  RunRecord r;
  r.schema_version = version;
  r.run_id = j.value("run_id", "");
  r.experiment_id = j.value("experiment_id", "");
  r.protocol = j.value("protocol", "");
  r.source_doi = j.value("source_doi", "");
  r.pub_year = j.value("pub_year", 0);
  r.gamma = j.value("gamma", 0.0);
  r.seed = j.value("seed", uint64_t{0});
  r.model = j.value("model", "");
  r.pattern = j.value("pattern", "");
  r.cutoff = j.value("cutoff", "");
  r.tool_window = j.value("tool_window", "");
  r.toolset = j.value("toolset", std::vector<std::string>{});
  r.chosen_tools = j.value("chosen_tools", std::vector<std::string>{});
  r.trajectory_ref = j.value("trajectory_ref", "");
  r.final_text = j.value("final_text", "");
  if (j.contains("metrics")) {
    const auto& m = j.at("metrics");
    r.metrics.rouge_l_precision = m.value("rouge_l_precision", 0.0);
    r.metrics.rouge_l_recall = m.value("rouge_l_recall", 0.0);
    r.metrics.rouge_l_f = m.value("rouge_l_f", 0.0);
    r.metrics.sts = m.value("sts", 0.0);
    r.metrics.candidate_tokens = m.value("candidate_tokens", int64_t{0});
    r.metrics.reference_tokens = m.value("reference_tokens", int64_t{0});
  }
  r.wall_time_ms = j.value("wall_time_ms", 0.0);
  r.status = j.value("status", "ok");
  r.error = j.value("error", "");
  return r;
}

inline void persist(const std::filesystem::path& path, const std::vector<RunRecord>& records,
                    bool append = false) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) raise(Errc::io_error, "cannot write " + path.string());
  for (const auto& r : records) out << run_record_to_json(r).dump() << '\n';
}

inline std::vector<RunRecord> load_run_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::file_unreadable, "cannot open " + path.string());
  std::vector<RunRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      records.push_back(run_record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      raise(Errc::malformed_line, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// Trajectory persistence
// ---------------------------------------------------------------------------

inline json step_to_json(const TrajectoryStep& s) {
  json action;
  if (s.action.type == ActionType::tool_call) {
    action = json{{"type", "tool_call"},
                  {"tool_id", s.action.tool_id},
                  {"query", s.action.query},
                  {"params", s.action.params}};
  } else {
    action = json{{"type", "final_answer"}, {"text", s.action.text}};
  }
  return json{{"observation", s.observation}, {"reasoning", s.reasoning}, {"action", action}};
}

inline TrajectoryStep step_from_json(const json& j) {
  TrajectoryStep s;
  s.observation = j.value("observation", "");
  s.reasoning = j.value("reasoning", "");
  const auto& a = j.at("action");
  if (a.at("type").get<std::string>() == "tool_call") {
    s.action.type = ActionType::tool_call;
    s.action.tool_id = a.value("tool_id", "");
    s.action.query = a.value("query", "");
    s.action.params = a.value("params", std::map<std::string, std::string>{});
  } else {
    s.action.type = ActionType::final_answer;
    s.action.text = a.value("text", "");
  }
  return s;
}

/// Owns an output directory: RunRecord JSONL, per-run trajectory files, and
/// the audit sink live underneath it.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path root)
      : root_(std::move(root)), audit_(prepare(root_) / "audit.jsonl") {
    std::filesystem::create_directories(root_ / "trajectories");
  }

  const std::filesystem::path& root() const { return root_; }
  AuditLog& audit() { return audit_; }
  std::filesystem::path records_path() const { return root_ / "records.jsonl"; }

  static std::string trajectory_ref(const std::string& run_id) {
    return "trajectories/" + run_id + ".jsonl";
  }

  std::string write_trajectory(const std::string& run_id,
                               const std::vector<TrajectoryStep>& steps) const {
    const std::string ref = trajectory_ref(run_id);
    std::ofstream out(root_ / ref);
    if (!out) raise(Errc::io_error, "cannot write trajectory for " + run_id);
    for (const auto& s : steps) out << step_to_json(s).dump() << '\n';
    return ref;
  }

  std::vector<TrajectoryStep> read_trajectory(const std::string& ref) const {
    std::ifstream in(root_ / ref);
    if (!in) raise(Errc::file_unreadable, "cannot open trajectory " + ref);
    std::vector<TrajectoryStep> steps;
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      steps.push_back(step_from_json(json::parse(line)));
    }
    return steps;
  }

 private:
  static std::filesystem::path prepare(const std::filesystem::path& root) {
    std::filesystem::create_directories(root);
    return root;
  }

  std::filesystem::path root_;
  AuditLog audit_;
};

// ---------------------------------------------------------------------------
// Protocol execution
// ---------------------------------------------------------------------------

/// Per-record seed: adding or removing records never shifts other records'
/// masks.
inline uint64_t record_seed(uint64_t global_seed, const std::string& doi) {
  return splitmix64_once(global_seed ^ fnv1a64(doi));
}

inline std::string sanitize_id(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s)
    out.push_back(is_ascii_alnum(c) || c == '.' || c == '-' ? static_cast<char>(c) : '_');
  return out;
}

inline std::string cutoff_label(int k) {
  if (k == 0) return "tp";
  return k > 0 ? "tp+" + std::to_string(k) : "tp" + std::to_string(k);
}

/// How the runner obtains its model, embedder, and (optionally) a live
/// search backend. The CLI wires live adapters here; tests and offline runs
/// use make_offline_env.
struct RunnerEnv {
  std::function<std::unique_ptr<ChatModel>()> make_model;
  std::shared_ptr<const EmbeddingProvider> embedder;
  std::shared_ptr<const SearchBackend> search_override;  // replaces BM25 when set
};

inline RunnerEnv make_offline_env(const ExperimentConfig& config) {
  RunnerEnv env;
  if (config.backend.kind == "scripted") {
    std::vector<std::string> script = config.backend.script;
    if (script.empty() && !config.backend.script_path.empty()) {
      std::ifstream in(config.backend.script_path);
      if (!in) raise(Errc::file_unreadable, "cannot open script " + config.backend.script_path);
      json j;
      in >> j;
      script = j.get<std::vector<std::string>>();
    }
    if (script.empty()) raise(Errc::invalid_argument, "scripted backend needs a script");
    env.make_model = [script] { return std::make_unique<ScriptedChatModel>(script); };
  } else if (config.backend.kind == "stub") {
    env.make_model = [] { return std::make_unique<OfflineStubModel>(); };
  } else {
    raise(Errc::invalid_argument,
          "backend kind '" + config.backend.kind + "' is not an offline backend");
  }
  env.embedder = std::make_shared<HashEmbedder>(config.embedder.dimension);
  return env;
}

inline std::vector<PublicationRecord> apply_subset(const std::vector<PublicationRecord>& records,
                                                   const SubsetFilter& subset) {
  std::vector<PublicationRecord> out;
  for (const auto& r : records) {
    if (!subset.years.empty() &&
        std::find(subset.years.begin(), subset.years.end(), r.pub_date.year) ==
            subset.years.end())
      continue;
    if (!subset.dois.empty() &&
        std::find(subset.dois.begin(), subset.dois.end(), r.doi) == subset.dois.end())
      continue;
    out.push_back(r);
    if (subset.limit > 0 && out.size() == subset.limit) break;
  }
  return out;
}

namespace detail {

inline void run_jobs(std::size_t count, int workers,
                     const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  const int n = std::min<int>(workers, static_cast<int>(count));
  pool.reserve(n);
  for (int w = 0; w < n; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

inline std::vector<std::string> chosen_tool_ids(const std::vector<TrajectoryStep>& trajectory) {
  std::vector<std::string> out;
  for (const auto& s : trajectory)
    if (s.action.type == ActionType::tool_call) out.push_back(s.action.tool_id);
  return out;
}

struct AgentJobResult {
  AgentRunResult run;
  std::string model_name;
};

inline AgentJobResult execute_agent(const std::string& prompt, AgentPattern pattern,
                                    int max_steps, std::vector<ToolSpec> tools,
                                    const RunnerEnv& env, AuditLog* audit) {
  AgentConfig agent_config;
  agent_config.pattern = pattern;
  agent_config.max_steps = max_steps;
  agent_config.tools = std::move(tools);
  auto model = env.make_model();
  AgentJobResult out;
  out.model_name = model->model_name();
  out.run = run_agent(prompt, agent_config, *model, audit);
  return out;
}

}  // namespace detail

/// RQ1: for each record and offset k, a single tool frozen to
/// (-inf, t_p + k years], plus one Input baseline row per record that scores
/// the masked text itself.
inline std::vector<RunRecord> run_rq1(const ExperimentConfig& config,
                                      std::shared_ptr<const TemporalCorpus> corpus,
                                      const std::vector<PublicationRecord>& records,
                                      RunStore& store, const RunnerEnv& env) {
  if (config.protocol != Protocol::rq1) raise(Errc::invalid_argument, "config.protocol != rq1");
  if (config.cutoff_offsets.empty()) raise(Errc::invalid_argument, "cutoff_offsets is empty");
  const auto selected = apply_subset(records, config.subset);

  struct Job {
    const PublicationRecord* record;
    std::optional<int> offset;  // nullopt = Input baseline row
  };
  std::vector<Job> jobs;
  for (const auto& r : selected) {
    jobs.push_back({&r, std::nullopt});
    for (int k : config.cutoff_offsets) jobs.push_back({&r, k});
  }

  std::vector<RunRecord> out(jobs.size());
  detail::run_jobs(jobs.size(), config.workers, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    const Job& job = jobs[i];
    const PublicationRecord& rec = *job.record;
    RunRecord row;
    row.experiment_id = config.experiment_id;
    row.protocol = "rq1";
    row.source_doi = rec.doi;
    row.pub_year = rec.pub_date.year;
    row.gamma = config.gamma;
    row.seed = record_seed(config.seed, rec.doi);
    try {
      const ClozeTask task = mask_text(rec.abstract, config.gamma, row.seed, rec.doi);
      if (!job.offset) {
        row.run_id = config.experiment_id + "." + sanitize_id(rec.doi) + ".input";
        row.model = "input";
        row.pattern = "input";
        row.cutoff = "-";
        row.tool_window = "-";
        row.final_text = task.masked_text;
        row.metrics = score_completion(task.masked_text, rec.abstract, *env.embedder);
        row.trajectory_ref = store.write_trajectory(row.run_id, {});
      } else {
        const int k = *job.offset;
        row.run_id =
            config.experiment_id + "." + sanitize_id(rec.doi) + "." + sanitize_id(cutoff_label(k));
        row.pattern = pattern_name(AgentPattern::react);
        row.cutoff = cutoff_label(k);
        const DateWindow window = make_window(std::nullopt, offset_years(rec.pub_date, k));
        row.tool_window = window.str();
        std::shared_ptr<const SearchBackend> backend = env.search_override;
        if (!backend)
          backend = std::make_shared<Bm25Backend>(
              corpus, Bm25Params{1.2, 0.75, config.search.snippet_chars});
        ToolSpec tool{kRq1ToolId, window, backend, config.search.max_results};
        const std::string prompt = render_completion_prompt(task);
        auto agent = detail::execute_agent(prompt, AgentPattern::react, config.max_steps,
                                           {tool}, env, &store.audit());
        row.model = agent.model_name;
        row.status = status_name(agent.run.status);
        row.error = agent.run.error;
        row.final_text = agent.run.final_text;
        row.chosen_tools = detail::chosen_tool_ids(agent.run.trajectory);
        row.trajectory_ref = store.write_trajectory(row.run_id, agent.run.trajectory);
        if (agent.run.status != RunStatus::backend_error)
          row.metrics = score_completion(agent.run.final_text, rec.abstract, *env.embedder);
      }
    } catch (const Error& e) {
      row.status = "backend_error";
      row.error = e.what();
      if (row.run_id.empty())
        row.run_id = config.experiment_id + "." + sanitize_id(rec.doi) + ".job" + std::to_string(i);
      row.trajectory_ref = store.write_trajectory(row.run_id, {});
    }
    row.wall_time_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0).count();
    out[i] = std::move(row);
  });
  return out;
}

inline std::string yearly_tool_id(const DateWindow& w) {
  return "search_" + std::to_string(w.lower->year) + "_" + std::to_string(w.upper.year);
}

/// RQ2: one frozen tool per yearly window; the agent picks. Runs the grid
/// of selected records x agent patterns.
inline std::vector<RunRecord> run_rq2(const ExperimentConfig& config,
                                      std::shared_ptr<const TemporalCorpus> corpus,
                                      const std::vector<PublicationRecord>& records,
                                      RunStore& store, const RunnerEnv& env) {
  if (config.protocol != Protocol::rq2) raise(Errc::invalid_argument, "config.protocol != rq2");
  if (!config.toolset_range) raise(Errc::invalid_argument, "toolset_range is required");
  if (config.patterns.empty()) raise(Errc::invalid_argument, "patterns is empty");
  const auto windows = yearly_windows(config.toolset_range->first, config.toolset_range->second);
  const auto selected = apply_subset(records, config.subset);

  std::shared_ptr<const SearchBackend> backend = env.search_override;
  if (!backend)
    backend = std::make_shared<Bm25Backend>(corpus,
                                            Bm25Params{1.2, 0.75, config.search.snippet_chars});
  std::vector<ToolSpec> toolset;
  std::vector<std::string> tool_ids;
  for (const auto& w : windows) {
    toolset.push_back({yearly_tool_id(w), w, backend, config.search.max_results});
    tool_ids.push_back(toolset.back().tool_id);
  }

  struct Job {
    const PublicationRecord* record;
    AgentPattern pattern;
  };
  std::vector<Job> jobs;
  for (const auto& r : selected)
    for (const auto p : config.patterns) jobs.push_back({&r, p});

  std::vector<RunRecord> out(jobs.size());
  detail::run_jobs(jobs.size(), config.workers, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    const Job& job = jobs[i];
    const PublicationRecord& rec = *job.record;
    RunRecord row;
    row.experiment_id = config.experiment_id;
    row.protocol = "rq2";
    row.source_doi = rec.doi;
    row.pub_year = rec.pub_date.year;
    row.gamma = config.gamma;
    row.seed = record_seed(config.seed, rec.doi);
    row.pattern = pattern_name(job.pattern);
    row.cutoff = "-";
    row.tool_window = "-";
    row.toolset = tool_ids;
    row.run_id =
        config.experiment_id + "." + sanitize_id(rec.doi) + "." + pattern_name(job.pattern);
    try {
      const ClozeTask task = mask_text(rec.abstract, config.gamma, row.seed, rec.doi);
      const std::string prompt =
          render_selection_prompt(task, toolset, job.pattern == AgentPattern::react_cot);
      auto agent = detail::execute_agent(prompt, job.pattern, config.max_steps, toolset, env,
                                         &store.audit());
      row.model = agent.model_name;
      row.status = status_name(agent.run.status);
      row.error = agent.run.error;
      row.final_text = agent.run.final_text;
      row.chosen_tools = detail::chosen_tool_ids(agent.run.trajectory);
      row.trajectory_ref = store.write_trajectory(row.run_id, agent.run.trajectory);
      if (agent.run.status != RunStatus::backend_error)
        row.metrics = score_completion(agent.run.final_text, rec.abstract, *env.embedder);
    } catch (const Error& e) {
      row.status = "backend_error";
      row.error = e.what();
      row.trajectory_ref = store.write_trajectory(row.run_id, {});
    }
    row.wall_time_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0).count();
    out[i] = std::move(row);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation and reports
// ---------------------------------------------------------------------------

enum class YearBucketing { single_years, split_2010 };

inline std::string year_bucket(int year, YearBucketing mode) {
  if (mode == YearBucketing::split_2010) return year >= 2010 ? "since2010" : "pre2010";
  return std::to_string(year);
}

struct AggregateRow {
  std::vector<std::pair<std::string, std::string>> group;  // (key, value) in request order
  double mean_rouge_l_f = 0.0;
  double mean_sts = 0.0;
  std::size_t count = 0;
};

inline const std::vector<std::string>& aggregate_keys() {
  static const std::vector<std::string> keys{"model", "pattern", "cutoff",
                                             "publication_year_bucket", "gamma"};
  return keys;
}

/// Arithmetic means of Rouge-L F and STS per group over ok-status records.
/// Rows come back in deterministic group-key order.
inline std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records,
                                           const std::vector<std::string>& group_keys,
                                           YearBucketing bucketing = YearBucketing::single_years) {
  if (records.empty()) raise(Errc::empty_input, "no records to aggregate");
  if (group_keys.empty()) raise(Errc::invalid_argument, "group_keys is empty");
  for (const auto& k : group_keys) {
    const auto& allowed = aggregate_keys();
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      raise(Errc::invalid_argument, "unknown group key '" + k + "'");
  }
  auto key_value = [&](const RunRecord& r, const std::string& key) -> std::string {
    if (key == "model") return r.model;
    if (key == "pattern") return r.pattern;
    if (key == "cutoff") return r.cutoff;
    if (key == "publication_year_bucket") return year_bucket(r.pub_year, bucketing);
    json g = r.gamma;  // shortest round-trip formatting
    return g.dump();
  };

  std::map<std::vector<std::string>, AggregateRow> groups;
  for (const auto& r : records) {
    if (r.status != "ok") continue;
    std::vector<std::string> values;
    values.reserve(group_keys.size());
    for (const auto& k : group_keys) values.push_back(key_value(r, k));
    auto& row = groups[values];
    if (row.count == 0)
      for (std::size_t i = 0; i < group_keys.size(); ++i)
        row.group.emplace_back(group_keys[i], values[i]);
    row.mean_rouge_l_f += r.metrics.rouge_l_f;
    row.mean_sts += r.metrics.sts;
    ++row.count;
  }

  std::vector<AggregateRow> rows;
  rows.reserve(groups.size());
  for (auto& [_, row] : groups) {
    row.mean_rouge_l_f /= static_cast<double>(row.count);
    row.mean_sts /= static_cast<double>(row.count);
    rows.push_back(std::move(row));
  }
  return rows;
}

enum class ReportFormat { markdown, csv, svg };

inline std::string format_mean(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline std::string render_csv(const std::vector<AggregateRow>& rows) {
  if (rows.empty()) raise(Errc::empty_input, "no rows to report");
  std::string out;
  for (const auto& [key, _] : rows.front().group) out += key + ",";
  out += "mean_rouge_l_f,mean_sts,count\n";
  for (const auto& r : rows) {
    for (const auto& [_, value] : r.group) out += value + ",";
    out += format_mean(r.mean_rouge_l_f) + "," + format_mean(r.mean_sts) + "," +
           std::to_string(r.count) + "\n";
  }
  return out;
}

/// Markdown table in the paper's layout: one column pair (Rouge-L, STS) per
/// publication-year bucket, remaining group keys as leading row labels.
inline std::string render_markdown(const std::vector<AggregateRow>& rows) {
  if (rows.empty()) raise(Errc::empty_input, "no rows to report");
  std::vector<std::string> label_keys;
  bool has_bucket = false;
  for (const auto& [key, _] : rows.front().group) {
    if (key == "publication_year_bucket") has_bucket = true;
    else label_keys.push_back(key);
  }

  std::vector<std::string> buckets;
  if (has_bucket) {
    for (const auto& r : rows)
      for (const auto& [key, value] : r.group)
        if (key == "publication_year_bucket" &&
            std::find(buckets.begin(), buckets.end(), value) == buckets.end())
          buckets.push_back(value);
    std::sort(buckets.begin(), buckets.end());
  } else {
    buckets.push_back("all");
  }

  auto labels_of = [&](const AggregateRow& r) {
    std::vector<std::string> labels;
    for (const auto& [key, value] : r.group)
      if (key != "publication_year_bucket") labels.push_back(value);
    return labels;
  };
  auto bucket_of = [&](const AggregateRow& r) -> std::string {
    for (const auto& [key, value] : r.group)
      if (key == "publication_year_bucket") return value;
    return "all";
  };

  std::vector<std::vector<std::string>> label_rows;
  std::map<std::pair<std::vector<std::string>, std::string>, const AggregateRow*> cells;
  for (const auto& r : rows) {
    auto labels = labels_of(r);
    if (std::find(label_rows.begin(), label_rows.end(), labels) == label_rows.end())
      label_rows.push_back(labels);
    cells[{labels, bucket_of(r)}] = &r;
  }
  std::sort(label_rows.begin(), label_rows.end());

  std::string out = "|";
  for (const auto& k : label_keys) out += " " + k + " |";
  if (label_keys.empty()) out += " group |";
  for (const auto& b : buckets) out += " " + b + " Rouge-L | " + b + " STS |";
  out += "\n|";
  const std::size_t n_label_cols = label_keys.empty() ? 1 : label_keys.size();
  for (std::size_t i = 0; i < n_label_cols + 2 * buckets.size(); ++i) out += " --- |";
  out += "\n";
  for (const auto& labels : label_rows) {
    out += "|";
    for (const auto& l : labels) out += " " + l + " |";
    if (labels.empty()) out += " all |";
    for (const auto& b : buckets) {
      auto it = cells.find({labels, b});
      if (it == cells.end()) {
        out += " - | - |";
      } else {
        out += " " + format_mean(it->second->mean_rouge_l_f) + " | " +
               format_mean(it->second->mean_sts) + " |";
      }
    }
    out += "\n";
  }
  return out;
}

/// Grouped-bar chart of mean STS: one bar group per cutoff value, one bar
/// per remaining group label inside it.
inline std::string render_svg(const std::vector<AggregateRow>& rows) {
  if (rows.empty()) raise(Errc::empty_input, "no rows to report");
  auto value_of = [](const AggregateRow& r, const std::string& key,
                     const std::string& fallback) -> std::string {
    for (const auto& [k, v] : r.group)
      if (k == key) return v;
    return fallback;
  };

  std::vector<std::string> cutoffs;
  for (const auto& r : rows) {
    const auto c = value_of(r, "cutoff", "all");
    if (std::find(cutoffs.begin(), cutoffs.end(), c) == cutoffs.end()) cutoffs.push_back(c);
  }
  std::sort(cutoffs.begin(), cutoffs.end());

  const int width = 900, height = 420, margin = 50;
  const double plot_h = height - 2.0 * margin;
  const double group_w = (width - 2.0 * margin) / static_cast<double>(cutoffs.size());
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                    std::to_string(width) + "\" height=\"" + std::to_string(height) + "\">\n";
  svg += "<line x1=\"" + std::to_string(margin) + "\" y1=\"" + std::to_string(height - margin) +
         "\" x2=\"" + std::to_string(width - margin) + "\" y2=\"" +
         std::to_string(height - margin) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + std::to_string(margin) + "\" y1=\"" + std::to_string(margin) +
         "\" x2=\"" + std::to_string(margin) + "\" y2=\"" + std::to_string(height - margin) +
         "\" stroke=\"black\"/>\n";
  static const char* palette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52",
                                  "#8172b3", "#937860", "#da8bc3", "#8c8c8c"};
  for (std::size_t g = 0; g < cutoffs.size(); ++g) {
    std::vector<const AggregateRow*> members;
    for (const auto& r : rows)
      if (value_of(r, "cutoff", "all") == cutoffs[g]) members.push_back(&r);
    const double x0 = margin + g * group_w;
    const double bar_w = group_w / (members.size() + 1.0);
    svg += "<g class=\"bar-group\" data-cutoff=\"" + cutoffs[g] + "\">\n";
    for (std::size_t m = 0; m < members.size(); ++m) {
      const double h = members[m]->mean_sts * plot_h;
      const double x = x0 + bar_w * (m + 0.5);
      const double y = height - margin - h;
      svg += "<rect x=\"" + format_mean(x) + "\" y=\"" + format_mean(y) + "\" width=\"" +
             format_mean(bar_w * 0.9) + "\" height=\"" + format_mean(h) + "\" fill=\"" +
             palette[m % 8] + "\"/>\n";
    }
    svg += "<text x=\"" + format_mean(x0 + group_w / 2) + "\" y=\"" +
           std::to_string(height - margin + 20) + "\" text-anchor=\"middle\" font-size=\"12\">" +
           cutoffs[g] + "</text>\n";
    svg += "</g>\n";
  }
  svg += "<text x=\"" + std::to_string(margin) + "\" y=\"" + std::to_string(margin - 10) +
         "\" font-size=\"12\">mean STS</text>\n";
  svg += "</svg>\n";
  return svg;
}

inline void emit_report(const std::vector<AggregateRow>& rows, ReportFormat format,
                        const std::filesystem::path& path) {
  std::string content;
  switch (format) {
    case ReportFormat::markdown: content = render_markdown(rows); break;
    case ReportFormat::csv: content = render_csv(rows); break;
    case ReportFormat::svg: content = render_svg(rows); break;
  }
  std::ofstream out(path);
  if (!out) raise(Errc::io_error, "cannot write " + path.string());
  out << content;
}

}  // namespace chronogate
