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

// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the process exits non-zero if any criterion fails.
//
// Set CHRONOGATE_UPDATE_GOLDENS=1 to rewrite the frozen trajectory goldens
// instead of comparing against them.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "chronogate/chronogate.hpp"
#include "chronogate/net.hpp"

using namespace chronogate;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct CheckFailure {
  std::string message;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw CheckFailure{message};
}

void criterion(const std::string& name, const std::function<void()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body();
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0).count();
    std::printf("PASS  %-28s (%.0f ms)\n", name.c_str(), ms);
  } catch (const CheckFailure& f) {
    ++g_failures;
    std::printf("FAIL  %-28s %s\n", name.c_str(), f.message.c_str());
  } catch (const std::exception& e) {
    ++g_failures;
    std::printf("FAIL  %-28s unexpected error: %s\n", name.c_str(), e.what());
  }
}

fs::path data_dir() { return fs::path(CHRONOGATE_TEST_DATA_DIR); }

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("chronogate_acceptance_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string records_without_wall_time(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open " + path.string());
  std::string out, line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    j.erase("wall_time_ms");
    out += j.dump() + "\n";
  }
  return out;
}

// Brute-force LCS oracle: enumerate subsequences of the shorter list.
bool is_subsequence(const std::vector<std::string>& needle,
                    const std::vector<std::string>& haystack) {
  std::size_t i = 0;
  for (const auto& tok : haystack)
    if (i < needle.size() && needle[i] == tok) ++i;
  return i == needle.size();
}

std::size_t lcs_brute_force(const std::vector<std::string>& a,
                            const std::vector<std::string>& b) {
  const auto& shorter = a.size() <= b.size() ? a : b;
  const auto& longer = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  for (std::size_t mask = 0; mask < (1ull << shorter.size()); ++mask) {
    std::vector<std::string> sub;
    for (std::size_t i = 0; i < shorter.size(); ++i)
      if (mask & (1ull << i)) sub.push_back(shorter[i]);
    if (sub.size() > best && is_subsequence(sub, longer)) best = sub.size();
  }
  return best;
}

std::string serialize_trajectory(const std::vector<TrajectoryStep>& steps) {
  std::string out;
  for (const auto& s : steps) out += step_to_json(s).dump() + "\n";
  return out;
}

// --------------------------------------------------------------------------
// Criteria
// --------------------------------------------------------------------------

void lcs_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937 gen(20240810);
  std::uniform_int_distribution<int> len(0, 12), word(0, 5);
  static const char* vocab[] = {"a", "b", "c", "d", "e", "f"};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> a, b;
    for (int i = len(gen); i > 0; --i) a.push_back(vocab[word(gen)]);
    for (int i = len(gen); i > 0; --i) b.push_back(vocab[word(gen)]);
    const auto fast = lcs_length(a, b);
    const auto brute = lcs_brute_force(a, b);
    require(fast == brute, "lcs mismatch at trial " + std::to_string(trial) + ": " +
                               std::to_string(fast) + " vs " + std::to_string(brute));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  require(secs < 10.0, "oracle took " + std::to_string(secs) + " s, budget is 10 s");
}

void rouge_fixture() {
  const auto pair = rouge_l("the cat sat on the mat", "the cat ran on a mat");
  require(pair.rouge_l_precision == 4.0 / 6.0, "precision != 4/6");
  require(pair.rouge_l_recall == 4.0 / 6.0, "recall != 4/6");
  require(pair.rouge_l_f == 4.0 / 6.0, "F != 4/6");
  require(rouge_l("same text here", "same text here").rouge_l_f == 1.0, "identical F != 1");
  require(rouge_l("alpha beta", "gamma delta").rouge_l_f == 0.0, "disjoint F != 0");
}

void masking_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto records = load_records(data_dir() / "scibreak_sample.jsonl", true).records;
  require(records.size() >= 20, "fixture corpus has fewer than 20 abstracts");
  double recall_sum = 0.0;
  for (const auto& r : records) {
    const auto task = mask_text(r.abstract, 0.5, record_seed(405060, r.doi), r.doi);
    recall_sum += rouge_l(task.masked_text, r.abstract).rouge_l_recall;
  }
  const double mean = recall_sum / static_cast<double>(records.size());
  require(mean >= 0.45 && mean <= 0.55,
          "mean masked-input recall " + std::to_string(mean) + " outside [0.45, 0.55]");
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  require(secs < 5.0, "took " + std::to_string(secs) + " s, budget is 5 s");
}

void window_exclusion() {
  std::mt19937 gen(31337);
  std::uniform_int_distribution<int> year(1995, 2030), month(1, 12), day(1, 28), word(0, 9);
  static const char* vocab[] = {"gene", "star", "cell", "ice", "laser",
                                "quark", "reef", "brain", "virus", "magnet"};
  std::vector<Document> docs;
  for (int i = 0; i < 80; ++i) {
    std::string body;
    for (int w = 0; w < 10; ++w) body += std::string(vocab[word(gen)]) + " ";
    docs.push_back({"doc-" + std::to_string(i), {year(gen), month(gen), day(gen)}, "", body, ""});
  }
  const auto corpus = build_corpus(docs);

  int checked = 0;
  for (int trial = 0; checked < 10000; ++trial) {
    const Date upper{year(gen), month(gen), day(gen)};
    std::optional<Date> lower;
    if (trial % 2 == 0) {
      const Date lo{year(gen), month(gen), day(gen)};
      if (!(lo < upper)) continue;
      lower = lo;
    }
    const auto window = make_window(lower, upper);
    const std::string query = std::string(vocab[word(gen)]) + " " + vocab[word(gen)];
    for (const auto& s : bm25_search(corpus, query, window, 10)) {
      require(window.contains(s.doc_date),
              "out-of-window snippet " + s.doc_id + " in " + window.str());
    }
    ++checked;
  }

  const int k = static_cast<int>(corpus.size());
  for (int trial = 0; trial < 100; ++trial) {
    const Date inner{year(gen), month(gen), day(gen)};
    const auto narrow = make_window(std::nullopt, inner);
    const auto wide = make_window(std::nullopt, offset_years(inner, 3));
    const std::string query = std::string(vocab[word(gen)]) + " " + vocab[word(gen)];
    const auto small = bm25_search(corpus, query, narrow, k);
    const auto big = bm25_search(corpus, query, wide, k);
    for (const auto& s : small) {
      bool found = false;
      for (const auto& b : big) found = found || b.doc_id == s.doc_id;
      require(found, "restriction monotonicity violated for " + s.doc_id);
    }
  }
}

void parameter_lock() {
  auto corpus = std::make_shared<const TemporalCorpus>(
      build_corpus(load_documents(data_dir() / "web_docs.jsonl")));
  const auto window = make_window(std::nullopt, Date{2004, 12, 31});
  ToolSpec tool{"web_search", window, std::make_shared<Bm25Backend>(corpus), 10};

  std::vector<std::string> script;
  const char* resets[][2] = {{"upper", "\"2030-12-31\""},
                             {"lower", "\"1900-01-01\""},
                             {"t", "\"2026-01-01\""},
                             {"max_results", "500"},
                             {"before", "\"2031-06-30\""}};
  for (const auto& [key, value] : resets)
    script.push_back(std::string("Thought: trying to widen the window\nAction: web_search\n"
                                 "Action Input: {\"query\": \"denisova\", \"") +
                     key + "\": " + value + "}");
  script.push_back("Thought: giving up on resets\nFinal Answer: done");

  ScriptedChatModel model(script);
  AuditLog audit;
  AgentConfig config{AgentPattern::react, 8, {tool}};
  const auto result = run_agent("Complete the text.", config, model, &audit);

  require(result.status == RunStatus::ok, "adversarial run did not finish");
  require(audit.count("param_mutation_rejected") == 5,
          "expected 5 rejection events, saw " +
              std::to_string(audit.count("param_mutation_rejected")));
  require(audit.count("invoke") == 0, "a mutated call reached the backend");

  // Re-read the spec after driving the same adversarial sequence against a
  // held registry: still frozen, window and max_results untouched.
  AuditLog direct_audit;
  ToolRegistry registry({tool}, &direct_audit);
  for (const auto& [key, value] : resets) {
    std::string v = value;
    if (v.front() == '"') v = v.substr(1, v.size() - 2);
    registry.invoke("web_search", "denisova", {{key, v}});
  }
  const ToolSpec* after = registry.find("web_search");
  require(after && after->frozen, "tool not frozen");
  require(after->window.str() == "(-inf, 2004-12-31]", "window changed: " + after->window.str());
  require(after->max_results == 10, "max_results changed");
  require(direct_audit.count("param_mutation_rejected") == 5, "direct rejections miscounted");
  // The lock held: a pre-event query still sees the restricted window.
  require(registry.invoke("web_search", "denisova").snippets.empty(),
          "pre-event window unexpectedly returned results");
}

void fallback_replay() {
  auto corpus = std::make_shared<const TemporalCorpus>(
      build_corpus(load_documents(data_dir() / "web_docs.jsonl")));
  const std::vector<std::string> search_then_answer{
      "Thought: The passage concerns an archaic hominin identified from remains in a Siberian "
      "cave. I will search for coverage of it.\nAction: web_search\nAction Input: Denisova cave "
      "hominin genome",
      "Thought: The results describe the discovery and its genetic analysis, which is enough to "
      "restore the missing words.\nFinal Answer: Nuclear DNA recovered from a finger bone found "
      "in a southern Siberian cave defines a hominin population distinct from both Neanderthals "
      "and modern humans.",
  };
  const std::vector<std::string> search_then_fall_back{
      search_then_answer[0],
      "Thought: The search returned nothing inside the window, so the discovery must postdate "
      "it. I will answer from prior knowledge of ancient DNA studies.\nFinal Answer: Studies of "
      "ancient DNA from Siberian sites suggest archaic populations related to Neanderthals once "
      "lived across the region.",
  };

  auto run_branch = [&](Date upper, const std::vector<std::string>& script) {
    ToolSpec tool{"web_search", make_window(std::nullopt, upper),
                  std::make_shared<Bm25Backend>(corpus), 10};
    ScriptedChatModel model(script);
    AgentConfig config{AgentPattern::react, 8, {tool}};
    return run_agent("Complete the text.", config, model);
  };

  const auto unrestricted = run_branch(Date{2024, 12, 31}, search_then_answer);
  const auto restricted = run_branch(Date{2004, 12, 31}, search_then_fall_back);

  require(unrestricted.status == RunStatus::ok && restricted.status == RunStatus::ok,
          "branches did not complete");
  require(unrestricted.trajectory.size() == 2 && restricted.trajectory.size() == 2,
          "expected two-step trajectories");
  require(unrestricted.trajectory[1].observation.rfind("[1] ", 0) == 0,
          "unrestricted branch saw no snippet");
  require(restricted.trajectory[1].observation == "No results found.",
          "restricted branch observation: " + restricted.trajectory[1].observation);

  const auto got_a = serialize_trajectory(unrestricted.trajectory);
  const auto got_b = serialize_trajectory(restricted.trajectory);
  const auto golden_a = data_dir() / "golden_trajectory_unrestricted.jsonl";
  const auto golden_b = data_dir() / "golden_trajectory_pre2004.jsonl";
  if (std::getenv("CHRONOGATE_UPDATE_GOLDENS")) {
    std::ofstream(golden_a, std::ios::binary) << got_a;
    std::ofstream(golden_b, std::ios::binary) << got_b;
    std::cout << "      (goldens rewritten)\n";
    return;
  }
  require(got_a == file_bytes(golden_a), "unrestricted trajectory differs from the golden");
  require(got_b == file_bytes(golden_b), "pre-2004 trajectory differs from the golden");

  // Replaying the same branches must be byte-identical.
  require(serialize_trajectory(run_branch(Date{2024, 12, 31}, search_then_answer).trajectory) ==
              got_a,
          "unrestricted branch is not deterministic");
  require(serialize_trajectory(run_branch(Date{2004, 12, 31}, search_then_fall_back).trajectory) ==
              got_b,
          "restricted branch is not deterministic");
}

ExperimentConfig replay_rq1_config() {
  ExperimentConfig config;
  config.experiment_id = "acc-rq1";
  config.protocol = Protocol::rq1;
  config.gamma = 0.5;
  config.seed = 77;
  config.subset.limit = 5;
  config.cutoff_offsets = {-3, 0, 3};
  config.workers = 2;
  config.backend.kind = "scripted";
  config.backend.script = {
      "Thought: I will check the record context first.\nAction: web_search\nAction Input: "
      "publication abstract context",
      "Thought: Proceeding with what I have.\nFinal Answer: A deterministic completion used "
      "for replay checking.",
  };
  config.embedder.dimension = 128;
  return config;
}

ExperimentConfig replay_rq2_config() {
  ExperimentConfig config;
  config.experiment_id = "acc-rq2";
  config.protocol = Protocol::rq2;
  config.gamma = 0.5;
  config.seed = 78;
  config.subset.limit = 5;
  config.toolset_range = {{Date{2000, 1, 1}, Date{2004, 1, 1}}};
  config.patterns = {AgentPattern::react, AgentPattern::react_cot};
  config.workers = 2;
  config.backend.kind = "scripted";
  config.backend.script = {
      "Thought: The latest window is the default pick.\nAction: search_2003_2004\nAction "
      "Input: scientific result details",
      "Thought: Completing now.\nFinal Answer: A deterministic completion used for replay "
      "checking.",
  };
  config.embedder.dimension = 128;
  return config;
}

struct ReplayArtifacts {
  std::vector<RunRecord> rq1_rows;
};

ReplayArtifacts g_replay;

void deterministic_replay() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto records = load_records(data_dir() / "scibreak_sample.jsonl", true).records;
  auto docs = load_documents(data_dir() / "web_docs.jsonl");
  for (auto& d : documents_from_records(records)) docs.push_back(d);
  auto corpus = std::make_shared<const TemporalCorpus>(build_corpus(std::move(docs)));

  auto run_twice = [&](const ExperimentConfig& config, const std::string& tag,
                       auto&& protocol_fn) {
    const auto dir1 = fresh_dir(tag + "_1");
    const auto dir2 = fresh_dir(tag + "_2");
    RunStore s1(dir1), s2(dir2);
    const auto r1 = protocol_fn(config, corpus, records, s1, make_offline_env(config));
    const auto r2 = protocol_fn(config, corpus, records, s2, make_offline_env(config));
    persist(s1.records_path(), r1);
    persist(s2.records_path(), r2);
    require(records_without_wall_time(s1.records_path()) ==
                records_without_wall_time(s2.records_path()),
            tag + " record files differ");
    for (const auto& row : r1)
      require(file_bytes(dir1 / row.trajectory_ref) == file_bytes(dir2 / row.trajectory_ref),
              tag + " trajectory differs for " + row.run_id);
    return r1;
  };

  g_replay.rq1_rows = run_twice(replay_rq1_config(), "rq1",
                                [](auto&&... args) { return run_rq1(args...); });
  const auto rq2_rows = run_twice(replay_rq2_config(), "rq2",
                                  [](auto&&... args) { return run_rq2(args...); });

  require(g_replay.rq1_rows.size() == 5 * 3 + 5, "rq1 produced wrong row count");
  require(rq2_rows.size() == 5 * 2, "rq2 produced wrong row count");
  for (const auto& r : rq2_rows) {
    require(r.toolset.size() == 4, "rq2 toolset is not 4 yearly tools");
    require(r.chosen_tools == std::vector<std::string>{"search_2003_2004"},
            "rq2 chosen tool mismatch");
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  require(secs < 60.0, "replay took " + std::to_string(secs) + " s, budget is 60 s");
}

void prng_portability() {
  const auto idx = mask_indices(10, 0.5, 42);
  require(idx == std::vector<std::size_t>{1, 2, 3, 7, 8},
          "pinned trace mismatch for (10 tokens, gamma 0.5, seed 42)");
  const auto task = mask_text("t0 t1 t2 t3 t4 t5 t6 t7 t8 t9", 0.5, 42);
  require(task.masked_text == "t0 [UNK] [UNK] [UNK] t4 t5 t6 [UNK] [UNK] t9",
          "masked text mismatch: " + task.masked_text);
}

void cardinality_and_aggregation() {
  const auto& rows = g_replay.rq1_rows;
  require(!rows.empty(), "replay criterion must run first");
  require(rows.size() == 5 * 3 + 5, "cardinality |records| x |offsets| + |records| violated");

  std::size_t ok_rows = 0;
  for (const auto& r : rows) ok_rows += r.status == "ok" ? 1 : 0;
  const auto agg = aggregate(rows, {"model", "cutoff"});
  std::size_t count_sum = 0;
  for (const auto& a : agg) count_sum += a.count;
  require(count_sum == ok_rows, "aggregate counts do not sum to ok records");

  const auto pivot = aggregate(rows, {"model", "cutoff", "publication_year_bucket"});
  const auto md = render_markdown(pivot);
  const auto header = md.substr(0, md.find('\n'));
  std::size_t pipes = 0;
  for (char c : header) pipes += c == '|' ? 1 : 0;
  std::set<std::string> buckets;
  for (const auto& r : rows) buckets.insert(std::to_string(r.pub_year));
  require(pipes == 2 + 2 * buckets.size() + 1,
          "markdown table does not have 2 + 2 x buckets columns");
  std::set<std::string> cutoffs;
  for (const auto& a : agg)
    cutoffs.insert(a.group[1].second);
  require(cutoffs == std::set<std::string>{"-", "tp-3", "tp", "tp+3"},
          "cutoff rows do not match the three-offsets-plus-input layout");
}

void live_smoke() {
  const char* required[] = {kLlmKeyEnv, kSearchKeyEnv, kEmbedKeyEnv};
  for (const char* name : required) {
    if (env_or_empty(name).empty()) {
      std::cout << "      (skipped: " << name << " not set)\n";
      return;
    }
  }
  const std::string config_path = env_or_empty("CHRONOGATE_LIVE_CONFIG");
  if (config_path.empty()) {
    std::cout << "      (skipped: CHRONOGATE_LIVE_CONFIG not set)\n";
    return;
  }
  auto config = load_config(config_path);
  config.subset.limit = 1;
  config.cutoff_offsets = {0};
  config.protocol = Protocol::rq1;

  const auto records = load_records(data_dir() / "scibreak_sample.jsonl", true).records;
  auto corpus = std::make_shared<const TemporalCorpus>(
      build_corpus(documents_from_records(records)));
  RunnerEnv env;
  const auto http = config.backend.http;
  env.make_model = [http] { return std::make_unique<HttpChatModel>(http); };
  env.embedder = std::make_shared<RemoteEmbeddingProvider>(
      config.embedder.endpoint, config.embedder.model, config.embedder.dimension);
  if (!config.search.live_url.empty())
    env.search_override = std::make_shared<LiveSearchBackend>(config.search.live_url);

  RunStore store(fresh_dir("live"));
  const auto rows = run_rq1(config, corpus, records, store, env);
  persist(store.records_path(), rows);
  const auto loaded = load_run_records(store.records_path());
  require(loaded.size() == rows.size(), "live records did not round-trip");
  for (const auto& r : loaded)
    require(r.status == "ok" || r.status == "budget_exhausted" || r.status == "backend_error",
            "invalid status in live record");
}

}  // namespace

int main() {
  criterion("lcs_oracle", lcs_oracle);
  criterion("rouge_fixture", rouge_fixture);
  criterion("masking_consistency", masking_consistency);
  criterion("window_exclusion", window_exclusion);
  criterion("parameter_lock", parameter_lock);
  criterion("fallback_replay", fallback_replay);
  criterion("deterministic_replay", deterministic_replay);
  criterion("prng_portability", prng_portability);
  criterion("cardinality_aggregation", cardinality_and_aggregation);
  criterion("live_smoke", live_smoke);

  if (g_failures) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
