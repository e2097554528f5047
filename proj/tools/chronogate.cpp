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

#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "chronogate/chronogate.hpp"
#include "chronogate/net.hpp"

namespace cg = chronogate;

namespace {

cg::RunnerEnv make_env(const cg::ExperimentConfig& config, bool live) {
  if (!live) return cg::make_offline_env(config);

  cg::RunnerEnv env;
  if (config.backend.kind == "http") {
    const auto http = config.backend.http;
    env.make_model = [http] { return std::make_unique<cg::HttpChatModel>(http); };
  } else {
    env = cg::make_offline_env(config);
  }
  if (config.embedder.kind == "remote") {
    env.embedder = std::make_shared<cg::RemoteEmbeddingProvider>(
        config.embedder.endpoint, config.embedder.model, config.embedder.dimension);
  } else if (!env.embedder) {
    env.embedder = std::make_shared<cg::HashEmbedder>(config.embedder.dimension);
  }
  if (config.search.kind == "live" && !config.search.live_url.empty())
    env.search_override = std::make_shared<cg::LiveSearchBackend>(config.search.live_url);
  if (!env.make_model)
    env.make_model = [] { return std::make_unique<cg::OfflineStubModel>(); };
  return env;
}

std::shared_ptr<const cg::TemporalCorpus> build_environment_corpus(
    const cg::ExperimentConfig& config, const std::vector<cg::PublicationRecord>& records) {
  std::vector<cg::Document> docs;
  if (!config.search.documents_path.empty())
    docs = cg::load_documents(config.search.documents_path);
  if (config.search.index_abstracts)
    for (auto& d : cg::documents_from_records(records)) docs.push_back(std::move(d));
  return std::make_shared<const cg::TemporalCorpus>(cg::build_corpus(std::move(docs)));
}

int cmd_ingest(const std::string& path, bool strict, bool quiet) {
  const auto report = cg::load_records(path, strict);
  if (!quiet) {
    for (const auto& s : report.skipped)
      std::cerr << "skipped line " << s.line_no
                << (s.doi.empty() ? "" : " (" + s.doi + ")") << ": " << s.reason << "\n";
  }
  std::cout << "loaded " << report.records.size() << " records, skipped "
            << report.skipped.size() << "\n";
  int min_year = 9999, max_year = 0;
  for (const auto& r : report.records) {
    min_year = std::min(min_year, r.pub_date.year);
    max_year = std::max(max_year, r.pub_date.year);
  }
  if (!report.records.empty())
    std::cout << "publication years " << min_year << ".." << max_year << "\n";
  return report.skipped.empty() ? 0 : 2;
}

int cmd_mask(const std::string& input, const std::string& text, double gamma, uint64_t seed,
             const std::string& out_path) {
  std::vector<cg::ClozeTask> tasks;
  if (!text.empty()) {
    tasks.push_back(cg::mask_text(text, gamma, seed));
  } else if (!input.empty()) {
    const auto records = cg::load_records(input).records;
    for (const auto& r : records)
      tasks.push_back(
          cg::mask_text(r.abstract, gamma, cg::record_seed(seed, r.doi), r.doi));
  } else {
    std::ostringstream buffer;
    buffer << std::cin.rdbuf();
    tasks.push_back(cg::mask_text(buffer.str(), gamma, seed));
  }
  if (!out_path.empty()) {
    cg::save_tasks(out_path, tasks);
    std::cout << "wrote " << tasks.size() << " tasks to " << out_path << "\n";
  } else {
    for (const auto& t : tasks) std::cout << cg::task_to_json(t).dump() << "\n";
  }
  return 0;
}

struct RunOverrides {
  std::optional<double> gamma;
  std::optional<uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> max_steps;
  std::optional<std::size_t> limit;

  void apply(cg::ExperimentConfig& config) const {
    if (gamma) config.gamma = *gamma;
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;
    if (max_steps) config.max_steps = *max_steps;
    if (limit) config.subset.limit = *limit;
  }
};

void add_run_overrides(CLI::App* cmd, RunOverrides& o) {
  cmd->add_option("--gamma", o.gamma, "override the config masking ratio");
  cmd->add_option("--seed", o.seed, "override the config global seed");
  cmd->add_option("--workers", o.workers, "override the worker count");
  cmd->add_option("--max-steps", o.max_steps, "override the agent step budget");
  cmd->add_option("--limit", o.limit, "override the record subset limit");
}

int cmd_run(const std::string& config_path, const std::string& records_path,
            const std::string& out_dir, bool live, cg::Protocol protocol,
            const RunOverrides& overrides) {
  auto config = cg::load_config(config_path);
  overrides.apply(config);
  if (config.gamma < 0.0 || config.gamma > 1.0 || config.workers < 1 || config.max_steps < 1) {
    std::cerr << "invalid override values\n";
    return 1;
  }
  if (config.protocol != protocol) {
    std::cerr << "config protocol is " << cg::protocol_name(config.protocol)
              << ", expected " << cg::protocol_name(protocol) << "\n";
    return 1;
  }
  if (!live && (config.backend.kind == "http" || config.embedder.kind == "remote" ||
                config.search.kind == "live")) {
    std::cerr << "config requests live endpoints; pass --live to allow them "
                 "(falling back is not implicit)\n";
    return 1;
  }
  const auto records = cg::load_records(records_path).records;
  if (records.empty()) {
    std::cerr << "no usable records in " << records_path << "\n";
    return 1;
  }
  auto corpus = build_environment_corpus(config, records);
  cg::RunStore store(out_dir);
  const auto env = make_env(config, live);
  const auto rows = protocol == cg::Protocol::rq1
                        ? cg::run_rq1(config, corpus, records, store, env)
                        : cg::run_rq2(config, corpus, records, store, env);
  cg::persist(store.records_path(), rows);

  std::size_t ok = 0;
  for (const auto& r : rows) ok += r.status == "ok" ? 1 : 0;
  std::cout << "wrote " << rows.size() << " run records (" << ok << " ok) to "
            << store.records_path().string() << "\n";
  const auto agg = cg::aggregate(
      rows, protocol == cg::Protocol::rq1
                ? std::vector<std::string>{"model", "cutoff"}
                : std::vector<std::string>{"model", "pattern"});
  std::cout << cg::render_markdown(agg);
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& group_by,
               const std::string& format, const std::string& bucketing,
               const std::string& out_path) {
  const auto records = cg::load_run_records(in_path);
  std::vector<std::string> keys;
  std::string current;
  for (char c : group_by + ",") {
    if (c == ',') {
      if (!current.empty()) keys.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  const auto bucket_mode = bucketing == "split2010" ? cg::YearBucketing::split_2010
                                                    : cg::YearBucketing::single_years;
  const auto rows = cg::aggregate(records, keys, bucket_mode);
  cg::ReportFormat fmt;
  if (format == "markdown") fmt = cg::ReportFormat::markdown;
  else if (format == "csv") fmt = cg::ReportFormat::csv;
  else if (format == "svg") fmt = cg::ReportFormat::svg;
  else {
    std::cerr << "unknown format '" << format << "'\n";
    return 1;
  }
  if (out_path.empty()) {
    switch (fmt) {
      case cg::ReportFormat::markdown: std::cout << cg::render_markdown(rows); break;
      case cg::ReportFormat::csv: std::cout << cg::render_csv(rows); break;
      case cg::ReportFormat::svg: std::cout << cg::render_svg(rows); break;
    }
  } else {
    cg::emit_report(rows, fmt, out_path);
    std::cout << "wrote " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chronogate: stress-test tool-using agents with date-controlled search"};
  app.require_subcommand(1);

  bool live = false;
  bool offline = false;
  app.add_flag("--live", live, "allow HTTP chat/search/embedding backends");
  app.add_flag("--offline", offline, "force offline backends (default)");

  auto* ingest = app.add_subcommand("ingest", "validate a publication records JSONL file");
  std::string ingest_path;
  bool strict = false, quiet = false;
  ingest->add_option("records", ingest_path, "records JSONL path")->required();
  ingest->add_flag("--strict", strict, "abort on the first invalid record");
  ingest->add_flag("--quiet", quiet, "suppress per-record skip reasons");

  auto* mask = app.add_subcommand("mask", "generate cloze tasks from text or records");
  std::string mask_input, mask_text_arg, mask_out;
  double gamma = 0.5;
  uint64_t seed = 0;
  mask->add_option("--gamma", gamma, "masking ratio in [0, 1]")->capture_default_str();
  mask->add_option("--seed", seed, "PRNG seed")->capture_default_str();
  mask->add_option("--in", mask_input, "records JSONL; masks every abstract");
  mask->add_option("--text", mask_text_arg, "mask a literal text instead");
  mask->add_option("--out", mask_out, "write task JSONL here instead of stdout");

  auto* rq1 = app.add_subcommand("run-rq1", "run the cutoff-offset protocol");
  std::string rq1_config, rq1_records, rq1_out = "out/rq1";
  RunOverrides rq1_overrides;
  rq1->add_option("--config", rq1_config, "experiment config JSON")->required();
  rq1->add_option("--records", rq1_records, "records JSONL")->required();
  rq1->add_option("--out", rq1_out, "output directory")->capture_default_str();
  add_run_overrides(rq1, rq1_overrides);

  auto* rq2 = app.add_subcommand("run-rq2", "run the yearly tool-selection protocol");
  std::string rq2_config, rq2_records, rq2_out = "out/rq2";
  RunOverrides rq2_overrides;
  rq2->add_option("--config", rq2_config, "experiment config JSON")->required();
  rq2->add_option("--records", rq2_records, "records JSONL")->required();
  rq2->add_option("--out", rq2_out, "output directory")->capture_default_str();
  add_run_overrides(rq2, rq2_overrides);

  auto* report = app.add_subcommand("report", "aggregate run records into a table or chart");
  std::string rep_in, rep_group = "model,cutoff", rep_format = "markdown", rep_bucket = "years",
              rep_out;
  report->add_option("--in", rep_in, "run records JSONL")->required();
  report->add_option("--group-by", rep_group, "comma-separated group keys")
      ->capture_default_str();
  report->add_option("--format", rep_format, "markdown | csv | svg")->capture_default_str();
  report->add_option("--bucket", rep_bucket, "years | split2010")->capture_default_str();
  report->add_option("--out", rep_out, "output file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);
  if (offline) live = false;

  try {
    if (*ingest) return cmd_ingest(ingest_path, strict, quiet);
    if (*mask) return cmd_mask(mask_input, mask_text_arg, gamma, seed, mask_out);
    if (*rq1)
      return cmd_run(rq1_config, rq1_records, rq1_out, live, cg::Protocol::rq1, rq1_overrides);
    if (*rq2)
      return cmd_run(rq2_config, rq2_records, rq2_out, live, cg::Protocol::rq2, rq2_overrides);
    if (*report) return cmd_report(rep_in, rep_group, rep_format, rep_bucket, rep_out);
  } catch (const cg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
