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
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronogate/dct_search.hpp"
#include "chronogate/error.hpp"
#include "chronogate/rng.hpp"
#include "chronogate/text.hpp"

namespace chronogate {

inline constexpr const char* kMaskToken = "[UNK]";
inline constexpr const char* kSystemPrompt = "You are a helpful writing assistant.";

/// A masked-abstract completion task. masked_text is the original with the
/// tokens at masked_indices replaced by "[UNK]"; inter-token whitespace is
/// preserved so unmasking reproduces the original byte-for-byte.
struct ClozeTask {
  std::string source_doi;
  std::string original;
  std::vector<std::string> tokens;
  std::vector<std::size_t> masked_indices;  // strictly increasing
  std::string masked_text;
  double gamma = 0.0;
  uint64_t seed = 0;
};

inline std::vector<std::string> tokenize_for_masking(const std::string& text) {
  return whitespace_tokens(text);
}

/// Number of masked tokens: round(gamma * n), half-up.
inline std::size_t mask_count(double gamma, std::size_t n) {
  return static_cast<std::size_t>(std::floor(gamma * static_cast<double>(n) + 0.5));
}

/// Selects round(gamma*n) distinct token indices by partial Fisher-Yates
/// shuffle driven by xoshiro256** seeded via SplitMix64. The draw sequence
/// is part of the pinned contract: masks are bit-identical across platforms
/// and languages, and for a fixed seed the selected sets are nested as
/// gamma grows.
inline std::vector<std::size_t> mask_indices(std::size_t n, double gamma, uint64_t seed) {
  const std::size_t m = mask_count(gamma, n);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Xoshiro256StarStar rng(seed);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.bounded(n - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<std::size_t> selected(idx.begin(), idx.begin() + m);
  std::sort(selected.begin(), selected.end());
  return selected;
}

inline ClozeTask mask_text(const std::string& text, double gamma, uint64_t seed,
                           std::string source_doi = "") {
  if (gamma < 0.0 || gamma > 1.0) raise(Errc::invalid_argument, "gamma must be in [0, 1]");
  const auto spans = whitespace_token_spans(text);
  if (spans.empty()) raise(Errc::empty_text, "nothing to mask");

  ClozeTask task;
  task.source_doi = std::move(source_doi);
  task.original = text;
  task.gamma = gamma;
  task.seed = seed;
  task.tokens.reserve(spans.size());
  for (const auto& s : spans) task.tokens.emplace_back(text.substr(s.begin, s.length));
  task.masked_indices = mask_indices(spans.size(), gamma, seed);

  std::string masked;
  masked.reserve(text.size());
  std::size_t cursor = 0;
  std::size_t next_masked = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    masked.append(text, cursor, spans[i].begin - cursor);
    if (next_masked < task.masked_indices.size() && task.masked_indices[next_masked] == i) {
      masked.append(kMaskToken);
      ++next_masked;
    } else {
      masked.append(text, spans[i].begin, spans[i].length);
    }
    cursor = spans[i].begin + spans[i].length;
  }
  masked.append(text, cursor, text.size() - cursor);
  task.masked_text = std::move(masked);
  return task;
}

/// Inverse of masking: substitutes the withheld tokens back by position.
inline std::string unmask(const ClozeTask& task) {
  const auto spans = whitespace_token_spans(task.masked_text);
  std::string restored;
  restored.reserve(task.original.size());
  std::size_t cursor = 0;
  std::size_t next_masked = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    restored.append(task.masked_text, cursor, spans[i].begin - cursor);
    if (next_masked < task.masked_indices.size() && task.masked_indices[next_masked] == i) {
      restored.append(task.tokens[task.masked_indices[next_masked]]);
      ++next_masked;
    } else {
      restored.append(task.masked_text, spans[i].begin, spans[i].length);
    }
    cursor = spans[i].begin + spans[i].length;
  }
  restored.append(task.masked_text, cursor, task.masked_text.size() - cursor);
  return restored;
}

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

inline std::string render_completion_prompt(const ClozeTask& task) {
  std::string p;
  p += "Instruction: Browse the internet using keywords or phrases in the following paragraph "
       "with masked text. Make use of the search results to fill in each [UNK] with a word or "
       "punctuation. Output your final results after Final Answer: to indicate the beginning of "
       "your completed text. Use your own judgement to decide what information from the search "
       "results are useful. If nothing is useful, then try to complete the task with your own "
       "knowledge.\n\n";
  p += "Requirements: Use the given parameters in the tools to solve the following problem and "
       "don't reset them. Don't change the number of arguments supplied to the tool you use.\n";
  p += "Masked text: " + task.masked_text + "\n";
  return p;
}

/// Tool-selection variant: enumerates the date-controlled tools, and with
/// cot adds the stepwise instruction that walks the agent from topical
/// concepts to a period estimate to a tool choice.
inline std::string render_selection_prompt(const ClozeTask& task,
                                           const std::vector<ToolSpec>& toolset, bool cot) {
  if (toolset.empty()) raise(Errc::empty_toolset, "selection prompt needs at least one tool");
  std::string p = render_completion_prompt(task);
  p += "\nYou are given " + std::to_string(toolset.size()) +
       " search tools. Each tool only returns results whose dates fall in its window:\n";
  for (const auto& t : toolset) p += "- " + t.tool_id + ": results dated in " + t.window.str() + "\n";
  if (cot) {
    p += "\nReason step by step before searching:\n"
         "1. Identify the key concepts mentioned in the masked text.\n"
         "2. Estimate the time period those concepts belong to.\n"
         "3. Select the tool whose date window matches that period.\n"
         "4. Search with the selected tool, then complete the text.\n";
  }
  return p;
}

// ---------------------------------------------------------------------------
// Task dump (JSONL) for audit and replay
// ---------------------------------------------------------------------------

inline json task_to_json(const ClozeTask& t) {
  return json{{"source_doi", t.source_doi}, {"original", t.original},
              {"tokens", t.tokens},         {"masked_indices", t.masked_indices},
              {"masked_text", t.masked_text}, {"gamma", t.gamma},
              {"seed", t.seed}};
}

inline ClozeTask task_from_json(const json& j) {
  ClozeTask t;
  t.source_doi = j.value("source_doi", "");
  t.original = j.at("original").get<std::string>();
  t.tokens = j.at("tokens").get<std::vector<std::string>>();
  t.masked_indices = j.at("masked_indices").get<std::vector<std::size_t>>();
  t.masked_text = j.at("masked_text").get<std::string>();
  t.gamma = j.at("gamma").get<double>();
  t.seed = j.at("seed").get<uint64_t>();
  return t;
}

inline void save_tasks(const std::filesystem::path& path, const std::vector<ClozeTask>& tasks) {
  std::ofstream out(path);
  if (!out) raise(Errc::io_error, "cannot write " + path.string());
  for (const auto& t : tasks) out << task_to_json(t).dump() << '\n';
}

}  // namespace chronogate
