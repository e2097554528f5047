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

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chronogate/error.hpp"
#include "chronogate/rng.hpp"
#include "chronogate/text.hpp"

namespace chronogate {

struct MetricReport {
  double rouge_l_precision = 0.0;
  double rouge_l_recall = 0.0;
  double rouge_l_f = 0.0;
  double sts = 0.0;
  int64_t candidate_tokens = 0;
  int64_t reference_tokens = 0;
};

/// Longest common subsequence length, O(|a|*|b|) dynamic programming with a
/// rolling row.
inline std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Rouge-L as F1: P = LCS/|candidate|, R = LCS/|reference|. Tokenization is
/// the shared lowercase non-alphanumeric split.
inline MetricReport rouge_l(const std::string& candidate, const std::string& reference) {
  const auto cand = alnum_tokens(candidate);
  const auto ref = alnum_tokens(reference);
  MetricReport m;
  m.candidate_tokens = static_cast<int64_t>(cand.size());
  m.reference_tokens = static_cast<int64_t>(ref.size());
  const double lcs = static_cast<double>(lcs_length(cand, ref));
  if (!cand.empty()) m.rouge_l_precision = lcs / static_cast<double>(cand.size());
  if (!ref.empty()) m.rouge_l_recall = lcs / static_cast<double>(ref.size());
  const double pr = m.rouge_l_precision + m.rouge_l_recall;
  m.rouge_l_f = pr > 0.0 ? 2.0 * m.rouge_l_precision * m.rouge_l_recall / pr : 0.0;
  return m;
}

struct EmbeddingResult {
  std::vector<double> values;
  bool empty_input = false;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual EmbeddingResult embed(const std::string& text) const = 0;
  virtual std::string provider_id() const = 0;
  virtual int dimension() const = 0;
};

/// Deterministic bag-of-words embedder: each token FNV-1a-hashed to one of
/// `dimension` buckets, counts L2-normalized. A test oracle, not a claim of
/// semantic fidelity.
class HashEmbedder : public EmbeddingProvider {
 public:
  explicit HashEmbedder(int dimension = 256) : dim_(dimension) {
    if (dimension <= 0) raise(Errc::invalid_argument, "dimension must be positive");
  }

  EmbeddingResult embed(const std::string& text) const override {
    std::vector<double> v(static_cast<std::size_t>(dim_), 0.0);
    const auto tokens = alnum_tokens(text);
    if (tokens.empty()) return {std::move(v), true};
    for (const auto& t : tokens) v[fnv1a64(t) % static_cast<uint64_t>(dim_)] += 1.0;
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return {std::move(v), false};
  }

  std::string provider_id() const override { return "hash-" + std::to_string(dim_); }
  int dimension() const override { return dim_; }

 private:
  int dim_;
};

/// Cosine similarity; defined as 0 when either norm is 0.
inline double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    raise(Errc::dimension_mismatch,
          std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

/// Rouge-L plus STS = cosine of the provider embeddings.
inline MetricReport score_completion(const std::string& candidate, const std::string& reference,
                                     const EmbeddingProvider& provider) {
  MetricReport m = rouge_l(candidate, reference);
  const auto eu = provider.embed(candidate);
  const auto ev = provider.embed(reference);
  m.sts = cosine(eu.values, ev.values);
  return m;
}

}  // namespace chronogate
