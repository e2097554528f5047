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

#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "chronogate/cloze.hpp"
#include "chronogate/metrics.hpp"

using namespace chronogate;

namespace {

// Independent oracle: enumerate every subsequence of the shorter list and
// keep the longest one that is also a subsequence of the other list.
bool is_subsequence(const std::vector<std::string>& needle,
                    const std::vector<std::string>& haystack) {
  std::size_t i = 0;
  for (const auto& tok : haystack) {
    if (i < needle.size() && needle[i] == tok) ++i;
  }
  return i == needle.size();
}

std::size_t lcs_brute_force(const std::vector<std::string>& a,
                            const std::vector<std::string>& b) {
  const auto& shorter = a.size() <= b.size() ? a : b;
  const auto& longer = a.size() <= b.size() ? b : a;
  std::size_t best = 0;
  const std::size_t n = shorter.size();
  for (std::size_t mask = 0; mask < (1ull << n); ++mask) {
    std::vector<std::string> sub;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1ull << i)) sub.push_back(shorter[i]);
    if (sub.size() > best && is_subsequence(sub, longer)) best = sub.size();
  }
  return best;
}

const std::vector<std::string> kCat{"the", "cat", "sat", "on", "the", "mat"};
const std::vector<std::string> kMat{"the", "cat", "ran", "on", "a", "mat"};

}  // namespace

TEST_CASE("lcs_length basics", "[metrics]") {
  CHECK(lcs_length({}, kCat) == 0);
  CHECK(lcs_length(kCat, {}) == 0);
  CHECK(lcs_length(kCat, kCat) == 6);
  CHECK(lcs_length(kCat, kMat) == 4);
  CHECK(lcs_brute_force(kCat, kMat) == 4);
}

TEST_CASE("lcs_length agrees with brute-force enumeration", "[metrics]") {
  std::mt19937 gen(123);
  std::uniform_int_distribution<int> len(0, 12), word(0, 5);
  static const char* vocab[] = {"a", "b", "c", "d", "e", "f"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> a, b;
    for (int i = len(gen); i > 0; --i) a.push_back(vocab[word(gen)]);
    for (int i = len(gen); i > 0; --i) b.push_back(vocab[word(gen)]);
    REQUIRE(lcs_length(a, b) == lcs_brute_force(a, b));
  }
}

TEST_CASE("rouge_l fixtures", "[metrics]") {
  const auto identical = rouge_l("The cat sat on the mat", "the cat sat on the mat");
  CHECK(identical.rouge_l_precision == 1.0);
  CHECK(identical.rouge_l_recall == 1.0);
  CHECK(identical.rouge_l_f == 1.0);

  const auto pair = rouge_l("the cat sat on the mat", "the cat ran on a mat");
  CHECK_THAT(pair.rouge_l_precision, Catch::Matchers::WithinAbs(4.0 / 6.0, 1e-15));
  CHECK_THAT(pair.rouge_l_recall, Catch::Matchers::WithinAbs(4.0 / 6.0, 1e-15));
  CHECK_THAT(pair.rouge_l_f, Catch::Matchers::WithinAbs(4.0 / 6.0, 1e-15));
  CHECK(pair.candidate_tokens == 6);
  CHECK(pair.reference_tokens == 6);

  const auto disjoint = rouge_l("alpha beta gamma", "delta epsilon zeta");
  CHECK(disjoint.rouge_l_f == 0.0);

  const auto empty = rouge_l("", "");
  CHECK(empty.rouge_l_f == 0.0);
  CHECK(empty.candidate_tokens == 0);
}

TEST_CASE("rouge_l F is symmetric for equal-length inputs", "[metrics]") {
  const std::string a = "one two three four five six";
  const std::string b = "one two nine four ten six";
  CHECK(rouge_l(a, b).rouge_l_f == rouge_l(b, a).rouge_l_f);
}

TEST_CASE("hash embedder bucket counts before normalization", "[metrics]") {
  // fnv1a64("a") % 64 == 12, fnv1a64("b") % 64 == 37.
  HashEmbedder embedder(64);
  const auto e = embedder.embed("a a b");
  REQUIRE(e.values.size() == 64);
  CHECK_FALSE(e.empty_input);
  const double norm = std::sqrt(2.0 * 2.0 + 1.0);
  CHECK_THAT(e.values[12], Catch::Matchers::WithinAbs(2.0 / norm, 1e-15));
  CHECK_THAT(e.values[37], Catch::Matchers::WithinAbs(1.0 / norm, 1e-15));
  double sq = 0.0;
  for (double v : e.values) sq += v * v;
  CHECK_THAT(sq, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("hash embedder is deterministic and flags empty input", "[metrics]") {
  HashEmbedder embedder(64);
  CHECK(embedder.embed("gravitational waves detected").values ==
        embedder.embed("gravitational waves detected").values);

  const auto empty = embedder.embed("   ");
  CHECK(empty.empty_input);
  for (double v : empty.values) CHECK(v == 0.0);
}

TEST_CASE("cosine fixtures and error paths", "[metrics]") {
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK_THAT(cosine(std::vector<double>{1, 1}, std::vector<double>{2, 2}),
             Catch::Matchers::WithinAbs(1.0, 1e-15));
  CHECK_THAT(cosine(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6}),
             Catch::Matchers::WithinAbs(0.9746318461970762, 1e-15));
  CHECK(cosine(std::vector<double>{0, 0}, std::vector<double>{1, 1}) == 0.0);
  CHECK_THROWS_AS(cosine(std::vector<double>{1}, std::vector<double>{1, 2}), Error);
}

TEST_CASE("cosine is invariant to positive scaling", "[metrics]") {
  std::mt19937 gen(9);
  std::uniform_real_distribution<double> val(-3.0, 3.0), scale(0.01, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> u(16), v(16), su(16);
    for (int i = 0; i < 16; ++i) {
      u[i] = val(gen);
      v[i] = val(gen);
    }
    const double alpha = scale(gen);
    for (int i = 0; i < 16; ++i) su[i] = alpha * u[i];
    REQUIRE(std::abs(cosine(su, v) - cosine(u, v)) < 1e-12);
  }
}

TEST_CASE("score_completion of a text with itself is perfect", "[metrics]") {
  HashEmbedder embedder(256);
  const std::string text = "the detection inaugurates an observational window on strong gravity";
  const auto m = score_completion(text, text, embedder);
  CHECK(m.rouge_l_f == 1.0);
  CHECK_THAT(m.sts, Catch::Matchers::WithinAbs(1.0, 1e-9));
}

TEST_CASE("disjoint texts with non-colliding buckets score zero STS", "[metrics]") {
  // Bucket sets at dimension 64: {1, 23, 34} vs {0, 27, 54} -- disjoint.
  HashEmbedder embedder(64);
  const auto m = score_completion("quantum entanglement photon", "ribosome protein folding",
                                  embedder);
  CHECK(m.sts == 0.0);
  CHECK(m.rouge_l_f == 0.0);
}

TEST_CASE("masked input recall tracks 1 - gamma", "[metrics]") {
  HashEmbedder embedder(256);
  std::string text;
  for (int i = 0; i < 40; ++i) text += "word" + std::to_string(i) + " ";
  const auto task = mask_text(text, 0.5, 77);
  const auto m = score_completion(task.masked_text, text, embedder);
  CHECK_THAT(m.rouge_l_recall, Catch::Matchers::WithinAbs(0.5, 1.0 / 40.0));
}

TEST_CASE("masked input recall is non-increasing in gamma", "[metrics]") {
  const std::string text =
      "Adaptive optics imaging at two epochs reveals three co moving point sources orbiting "
      "a young nearby star with orbital motion detected for the inner pair of giant planets";
  for (uint64_t seed : {4ull, 44ull, 444ull}) {
    double prev = 2.0;
    for (double gamma : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const auto task = mask_text(text, gamma, seed);
      const double recall = rouge_l(task.masked_text, text).rouge_l_recall;
      REQUIRE(recall <= prev + 1e-12);
      prev = recall;
    }
  }
}
