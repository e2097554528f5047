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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chronogate {

inline bool is_ascii_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline char ascii_lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

inline bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

/// Indexing/metric tokenizer: lowercase, split on any non-alphanumeric byte,
/// drop empty tokens. One tokenizer is shared by the corpus index, BM25
/// queries, and Rouge-L so scores live on a single surface.
inline std::vector<std::string> alnum_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (is_ascii_alnum(c)) {
      cur.push_back(ascii_lower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

struct TokenSpan {
  std::size_t begin = 0;
  std::size_t length = 0;
};

/// Masking tokenizer: split on runs of ASCII whitespace; punctuation stays
/// attached to its word. Spans index into the original text.
inline std::vector<TokenSpan> whitespace_token_spans(std::string_view text) {
  std::vector<TokenSpan> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ascii_space(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t begin = i;
    while (i < text.size() && !is_ascii_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i > begin) spans.push_back({begin, i - begin});
  }
  return spans;
}

inline std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& s : whitespace_token_spans(text)) out.emplace_back(text.substr(s.begin, s.length));
  return out;
}

/// Locates the first occurrence of a lowercased alphanumeric token in the
/// original text, for snippet centering.
inline std::optional<TokenSpan> find_token(std::string_view text, std::string_view lowered_token) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_ascii_alnum(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t begin = i;
    std::string cur;
    while (i < text.size() && is_ascii_alnum(static_cast<unsigned char>(text[i]))) {
      cur.push_back(ascii_lower(static_cast<unsigned char>(text[i])));
      ++i;
    }
    if (!cur.empty() && cur == lowered_token) return TokenSpan{begin, i - begin};
  }
  return std::nullopt;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_ascii_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_ascii_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace chronogate
