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

#include <stdexcept>
#include <string>

namespace chronogate {

enum class Errc {
  invalid_argument,
  file_unreadable,
  malformed_line,
  validation_failed,
  duplicate_doc_id,
  inverted_window,
  out_of_range,
  non_integral_span,
  param_mutation_rejected,
  empty_toolset,
  empty_text,
  empty_input,
  unparsable_step,
  backend_unavailable,
  provider_unavailable,
  dimension_mismatch,
  io_error,
  schema_mismatch,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::file_unreadable: return "file_unreadable";
    case Errc::malformed_line: return "malformed_line";
    case Errc::validation_failed: return "validation_failed";
    case Errc::duplicate_doc_id: return "duplicate_doc_id";
    case Errc::inverted_window: return "inverted_window";
    case Errc::out_of_range: return "out_of_range";
    case Errc::non_integral_span: return "non_integral_span";
    case Errc::param_mutation_rejected: return "param_mutation_rejected";
    case Errc::empty_toolset: return "empty_toolset";
    case Errc::empty_text: return "empty_text";
    case Errc::empty_input: return "empty_input";
    case Errc::unparsable_step: return "unparsable_step";
    case Errc::backend_unavailable: return "backend_unavailable";
    case Errc::provider_unavailable: return "provider_unavailable";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::io_error: return "io_error";
    case Errc::schema_mismatch: return "schema_mismatch";
  }
  return "unknown";
}

/// Single exception type for the whole library; the code tells callers
/// which contract was broken.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace chronogate
