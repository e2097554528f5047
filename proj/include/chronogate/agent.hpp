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

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chronogate/cloze.hpp"
#include "chronogate/dct_search.hpp"
#include "chronogate/error.hpp"
#include "chronogate/text.hpp"

namespace chronogate {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

/// Anything that turns a message transcript into the next model message.
class ChatModel {
 public:
  virtual ~ChatModel() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
  virtual std::string model_name() const = 0;
};

/// Sampling/transport settings for a remote chat endpoint.
struct ChatBackendConfig {
  std::string endpoint;
  std::string model_name;
  double temperature = 0.0;
  int max_output_tokens = 1024;
  double timeout_seconds = 60.0;
};

inline void validate_backend_config(const ChatBackendConfig& c) {
  if (c.temperature < 0.0) raise(Errc::invalid_argument, "temperature must be >= 0");
  if (c.timeout_seconds <= 0.0) raise(Errc::invalid_argument, "timeout must be > 0");
}

/// Test double: returns canned messages in order regardless of input;
/// exhaustion raises backend_unavailable.
class ScriptedChatModel : public ChatModel {
 public:
  explicit ScriptedChatModel(std::vector<std::string> script, std::string name = "scripted")
      : script_(std::move(script)), name_(std::move(name)) {
    if (script_.empty()) raise(Errc::invalid_argument, "script must be non-empty");
  }

  std::string complete(const std::vector<ChatMessage>&) override {
    if (next_ >= script_.size())
      raise(Errc::backend_unavailable,
            "script exhausted after " + std::to_string(script_.size()) + " messages");
    return script_[next_++];
  }

  std::string model_name() const override { return name_; }
  std::size_t consumed() const { return next_; }

 private:
  std::vector<std::string> script_;
  std::size_t next_ = 0;
  std::string name_;
};

// ---------------------------------------------------------------------------
// ReAct wire format
// ---------------------------------------------------------------------------

enum class ActionType { tool_call, final_answer };

struct AgentAction {
  ActionType type = ActionType::final_answer;
  std::string tool_id;                        // tool_call
  std::string query;                          // tool_call
  std::map<std::string, std::string> params;  // extra Action Input keys, if any
  std::string text;                           // final_answer
};

/// One (observation, reasoning, action) element of a trajectory.
struct TrajectoryStep {
  std::string observation;
  std::string reasoning;
  AgentAction action;
};

struct StepFragment {
  std::string reasoning;
  AgentAction action;
};

namespace detail {

// Markers are recognized at the start of a line (leading spaces allowed).
inline std::size_t find_marker(std::string_view text, std::string_view marker,
                               std::size_t from = 0) {
  std::size_t pos = from;
  while ((pos = text.find(marker, pos)) != std::string_view::npos) {
    std::size_t line_start = pos;
    while (line_start > 0 && (text[line_start - 1] == ' ' || text[line_start - 1] == '\t'))
      --line_start;
    if (line_start == 0 || text[line_start - 1] == '\n') return pos;
    pos += marker.size();
  }
  return std::string_view::npos;
}

inline std::string after_marker_line(std::string_view text, std::size_t marker_pos,
                                     std::size_t marker_len) {
  std::size_t begin = marker_pos + marker_len;
  std::size_t end = text.find('\n', begin);
  if (end == std::string_view::npos) end = text.size();
  return trim(text.substr(begin, end - begin));
}

}  // namespace detail

/// Extracts "Thought:" as reasoning and either "Action:"/"Action Input:" as
/// a tool call or "Final Answer:" (taken to end of message) as the final
/// answer. An Action Input that parses as a JSON object is split into the
/// "query" key and extra requested parameters; anything else is the query
/// verbatim.
inline StepFragment parse_step(const std::string& model_text) {
  static constexpr std::string_view kThought = "Thought:";
  static constexpr std::string_view kAction = "Action:";
  static constexpr std::string_view kActionInput = "Action Input:";
  static constexpr std::string_view kFinal = "Final Answer:";
  const std::string_view text = model_text;

  const std::size_t final_pos = detail::find_marker(text, kFinal);
  const std::size_t action_pos = detail::find_marker(text, kAction);
  if (final_pos == std::string_view::npos && action_pos == std::string_view::npos)
    raise(Errc::unparsable_step, "no Action or Final Answer in model output");

  StepFragment frag;
  const std::size_t thought_pos = detail::find_marker(text, kThought);
  if (thought_pos != std::string_view::npos) {
    std::size_t end = text.size();
    for (std::size_t stop : {final_pos, action_pos,
                             detail::find_marker(text, kActionInput)})
      if (stop != std::string_view::npos && stop > thought_pos && stop < end) end = stop;
    frag.reasoning =
        trim(text.substr(thought_pos + kThought.size(), end - thought_pos - kThought.size()));
  }

  if (final_pos != std::string_view::npos &&
      (action_pos == std::string_view::npos || final_pos < action_pos)) {
    frag.action.type = ActionType::final_answer;
    std::string_view rest = text.substr(final_pos + kFinal.size());
    std::size_t b = 0;
    while (b < rest.size() && is_ascii_space(static_cast<unsigned char>(rest[b]))) ++b;
    frag.action.text = std::string(rest.substr(b));
    return frag;
  }

  frag.action.type = ActionType::tool_call;
  frag.action.tool_id = detail::after_marker_line(text, action_pos, kAction.size());
  const std::size_t input_pos = detail::find_marker(text, kActionInput, action_pos);
  if (input_pos != std::string_view::npos) {
    std::size_t begin = input_pos + kActionInput.size();
    std::size_t end = detail::find_marker(text, "Observation:", begin);
    if (end == std::string_view::npos) end = text.size();
    const std::string raw = trim(text.substr(begin, end - begin));
    frag.action.query = raw;
    if (!raw.empty() && raw.front() == '{') {
      try {
        const json j = json::parse(raw);
        if (j.is_object()) {
          frag.action.query = j.value("query", "");
          for (auto it = j.begin(); it != j.end(); ++it) {
            if (it.key() == "query") continue;
            frag.action.params[it.key()] =
                it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
          }
        }
      } catch (const json::exception&) {
        // not JSON: keep the raw string as the query
      }
    }
  }
  return frag;
}

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

inline constexpr const char* kNoResultsObservation = "No results found.";

inline std::string render_snippets(const std::vector<Snippet>& snippets) {
  if (snippets.empty()) return kNoResultsObservation;
  std::string out;
  for (std::size_t i = 0; i < snippets.size(); ++i) {
    if (i) out += '\n';
    out += "[" + std::to_string(i + 1) + "] " + snippets[i].title + " (" +
           to_string(snippets[i].doc_date) + ") " + snippets[i].text;
  }
  return out;
}

inline std::string render_observation(const ToolOutcome& outcome) {
  switch (outcome.status) {
    case ToolOutcome::Status::ok:
      return render_snippets(outcome.snippets);
    case ToolOutcome::Status::param_rejected:
      return "Error: tool '" + outcome.rejection.tool_id +
             "' parameters are frozen; the attempt to set " + outcome.rejection.key + "=" +
             outcome.rejection.value +
             " was rejected. Use the given parameters in the tools and don't reset them.";
    case ToolOutcome::Status::unknown_tool:
      return "Error: unknown tool '" + outcome.rejection.tool_id +
             "'. Use one of the tools listed in the instructions.";
  }
  return {};
}

// ---------------------------------------------------------------------------
// The loop
// ---------------------------------------------------------------------------

enum class AgentPattern { react, react_cot };

inline const char* pattern_name(AgentPattern p) {
  return p == AgentPattern::react ? "react" : "react_cot";
}

struct AgentConfig {
  AgentPattern pattern = AgentPattern::react;
  int max_steps = 8;
  std::vector<ToolSpec> tools;
};

enum class RunStatus { ok, budget_exhausted, backend_error };

inline const char* status_name(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::budget_exhausted: return "budget_exhausted";
    case RunStatus::backend_error: return "backend_error";
  }
  return "ok";
}

struct AgentRunResult {
  std::string final_text;
  std::vector<TrajectoryStep> trajectory;
  RunStatus status = RunStatus::ok;
  std::string error;                    // set when status == backend_error
  std::vector<ChatMessage> transcript;  // full exchange including scaffold
};

/// Tool list plus the Thought/Action/Action Input/Final Answer wire format,
/// appended after the task prompt.
inline std::string tool_scaffold(const std::vector<ToolSpec>& tools) {
  std::string s = "You can call these search tools:\n";
  for (const auto& t : tools) s += "- " + t.tool_id + ": results dated in " + t.window.str() + "\n";
  s += "\nRespond in exactly this format:\n"
       "Thought: what you are considering\n"
       "Action: the tool id\n"
       "Action Input: the search query\n"
       "Then stop and wait for an Observation with the results. Repeat Thought/Action/Action "
       "Input as needed. When you are ready, respond with:\n"
       "Final Answer: the completed text\n";
  return s;
}

inline constexpr const char* kRepromptMessage =
    "Your last message could not be parsed. Respond using Thought/Action/Action Input, or give "
    "a Final Answer.";
inline constexpr int kMaxConsecutiveReprompts = 2;

/// ReAct loop: model call -> parse -> tool invocation -> observation, until
/// Final Answer or the step budget runs out. Every tool call goes through
/// the registry, so the parameter lock and audit trail apply; rejections
/// come back to the model as error observations.
inline AgentRunResult run_agent(const std::string& prompt, const AgentConfig& config,
                                ChatModel& model, AuditLog* audit = nullptr) {
  if (config.max_steps < 1) raise(Errc::invalid_argument, "max_steps must be >= 1");
  ToolRegistry registry(config.tools, audit);

  AgentRunResult result;
  result.transcript.push_back({"system", kSystemPrompt});
  result.transcript.push_back({"user", prompt + "\n" + tool_scaffold(config.tools)});

  std::string pending_observation = "None";
  std::string last_model_text;
  int reprompts = 0;

  while (static_cast<int>(result.trajectory.size()) < config.max_steps) {
    std::string text;
    try {
      text = model.complete(result.transcript);
    } catch (const Error& e) {
      result.status = RunStatus::backend_error;
      result.error = e.what();
      result.final_text = last_model_text;
      return result;
    }
    last_model_text = text;
    result.transcript.push_back({"assistant", text});

    StepFragment frag;
    try {
      frag = parse_step(text);
    } catch (const Error&) {
      if (++reprompts > kMaxConsecutiveReprompts) {
        result.status = RunStatus::backend_error;
        result.error = "unparsable_step: model output stayed unparsable after " +
                       std::to_string(kMaxConsecutiveReprompts) + " reprompts";
        result.final_text = text;
        return result;
      }
      result.transcript.push_back({"user", kRepromptMessage});
      continue;
    }
    reprompts = 0;

    if (frag.action.type == ActionType::final_answer) {
      result.trajectory.push_back({pending_observation, frag.reasoning, frag.action});
      result.final_text = frag.action.text;
      result.status = RunStatus::ok;
      return result;
    }

    const ToolOutcome outcome = registry.invoke(frag.action.tool_id, frag.action.query,
                                                frag.action.params);
    result.trajectory.push_back({pending_observation, frag.reasoning, frag.action});
    pending_observation = render_observation(outcome);
    result.transcript.push_back({"user", "Observation: " + pending_observation});
  }

  result.status = RunStatus::budget_exhausted;
  result.final_text = last_model_text;
  return result;
}

// ---------------------------------------------------------------------------
// Offline stub policy
// ---------------------------------------------------------------------------

/// Deterministic stand-in model for offline end-to-end runs: searches once
/// with the leading unmasked words (picking the last listed tool, which for
/// the yearly toolset is the latest window), then fills each [UNK] with
/// successive observation tokens, falling back to the masked text when the
/// search came back empty.
class OfflineStubModel : public ChatModel {
 public:
  std::string complete(const std::vector<ChatMessage>& messages) override {
    if (!searched_) {
      searched_ = true;
      const std::string user = first_user_content(messages);
      masked_ = extract_masked_text(user);
      const std::string tool = last_tool_id(user);
      std::string query;
      int kept = 0;
      for (const auto& tok : whitespace_tokens(masked_)) {
        if (tok == kMaskToken) continue;
        query += (kept ? " " : "") + tok;
        if (++kept == 8) break;
      }
      return "Thought: I will look up the masked passage.\nAction: " + tool +
             "\nAction Input: " + query;
    }
    const std::string obs = last_observation(messages);
    return "Thought: I will fill in the blanks with what I found.\nFinal Answer: " +
           fill_masked(masked_, obs);
  }

  std::string model_name() const override { return "offline-stub"; }

 private:
  static std::string first_user_content(const std::vector<ChatMessage>& messages) {
    for (const auto& m : messages)
      if (m.role == "user") return m.content;
    return {};
  }

  static std::string last_observation(const std::vector<ChatMessage>& messages) {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
      if (it->role == "user" && it->content.rfind("Observation: ", 0) == 0)
        return it->content.substr(13);
    }
    return {};
  }

  static std::string extract_masked_text(const std::string& user) {
    const std::string key = "Masked text: ";
    const auto pos = user.find(key);
    if (pos == std::string::npos) return {};
    auto end = user.find('\n', pos);
    if (end == std::string::npos) end = user.size();
    return user.substr(pos + key.size(), end - pos - key.size());
  }

  static std::string last_tool_id(const std::string& user) {
    const std::string key = ": results dated in (";
    std::string tool;
    std::size_t pos = 0;
    while ((pos = user.find(key, pos)) != std::string::npos) {
      auto line_start = user.rfind('\n', pos);
      line_start = line_start == std::string::npos ? 0 : line_start + 1;
      if (user.compare(line_start, 2, "- ") == 0)
        tool = user.substr(line_start + 2, pos - line_start - 2);
      pos += key.size();
    }
    return tool;
  }

  static std::string fill_masked(const std::string& masked, const std::string& observation) {
    if (observation.empty() || observation == kNoResultsObservation) return masked;
    const auto fillers = whitespace_tokens(observation);
    if (fillers.empty()) return masked;
    std::string out;
    std::size_t next = 0;
    for (const auto& tok : whitespace_tokens(masked)) {
      if (!out.empty()) out += ' ';
      if (tok == kMaskToken) {
        out += fillers[next % fillers.size()];
        ++next;
      } else {
        out += tok;
      }
    }
    return out;
  }

  bool searched_ = false;
  std::string masked_;
};

}  // namespace chronogate
