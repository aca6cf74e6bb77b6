#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ccl/retriever.hpp"

namespace ccl {

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

/// One few-shot turn of the fact-lookup prompt: a query, its requested type, and the
/// reference reply. `answered` is false for the "idk" turns.
struct FewShotExample {
  std::string_view question;
  ValueKind kind;
  std::string_view reply;
  bool answered;
};

inline constexpr std::string_view kFactLookupSystemPrompt =
    "You are a fact-lookup assistant. For each user query, first decide if it's a simple, "
    "single-step fact lookup without solving it and then return a JSON object with exactly one "
    "key, \"answer\", wrapped in ```json ...```. Match the type specified in parentheses (int, str, "
    "list, bool). If a query requires more than a straightforward fact check or true/false "
    "lookup—for example, multi-step reasoning or subjective judgment—reply with \"idk\".";

inline std::span<const FewShotExample> fact_lookup_examples() {
  static constexpr FewShotExample examples[] = {
      {"Who finished immediately after the winner at the 1992 Olympic 100m final?", ValueKind::Str,
       "[Explanation] You must identify the winner, then determine who came second—this isn’t "
       "single-step.\n```json\n{\"answer\": \"idk\"}\n```",
       false},
      {"How many planets are in the solar system?", ValueKind::Int,
       "[Explanation] Simple fact check.\n```json\n{\"answer\": 8}\n```", true},
      {"What is the profession of Michael Jackson?", ValueKind::Str,
       "[Explanation] Single well-known profession of a public figure.\n```json\n{\"answer\": "
       "\"singer\"}\n```",
       true},
      {"Who has more than one Nobel Prize?", ValueKind::List,
       "[Explanation] Factual list of individuals with multiple Nobel Prizes.\n```json\n{\"answer\": "
       "[\"John Bardeen\", \"Frederick Sanger\", \"Linus Pauling\", \"Marie Curie\"]}\n```",
       true},
      {"Is the CEO of Tesla older than the current President of France?", ValueKind::Bool,
       "[Explanation] Requires fetching and comparing two birthdates—multi-step.\n```json\n{\"answer\": "
       "\"idk\"}\n```",
       false},
      {"Is the Eiffel Tower located in Paris, France?", ValueKind::Bool,
       "[Explanation] Single-step landmark location.\n```json\n{\"answer\": false}\n```", true},
      {"Did England win any Olympic gold medals in 1800?", ValueKind::Bool,
       "[Explanation] Must check when the modern Olympics began and then medal "
       "records—multi-step.\n```json\n{\"answer\": \"idk\"}\n```",
       false},
      {"What is the population of the largest country entirely south of the equator?", ValueKind::Int,
       "[Explanation] Identify the country then lookup its population—multi-step.\n```json\n{\"answer\": "
       "\"idk\"}\n```",
       false},
      {"List the U.S. states admitted to the Union between the first and the last of the original 13 "
       "colonies.",
       ValueKind::List,
       "[Explanation] Order states by admission date and filter—multi-step.\n```json\n{\"answer\": "
       "\"idk\"}\n```",
       false},
      {"Can food be cooked in the cosmic microwave background?", ValueKind::Bool,
       "[Explanation] Must compare CMB temperature (~2.7 K) to cooking physics—multi-step.\n```json\n{"
       "\"answer\": \"idk\"}\n```",
       false},
      {"Are Waris Hussein and Mathieu Kassovitz both actors?", ValueKind::Bool,
       "[Explanation] Fetch each person’s profession and compare—multi-step.\n```json\n{\"answer\": "
       "\"idk\"}\n```",
       false},
  };
  return examples;
}

/// Final user turn: `{prompt} ({return_type})`.
inline std::string format_lookup_query(std::string_view question, ValueKind kind) {
  return std::string(question) + " (" + std::string(kind_name(kind)) + ")";
}

/// Number of messages before the final query turn.
inline std::size_t fact_lookup_fixed_turns() { return 1 + 2 * fact_lookup_examples().size(); }

inline std::vector<ChatMessage> build_rejection_prompt(const RetrieveRequest& request) {
  std::vector<ChatMessage> messages;
  messages.reserve(fact_lookup_fixed_turns() + 1);
  messages.push_back({"system", std::string(kFactLookupSystemPrompt)});
  for (const auto& ex : fact_lookup_examples()) {
    messages.push_back({"user", format_lookup_query(ex.question, ex.kind)});
    messages.push_back({"assistant", std::string(ex.reply)});
  }
  messages.push_back({"user", format_lookup_query(request.question, request.kind)});
  return messages;
}

/// Interprets a model reply under the fact-lookup protocol. Never throws.
///
/// The last ```json fenced block must hold an object with the single key "answer".
/// "idk" maps to Rejected; any other answer must match `kind` exactly.
inline RetrieveResponse parse_llm_reply(std::string_view raw, ValueKind kind) {
  try {
    constexpr std::string_view open = "```json";
    auto start = raw.rfind(open);
    if (start == std::string_view::npos) return RetrieveResponse::error("no fenced json block");
    auto body_begin = start + open.size();
    auto close = raw.find("```", body_begin);
    if (close == std::string_view::npos) return RetrieveResponse::error("unterminated json block");
    auto doc = nlohmann::json::parse(raw.substr(body_begin, close - body_begin), nullptr, false);
    if (doc.is_discarded()) return RetrieveResponse::error("malformed json");
    if (!doc.is_object() || doc.size() != 1 || !doc.contains("answer"))
      return RetrieveResponse::error("wrong shape: expected {\"answer\": ...}");
    const auto& answer = doc["answer"];
    if (answer.is_string() && lowercase(answer.get<std::string>()) == "idk")
      return RetrieveResponse::rejected();
    auto value = value_from_json(answer, kind);
    if (!value) return RetrieveResponse::error("kind mismatch: expected " + std::string(kind_name(kind)));
    return RetrieveResponse::value(std::move(*value));
  } catch (const std::exception& e) {
    return RetrieveResponse::error(std::string("reply parsing failed: ") + e.what());
  }
}

}  // namespace ccl
