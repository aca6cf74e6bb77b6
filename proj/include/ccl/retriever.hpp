#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>

#include <json.hpp>

#include "ccl/value.hpp"

namespace ccl {

struct RetrieveRequest {
  std::string question;
  ValueKind kind = ValueKind::Bool;
};

/// Outcome of one retrieve call: a typed value, an "idk" rejection, or a backend fault.
struct RetrieveResponse {
  struct Rejected {
    bool operator==(const Rejected&) const = default;
  };
  struct BackendError {
    std::string reason;
    bool operator==(const BackendError&) const = default;
  };
  std::variant<Value, Rejected, BackendError> outcome;

  static RetrieveResponse value(Value v) { return {std::move(v)}; }
  static RetrieveResponse rejected() { return {Rejected{}}; }
  static RetrieveResponse error(std::string reason) { return {BackendError{std::move(reason)}}; }

  bool is_value() const { return std::holds_alternative<Value>(outcome); }
  bool is_rejected() const { return std::holds_alternative<Rejected>(outcome); }
  bool is_error() const { return std::holds_alternative<BackendError>(outcome); }
  const Value& get_value() const { return std::get<Value>(outcome); }
  const std::string& error_reason() const { return std::get<BackendError>(outcome).reason; }

  bool operator==(const RetrieveResponse&) const = default;
};

class Retriever {
 public:
  virtual ~Retriever() = default;
  virtual RetrieveResponse retrieve(const RetrieveRequest& request) = 0;
  /// True when retrieve() may be called from several threads at once.
  virtual bool concurrent_safe() const { return false; }
  /// True when equal requests always produce equal responses.
  virtual bool deterministic() const { return false; }
};

// --- complexity filter -----------------------------------------------------

enum class Complexity { Simple, Complex };

/// Which rule marked a question complex; empty when none fired.
struct ComplexityVerdict {
  Complexity complexity = Complexity::Simple;
  std::string rule;
};

inline std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

/// Rule-based stand-in for the retriever's single-step gate.
///
/// A question is complex when it
///  - compares two looked-up quantities ("older than", "more X than", "immediately after the winner"),
///  - takes a superlative over an open set ("the largest country entirely south ..."),
///  - conjoins predicates over two entities ("Are X and Y both ..."),
///  - embeds a sub-question ("between the first and the last"),
///  - asks whether anything at all happened in a period ("any ... in 1800"), or
///  - asks for a feasibility judgement ("Can food be cooked in ...").
inline ComplexityVerdict explain_complexity(const std::string& question) {
  const std::string q = lowercase(question);
  struct Rule {
    const char* name;
    std::regex pattern;
  };
  static const Rule rules[] = {
      {"comparative",
       std::regex(R"(\b(?!(?:other|rather|whether|over|under|after|ever|never|either|neither|per)\b)\w+er than\b)")},
      {"comparative", std::regex(R"(\b(more|less|fewer) (?!than\b)\w+( \w+)? than\b)")},
      {"comparative", std::regex(R"(\bimmediately (after|before)\b|\bthe (winner|runner-up)\b)")},
      {"superlative",
       std::regex(R"(\bthe (largest|smallest|biggest|highest|lowest|longest|shortest|oldest|youngest|greatest|tallest|deepest|richest|most|least|best|worst|first|last) \w+ (entirely|that|which|who|whose|in|of|on|to|north|south|east|west)\b)")},
      {"conjunction", std::regex(R"(\b(are|were|is|was|do|does|did|have|has)\b.+\band\b.+\bboth\b)")},
      {"conjunction", std::regex(R"(\bboth\b.+\band\b)")},
      {"sub-question", std::regex(R"(\bbetween the (first|last)\b|\bthe (first|last) and the (first|last)\b)")},
      {"open-existential", std::regex(R"(\bany\b.*\b(in|during|before|after) \d{3,4}\b)")},
      {"feasibility", std::regex(R"(^\s*(can|could|would)\b.+\b(be|possibly)\b)")},
  };
  for (const auto& rule : rules)
    if (std::regex_search(q, rule.pattern)) return {Complexity::Complex, rule.name};
  return {};
}

inline Complexity classify_complexity(const std::string& question) {
  return explain_complexity(question).complexity;
}

// --- fact table ------------------------------------------------------------

/// Case-folds, collapses whitespace and strips terminal punctuation.
inline std::string normalize_fact_question(const std::string& question) {
  std::string out;
  bool space = false;
  for (unsigned char c : question) {
    if (std::isspace(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out += ' ';
    space = false;
    out += static_cast<char>(std::tolower(c));
  }
  while (!out.empty() && (out.back() == '?' || out.back() == '.' || out.back() == '!' ||
                          out.back() == ' '))
    out.pop_back();
  return out;
}

/// Converts a JSON value to a typed Value, or nullopt when it does not fit `kind`.
/// Typing is strict: no string/bool coercion, integers are accepted as floats.
inline std::optional<Value> value_from_json(const nlohmann::json& j, ValueKind kind) {
  switch (kind) {
    case ValueKind::Int:
      if (j.is_number_integer()) return Value(j.get<std::int64_t>());
      return std::nullopt;
    case ValueKind::Float:
      if (j.is_number()) return Value(j.get<double>());
      return std::nullopt;
    case ValueKind::Str:
      if (j.is_string()) return Value(j.get<std::string>());
      return std::nullopt;
    case ValueKind::Bool:
      if (j.is_boolean()) return Value(j.get<bool>());
      return std::nullopt;
    case ValueKind::List: {
      if (!j.is_array()) return std::nullopt;
      List items;
      for (const auto& item : j) {
        if (item.is_boolean()) items.emplace_back(item.get<bool>());
        else if (item.is_number_integer()) items.emplace_back(item.get<std::int64_t>());
        else if (item.is_number()) items.emplace_back(item.get<double>());
        else if (item.is_string()) items.emplace_back(item.get<std::string>());
        else return std::nullopt;
      }
      return Value(std::move(items));
    }
  }
  return std::nullopt;
}

inline nlohmann::json value_to_json(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Int: return v.as_int();
    case ValueKind::Float: return v.as_float();
    case ValueKind::Str: return v.as_str();
    case ValueKind::Bool: return v.as_bool();
    case ValueKind::List: {
      auto arr = nlohmann::json::array();
      for (const auto& item : v.as_list()) arr.push_back(value_to_json(item));
      return arr;
    }
  }
  return nullptr;
}

/// Immutable question -> typed answer table backing the mock retriever.
class FactTable {
 public:
  struct Entry {
    ValueKind kind;
    Value value;
  };

  void add(const std::string& question, Value value) {
    ValueKind kind = value.kind();
    entries_[normalize_fact_question(question)] = Entry{kind, std::move(value)};
  }

  const Entry* find(const std::string& question) const {
    auto it = entries_.find(normalize_fact_question(question));
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return entries_.size(); }

  /// JSONL rows `{"q": str, "kind": "int|float|str|bool|list", "value": any}`.
  static FactTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open fact table '" + path + "'");
    FactTable table;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
      ++line;
      if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); }))
        continue;
      auto where = path + ":" + std::to_string(line) + ": ";
      auto row = nlohmann::json::parse(text, nullptr, false);
      if (row.is_discarded() || !row.is_object()) throw std::runtime_error(where + "malformed JSON");
      if (!row.contains("q") || !row["q"].is_string()) throw std::runtime_error(where + "missing 'q'");
      if (!row.contains("kind") || !row["kind"].is_string())
        throw std::runtime_error(where + "missing 'kind'");
      auto kind = parse_kind(row["kind"].get<std::string>());
      if (!kind) throw std::runtime_error(where + "unknown kind");
      if (!row.contains("value")) throw std::runtime_error(where + "missing 'value'");
      auto value = value_from_json(row["value"], *kind);
      if (!value) throw std::runtime_error(where + "value does not match kind");
      table.add(row["q"].get<std::string>(), std::move(*value));
    }
    return table;
  }

 private:
  std::unordered_map<std::string, Entry> entries_;
};

/// Deterministic retriever: table hit answers, everything else is rejected.
class MockRetriever : public Retriever {
 public:
  explicit MockRetriever(FactTable table) : table_(std::move(table)) {}

  RetrieveResponse retrieve(const RetrieveRequest& request) override {
    if (const auto* entry = table_.find(request.question)) {
      if (entry->kind != request.kind)
        return RetrieveResponse::error("kind mismatch: table has " + std::string(kind_name(entry->kind)) +
                                       ", request asks " + std::string(kind_name(request.kind)));
      return RetrieveResponse::value(entry->value);
    }
    // Complex questions are refused; simple ones the table cannot answer are refused too.
    return RetrieveResponse::rejected();
  }

  bool concurrent_safe() const override { return true; }
  bool deterministic() const override { return true; }

  const FactTable& table() const { return table_; }

 private:
  FactTable table_;
};

}  // namespace ccl
