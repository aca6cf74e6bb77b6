#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccl/dsl/check.hpp"
#include "ccl/dsl/parser.hpp"

namespace ccl {

inline constexpr std::size_t kVariantsPerCohort = 5;
inline constexpr std::size_t kCohortSize = kVariantsPerCohort + 1;

inline const std::vector<std::string>& domain_tags() {
  static const std::vector<std::string> tags{"arc-challenge", "arc-easy", "csqa",
                                             "strategyqa",    "hotpotqa", "other"};
  return tags;
}

using Bindings = std::map<std::string, std::string>;

/// The four inputs a policy sees for one question family.
struct AbstractionTemplate {
  std::string template_id;
  std::string masked_question;
  std::vector<std::string> parameter_names;
  std::vector<std::string> options;
  std::string function_header;
  std::string domain_tag = "other";
};

struct QuestionVariant {
  Bindings bindings;
  std::string question_text;
  int gold_index = 0;
};

/// One original question and its five variants under a shared template.
struct CohortInstance {
  std::string cohort_id;
  AbstractionTemplate tmpl;
  QuestionVariant original;
  std::vector<QuestionVariant> variants;

  std::size_t size() const { return 1 + variants.size(); }
  /// Member 0 is the original, 1..5 the variants.
  const QuestionVariant& member(std::size_t i) const { return i == 0 ? original : variants.at(i - 1); }
};

class TemplateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Load failure with the JSONL line number and the offending field path.
class CohortLoadError : public std::runtime_error {
 public:
  CohortLoadError(std::string path, std::size_t line, std::string field, const std::string& msg)
      : std::runtime_error(path + ":" + std::to_string(line) +
                           (field.empty() ? "" : " [" + field + "]") + ": " + msg),
        line_(line),
        field_(std::move(field)) {}
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// --- placeholders ----------------------------------------------------------

/// Placeholder names in order of first appearance in `text` (`{Name}` slots).
inline std::vector<std::string> placeholders(const std::string& text) {
  static const std::regex slot(R"(\{([A-Za-z][A-Za-z0-9_]*)\})");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), slot); it != std::sregex_iterator();
       ++it) {
    std::string name = (*it)[1].str();
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  return out;
}

inline std::string instantiate_template(const AbstractionTemplate& tmpl, const Bindings& bindings) {
  for (const auto& name : tmpl.parameter_names)
    if (!bindings.count(name)) throw TemplateError("missing binding for '" + name + "'");
  for (const auto& [key, _] : bindings)
    if (std::find(tmpl.parameter_names.begin(), tmpl.parameter_names.end(), key) ==
        tmpl.parameter_names.end())
      throw TemplateError("unexpected binding '" + key + "'");

  static const std::regex slot(R"(\{([A-Za-z][A-Za-z0-9_]*)\})");
  std::string out;
  auto begin = tmpl.masked_question.cbegin();
  auto last = begin;
  for (auto it = std::sregex_iterator(begin, tmpl.masked_question.cend(), slot);
       it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out.append(last, m[0].first);
    auto found = bindings.find(m[1].str());
    // A brace group naming something other than a parameter is literal text.
    out += found != bindings.end() ? found->second : m[0].str();
    last = m[0].second;
  }
  out.append(last, tmpl.masked_question.cend());
  return out;
}

/// Collapses whitespace runs, trims, and drops trailing punctuation.
inline std::string normalize_question_text(const std::string& text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(c);
  }
  while (!out.empty() && (std::ispunct(static_cast<unsigned char>(out.back())) || out.back() == ' '))
    out.pop_back();
  return out;
}

// --- validation ------------------------------------------------------------

/// Template-level invariant violations; empty when the template is well formed.
inline std::vector<std::string> template_problems(const AbstractionTemplate& tmpl) {
  std::vector<std::string> problems;
  auto slots = placeholders(tmpl.masked_question);
  std::set<std::string> slot_set(slots.begin(), slots.end());
  std::set<std::string> param_set(tmpl.parameter_names.begin(), tmpl.parameter_names.end());
  if (param_set.size() != tmpl.parameter_names.size()) problems.push_back("parameters: duplicate name");
  for (const auto& s : slot_set)
    if (!param_set.count(s)) problems.push_back("masked_question: placeholder {" + s + "} not in parameters");
  for (const auto& p : param_set)
    if (!slot_set.count(p)) problems.push_back("parameters: '" + p + "' does not appear in masked_question");

  if (tmpl.options.size() < 2) problems.push_back("options: need at least 2 options");
  std::set<std::string> opt_set(tmpl.options.begin(), tmpl.options.end());
  if (opt_set.size() != tmpl.options.size()) problems.push_back("options: duplicate option");
  for (const auto& o : tmpl.options)
    if (o.empty()) problems.push_back("options: empty option text");

  if (std::find(domain_tags().begin(), domain_tags().end(), tmpl.domain_tag) == domain_tags().end())
    problems.push_back("domain: unknown tag '" + tmpl.domain_tag + "'");

  try {
    auto params = dsl::parse_header(tmpl.function_header);
    std::vector<std::string> names;
    for (const auto& p : params) names.push_back(p.name);
    if (names != tmpl.parameter_names)
      problems.push_back("function_header: parameter names differ from parameters");
  } catch (const dsl::ParseError& e) {
    problems.push_back(std::string("function_header: ") + e.what());
  }
  return problems;
}

struct MemberCheck {
  std::size_t member = 0;  // 0 = original
  bool template_match = false;
  bool gold_in_range = false;
  bool binding_keys_match = false;
  std::string detail;

  bool ok() const { return template_match && gold_in_range && binding_keys_match; }
};

struct ValidationReport {
  std::string cohort_id;
  std::vector<std::string> template_problems;
  bool cohort_size_ok = false;
  std::vector<MemberCheck> members;

  bool ok() const {
    if (!template_problems.empty() || !cohort_size_ok) return false;
    return std::all_of(members.begin(), members.end(), [](const MemberCheck& m) { return m.ok(); });
  }
};

inline ValidationReport validate_cohort(const CohortInstance& cohort) {
  ValidationReport report;
  report.cohort_id = cohort.cohort_id;
  report.template_problems = template_problems(cohort.tmpl);
  report.cohort_size_ok = cohort.variants.size() == kVariantsPerCohort;
  const auto& names = cohort.tmpl.parameter_names;
  std::set<std::string> expected(names.begin(), names.end());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& v = cohort.member(i);
    MemberCheck check;
    check.member = i;
    std::set<std::string> keys;
    for (const auto& [k, _] : v.bindings) keys.insert(k);
    check.binding_keys_match = keys == expected;
    check.gold_in_range =
        v.gold_index >= 0 && static_cast<std::size_t>(v.gold_index) < cohort.tmpl.options.size();
    if (check.binding_keys_match) {
      std::string rendered = instantiate_template(cohort.tmpl, v.bindings);
      check.template_match =
          normalize_question_text(rendered) == normalize_question_text(v.question_text);
      if (!check.template_match) check.detail = "expected \"" + rendered + "\"";
    } else {
      check.detail = "binding keys differ from parameters";
    }
    if (!check.gold_in_range) {
      if (!check.detail.empty()) check.detail += "; ";
      check.detail += "gold index " + std::to_string(v.gold_index) + " out of range";
    }
    report.members.push_back(std::move(check));
  }
  return report;
}

// --- JSONL ingestion -------------------------------------------------------

namespace detail {

struct FieldError {
  std::string field;
  std::string msg;
};

inline const nlohmann::json& require(const nlohmann::json& obj, const std::string& key,
                                     const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw FieldError{path + key, "missing field"};
  return obj.at(key);
}

inline std::string require_string(const nlohmann::json& obj, const std::string& key,
                                  const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_string()) throw FieldError{path + key, "expected string"};
  return v.get<std::string>();
}

inline std::vector<std::string> require_string_list(const nlohmann::json& obj, const std::string& key) {
  const auto& v = require(obj, key, "");
  if (!v.is_array()) throw FieldError{key, "expected array of strings"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) throw FieldError{key + "[" + std::to_string(i) + "]", "expected string"};
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

/// Gold answers may be option indices or option letters ("A", "B", ...).
inline int parse_gold(const nlohmann::json& v, std::size_t option_count, const std::string& path) {
  int index = -1;
  if (v.is_number_integer()) {
    index = v.get<int>();
  } else if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.size() != 1 || !std::isalpha(static_cast<unsigned char>(s[0])))
      throw FieldError{path, "gold letter must be a single letter"};
    index = std::toupper(static_cast<unsigned char>(s[0])) - 'A';
  } else {
    throw FieldError{path, "gold must be an integer index or option letter"};
  }
  if (index < 0 || static_cast<std::size_t>(index) >= option_count)
    throw FieldError{path, "gold index " + std::to_string(index) + " out of range for " +
                               std::to_string(option_count) + " options"};
  return index;
}

inline QuestionVariant parse_member(const nlohmann::json& obj, const AbstractionTemplate& tmpl,
                                    const std::string& path) {
  if (!obj.is_object()) throw FieldError{path, "expected object"};
  QuestionVariant v;
  const auto& b = require(obj, "bindings", path + ".");
  if (!b.is_object()) throw FieldError{path + ".bindings", "expected object"};
  for (const auto& [key, value] : b.items()) {
    if (!value.is_string()) throw FieldError{path + ".bindings." + key, "expected string"};
    v.bindings[key] = value.get<std::string>();
  }
  std::set<std::string> expected(tmpl.parameter_names.begin(), tmpl.parameter_names.end());
  for (const auto& name : expected)
    if (!v.bindings.count(name)) throw FieldError{path + ".bindings." + name, "missing binding"};
  for (const auto& [key, _] : v.bindings)
    if (!expected.count(key)) throw FieldError{path + ".bindings." + key, "not a template parameter"};
  v.question_text = require_string(obj, "question", path + ".");
  v.gold_index = parse_gold(require(obj, "gold", path + "."), tmpl.options.size(), path + ".gold");
  return v;
}

}  // namespace detail

/// Parses one cohort record; throws CohortLoadError (line 0) on schema violations.
inline CohortInstance cohort_from_json(const nlohmann::json& obj, const std::string& source = "<json>",
                                       std::size_t line = 0) {
  try {
    if (!obj.is_object()) throw detail::FieldError{"", "expected a JSON object"};
    CohortInstance c;
    c.cohort_id = detail::require_string(obj, "cohort_id", "");
    c.tmpl.template_id = c.cohort_id;
    c.tmpl.domain_tag = detail::require_string(obj, "domain", "");
    c.tmpl.masked_question = detail::require_string(obj, "masked_question", "");
    c.tmpl.parameter_names = detail::require_string_list(obj, "parameters");
    c.tmpl.options = detail::require_string_list(obj, "options");
    c.tmpl.function_header = detail::require_string(obj, "function_header", "");
    for (const auto& problem : template_problems(c.tmpl)) {
      auto colon = problem.find(':');
      throw detail::FieldError{problem.substr(0, colon), problem.substr(colon + 2)};
    }
    c.original = detail::parse_member(detail::require(obj, "original", ""), c.tmpl, "original");
    const auto& vars = detail::require(obj, "variants", "");
    if (!vars.is_array()) throw detail::FieldError{"variants", "expected array"};
    if (vars.size() != kVariantsPerCohort)
      throw detail::FieldError{"variants", "expected exactly " + std::to_string(kVariantsPerCohort) +
                                               " variants, found " + std::to_string(vars.size())};
    for (std::size_t i = 0; i < vars.size(); ++i)
      c.variants.push_back(
          detail::parse_member(vars[i], c.tmpl, "variants[" + std::to_string(i) + "]"));
    return c;
  } catch (const detail::FieldError& e) {
    throw CohortLoadError(source, line, e.field, e.msg);
  }
}

inline nlohmann::json cohort_to_json(const CohortInstance& c) {
  auto member = [](const QuestionVariant& v) {
    return nlohmann::json{{"bindings", v.bindings}, {"question", v.question_text}, {"gold", v.gold_index}};
  };
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : c.variants) vars.push_back(member(v));
  return {{"cohort_id", c.cohort_id},
          {"domain", c.tmpl.domain_tag},
          {"masked_question", c.tmpl.masked_question},
          {"parameters", c.tmpl.parameter_names},
          {"options", c.tmpl.options},
          {"function_header", c.tmpl.function_header},
          {"original", member(c.original)},
          {"variants", vars}};
}

/// Reads a cohort JSONL file; blank lines are skipped.
inline std::vector<CohortInstance> load_cohorts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cohort file '" + path + "'");
  std::vector<CohortInstance> cohorts;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); }))
      continue;
    auto obj = nlohmann::json::parse(text, nullptr, false);
    if (obj.is_discarded()) throw CohortLoadError(path, line, "", "malformed JSON");
    cohorts.push_back(cohort_from_json(obj, path, line));
  }
  if (in.bad()) throw std::runtime_error("read error on '" + path + "'");
  return cohorts;
}

/// Parses `source` against the cohort template's function header.
inline dsl::Program parse_for_template(std::string_view source, const AbstractionTemplate& tmpl) {
  return dsl::parse_program(source, tmpl.function_header);
}

/// Static checks of a program already parsed against `tmpl`.
inline dsl::CheckReport check_program(const dsl::Program& program, const AbstractionTemplate& tmpl) {
  if (program.params != dsl::parse_header(tmpl.function_header))
    throw dsl::ParseError(dsl::ParseErrorKind::SignatureMismatch,
                          "program signature differs from template header", {1, 1});
  return dsl::check_program(program);
}

}  // namespace ccl
