#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ccl/dsl/check.hpp"
#include "ccl/dsl/format.hpp"
#include "ccl/dsl/parser.hpp"
#include "support/program_gen.hpp"

using namespace ccl;
using namespace ccl::dsl;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ParseErrorKind error_kind(std::string_view src) {
  try {
    parse_program(src);
  } catch (const ParseError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a parse error for:\n" << src;
  return ParseErrorKind::Syntax;
}

std::string wrap_body(std::string_view body, std::string_view sig = "x: int, s: str, xs: list, b: bool") {
  return "def answer(" + std::string(sig) + ") -> int:\n" + std::string(body);
}

}  // namespace

TEST(Lexer, IndentationProducesBlocks) {
  auto p = parse_program(wrap_body("    if b:\n        return 1\n    else:\n        return 0\n"));
  ASSERT_EQ(p.body.size(), 1u);
  const auto& s = std::get<If>(p.body[0].node);
  EXPECT_EQ(s.branches.size(), 1u);
  EXPECT_EQ(s.otherwise.size(), 1u);
}

TEST(Lexer, TabsInIndentationRejected) {
  EXPECT_EQ(error_kind(wrap_body("\treturn 1\n")), ParseErrorKind::Syntax);
}

TEST(Lexer, ImplicitLineJoiningInsideBrackets) {
  auto p = parse_program(wrap_body("    y = retrieve(\n        f\"Is {s} big?\", bool\n    )\n    return 1 if y else 0\n"));
  EXPECT_EQ(p.body.size(), 2u);
}

TEST(Lexer, UnclosedBracketIsError) {
  EXPECT_EQ(error_kind(wrap_body("    y = [1, 2\n    return 0\n")), ParseErrorKind::Syntax);
}

TEST(Lexer, StringEscapes) {
  auto p = parse_program(wrap_body("    t = 'a\\'b\\n\\t\\\\'\n    return len(t)\n"));
  const auto& a = std::get<Assign>(p.body[0].node);
  EXPECT_EQ(std::get<Literal>(a.value.node).value.as_str(), "a'b\n\t\\");
}

TEST(Lexer, RejectsLeadingZeroAndHugeInts) {
  EXPECT_EQ(error_kind(wrap_body("    return 007\n")), ParseErrorKind::Syntax);
  EXPECT_EQ(error_kind(wrap_body("    return 99999999999999999999999\n")), ParseErrorKind::Syntax);
}

TEST(Lexer, ErrorCarriesLocation) {
  try {
    parse_program(wrap_body("    y = 1\n    z = y $ 2\n    return 0\n"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.loc().line, 3);
    EXPECT_GT(e.loc().column, 1);
    EXPECT_NE(std::string(e.what()).find("at 3:"), std::string::npos);
  }
}

TEST(Parser, HeaderMustBeAnswerReturningInt) {
  EXPECT_EQ(error_kind("def solve(x: int) -> int:\n    return x\n"), ParseErrorKind::SignatureMismatch);
  EXPECT_EQ(error_kind("def answer(x: int) -> str:\n    return x\n"), ParseErrorKind::SignatureMismatch);
  EXPECT_EQ(error_kind("def answer(x: dict) -> int:\n    return 0\n"), ParseErrorKind::SignatureMismatch);
}

TEST(Parser, TypingImportIsDropped) {
  auto a = parse_program("from typing import Any, List\n\ndef answer(x: int) -> int:\n    return x\n");
  auto b = parse_program("def answer(x: int) -> int:\n    return x\n");
  EXPECT_EQ(a, b);
  EXPECT_EQ(error_kind("import os\ndef answer(x: int) -> int:\n    return x\n"), ParseErrorKind::ForbiddenConstruct);
}

TEST(Parser, HeaderCheckedAgainstTemplate) {
  const std::string src = "def answer(a: str, b: str) -> int:\n    return 0\n";
  EXPECT_NO_THROW(parse_program(src, "def answer(a: str, b: str) -> int"));
  try {
    parse_program(src, "def answer(a: str, c: str) -> int");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseErrorKind::SignatureMismatch);
  }
}

TEST(Parser, ForbiddenConstructs) {
  const char* bodies[] = {
      "    while b:\n        return 1\n    return 0\n",
      "    y = x * 2\n    return y\n",
      "    y = x / 2\n    return 0\n",
      "    y = x % 2\n    return 0\n",
      "    y = x ** 2\n    return 0\n",
      "    x += 1\n    return x\n",
      "    y = s.upper\n    return 0\n",
      "    y = xs[0:1]\n    return 0\n",
      "    y = [i for i in xs]\n    return 0\n",
      "    y = lambda: 1\n    return 0\n",
      "    y = 1 < x < 3\n    return 0\n",
      "    y = x in xs\n    return 0\n",
      "    print(x)\n    return 0\n",
      "    y = f\"{s}\"\n    return 0\n",
      "    y = open(s)\n    return 0\n",
      "    y = (1, 2)\n    return 0\n",
      "    y = undefined_name\n    return 0\n",
      "    y = len(xs, xs)\n    return 0\n",
      "    y = retrieve(s, int)\n    return 0\n",
      "    x\n    return 0\n",
      "    xs[0] = 1\n    return 0\n",
  };
  for (const char* body : bodies) {
    SCOPED_TRACE(body);
    try {
      parse_program(wrap_body(body));
      ADD_FAILURE() << "accepted";
    } catch (const ParseError& e) {
      EXPECT_NE(e.kind(), ParseErrorKind::SignatureMismatch);
      EXPECT_FALSE(e.detail().empty());
    }
  }
}

TEST(Parser, RetrieveRequiresKnownKind) {
  EXPECT_ANY_THROW(parse_program(wrap_body("    y = retrieve(\"q\", dict)\n    return 0\n")));
  auto p = parse_program(wrap_body("    y = retrieve(\"q\", float)\n    return 0\n"));
  EXPECT_EQ(std::get<RetrieveCall>(std::get<Assign>(p.body[0].node).value.node).kind, ValueKind::Float);
}

TEST(Parser, FStringInterpolationsMustBeNames) {
  EXPECT_ANY_THROW(parse_program(wrap_body("    y = retrieve(f\"{x + 1}\", int)\n    return 0\n")));
  EXPECT_ANY_THROW(parse_program(wrap_body("    y = retrieve(f\"{nope}\", int)\n    return 0\n")));
  auto p = parse_program(wrap_body("    y = retrieve(f\"{{lit}} {s}\", int)\n    return 0\n"));
  const auto& q = std::get<RetrieveCall>(std::get<Assign>(p.body[0].node).value.node).question;
  ASSERT_EQ(q.segments.size(), 2u);
  EXPECT_EQ(std::get<std::string>(q.segments[0]), "{lit} ");
}

TEST(Parser, ParamReferencesAreMarked) {
  auto p = parse_program(wrap_body("    y = x\n    return y\n"));
  EXPECT_TRUE(std::get<NameRef>(std::get<Assign>(p.body[0].node).value.node).is_param);
  EXPECT_FALSE(std::get<NameRef>(std::get<Return>(p.body[1].node).value.node).is_param);
}

TEST(Parser, ConditionalExpression) {
  auto p = parse_program(wrap_body("    return 0 if x > 1 else 1\n"));
  EXPECT_TRUE(std::holds_alternative<Conditional>(std::get<Return>(p.body[0].node).value.node));
}

TEST(Format, MinimalParenthesesAndIdempotence) {
  auto p = parse_program(wrap_body("    return ((x + 1) - (2 - x)) if (not (b and (b or b))) else 0\n"));
  std::string once = format_program(p);
  EXPECT_NE(once.find("x + 1 - (2 - x)"), std::string::npos) << once;
  EXPECT_NE(once.find("not (b and (b or b))"), std::string::npos) << once;
  EXPECT_EQ(format_program(parse_program(once)), once);
}

TEST(Format, FloatsKeepAFloatSpelling) {
  auto p = parse_program(wrap_body("    y = 3.0\n    z = 1e-05\n    return 0\n"));
  auto text = format_program(p);
  EXPECT_EQ(parse_program(text), p) << text;
}

TEST(Check, ReportsUnusedParamsRetrievesAndPaths) {
  auto p = parse_program("def answer(a: str, b: str) -> int:\n    x = retrieve(f\"{a}?\", bool)\n    if x:\n        return 1\n");
  auto r = check_program(p);
  EXPECT_FALSE(r.all_params_used);
  EXPECT_EQ(r.unused_params, std::vector<std::string>{"b"});
  EXPECT_EQ(r.static_retrieve_count, 1u);
  EXPECT_FALSE(r.meets_min_retrieves);
  EXPECT_FALSE(r.every_path_returns);
  EXPECT_FALSE(r.ok());
}

TEST(Check, LoopBodyNeverGuaranteesReturn) {
  auto p = parse_program(wrap_body("    for i in xs:\n        return 1\n"));
  EXPECT_FALSE(check_program(p).every_path_returns);
}

// --- exemplar corpus ------------------------------------------------------

TEST(Exemplars, ParseCheckAndRoundTrip) {
  std::map<std::string, std::size_t> expected_sites{{"related", 2},  {"founders", 2}, {"group_similarity", 3},
                                                    {"celestial", 6}, {"serving", 2},  {"ancestry", 3},
                                                    {"reaction", 2},  {"energy_loss", 3}};
  for (const auto& [name, sites] : expected_sites) {
    SCOPED_TRACE(name);
    auto src = slurp(std::filesystem::path(CCL_TEST_DATA) / "exemplars" / (name + ".py"));
    auto p = parse_program(src);
    auto r = check_program(p);
    EXPECT_EQ(r.static_retrieve_count, sites);
    EXPECT_TRUE(r.every_path_returns);
    // The reaction exemplar never reads PhysicalReaction.
    EXPECT_EQ(r.all_params_used, name != "reaction");
    auto text = format_program(p);
    EXPECT_EQ(parse_program(text), p) << text;
    EXPECT_EQ(format_program(parse_program(text)), text);
  }
}

// --- generated programs ---------------------------------------------------

TEST(Fuzz, GeneratedProgramsRoundTrip) {
  testkit::ProgramGenerator gen(42);
  testkit::NoisyPrinter noisy(43);
  for (int i = 0; i < 1000; ++i) {
    Program p = gen.generate();
    std::string canonical = format_program(p);
    Program back;
    ASSERT_NO_THROW(back = parse_program(canonical)) << canonical;
    ASSERT_EQ(back, p) << canonical;
    ASSERT_EQ(format_program(back), canonical);
    std::string messy = noisy.print(p);
    Program from_messy;
    ASSERT_NO_THROW(from_messy = parse_program(messy)) << messy;
    ASSERT_EQ(from_messy, p) << messy;
  }
}

TEST(Fuzz, InvalidInputsAlwaysDiagnosed) {
  testkit::ProgramGenerator gen(7);
  testkit::InvalidMutator mut(8);
  for (int i = 0; i < 10000; ++i) {
    std::string bad = mut.mutate(format_program(gen.generate()));
    try {
      parse_program(bad);
      FAIL() << "accepted invalid input:\n" << bad;
    } catch (const ParseError& e) {
      ASSERT_FALSE(e.detail().empty());
      ASSERT_GE(e.loc().line, 1);
    }
  }
}

TEST(Fuzz, CorruptedBytesNeverCrash) {
  testkit::ProgramGenerator gen(9);
  testkit::InvalidMutator mut(10);
  int rejected = 0;
  for (int i = 0; i < 5000; ++i) {
    std::string s = mut.corrupt(format_program(gen.generate()));
    try {
      parse_program(s);
    } catch (const ParseError&) {
      ++rejected;
    }
  }
  EXPECT_GT(rejected, 0);
}
