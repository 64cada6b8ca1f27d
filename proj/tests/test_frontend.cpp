#include <doctest.h>

#include <random>
#include <sstream>

#include "rxmod/frontend.hpp"

using namespace rxmod;
using namespace rxmod::frontend;

namespace {

const char* kCleanModel =
    "model CSTR\n"
    "  parameter VolumeFlowRate q = 0.001; // inlet volumetric flow rate\n"
    "  parameter Volume V = 1.5; // reactor volume\n"
    "  parameter Concentration cA0 = 125; // inlet concentration of A\n"
    "  parameter Real kf1 = 0.05; // forward rate constant of reaction 1 in 1/s\n"
    "  Concentration cA(start=cA0); // concentration of A\n"
    "equation\n"
    "  der(cA) = q/V*(cA0 - cA) - kf1*cA; // component balance for A\n"
    "end CSTR;\n";

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("clean model parses without diagnostics") {
  const auto ast = parse(kCleanModel);
  CHECK(ast.diagnostics.empty());
  CHECK(ast.model_name == "CSTR");
  REQUIRE(ast.declarations.size() == 5);
  CHECK(ast.declarations[0].is_parameter);
  CHECK(ast.declarations[0].type_name == "VolumeFlowRate");
  CHECK(ast.declarations[0].comment == "inlet volumetric flow rate");
  CHECK_FALSE(ast.declarations[4].is_parameter);
  REQUIRE(ast.declarations[4].start() != nullptr);
  REQUIRE(ast.equations.size() == 1);
  CHECK(ast.equations[0].comment == "component balance for A");
  CHECK(ast.has_end);
}

TEST_CASE("printing is byte-stable and parse-print idempotent") {
  const auto ast = parse(kCleanModel);
  const std::string printed = print(ast);
  CHECK(printed == kCleanModel);
  const auto again = parse(printed);
  CHECK(again.diagnostics.empty());
  CHECK(ast_equal(ast, again));
  CHECK(print(again) == printed);
}

TEST_CASE("initial pseudo-declaration yields one declaration-zone diagnostic") {
  const std::string src =
      "model M\n"
      "  Concentration cA; // state\n"
      "  initial cA = 5; // wrong convention\n"
      "equation\n"
      "  der(cA) = 0; // hold\n"
      "end M;\n";
  const auto ast = parse(src);
  REQUIRE(ast.diagnostics.size() == 1);
  CHECK(ast.diagnostics[0].zone == Diagnostic::Zone::kDeclaration);
  CHECK(ast.diagnostics[0].span.line == 3);
  // the valid declaration and the equation both survive
  CHECK(ast.declarations.size() == 1);
  CHECK(ast.equations.size() == 1);
}

TEST_CASE("missing end keyword recovers with declarations intact") {
  // fixture built by deleting the final line of a clean model
  std::string src = kCleanModel;
  src.erase(src.rfind("end CSTR;"));
  const auto ast = parse(src);
  REQUIRE(!ast.diagnostics.empty());
  bool found = false;
  for (const auto& d : ast.diagnostics) {
    if (d.zone == Diagnostic::Zone::kGeneral &&
        d.message.find("end") != std::string::npos)
      found = true;
  }
  CHECK(found);
  CHECK_FALSE(ast.has_end);
  CHECK(ast.declarations.size() == 5);
  CHECK(ast.equations.size() == 1);
}

TEST_CASE("equation-zone errors are general, declaration-zone errors are not") {
  const std::string src =
      "model M\n"
      "  parameter Real broken = ; // bad declaration\n"
      "  Real x; // fine\n"
      "equation\n"
      "  x + = 1; // bad equation\n"
      "  x = 2; // fine\n"
      "end M;\n";
  const auto ast = parse(src);
  int decl_zone = 0, general = 0;
  for (const auto& d : ast.diagnostics)
    (d.zone == Diagnostic::Zone::kDeclaration ? decl_zone : general)++;
  CHECK(decl_zone == 1);
  CHECK(general == 1);
  CHECK(ast.declarations.size() == 1);
  CHECK(ast.equations.size() == 1);
}

TEST_CASE("string comments round-trip") {
  const std::string src =
      "model M\n"
      "  parameter Real a = 1 \"the a parameter\";\n"
      "equation\n"
      "  a = 1 \"identity\";\n"
      "end M;\n";
  const auto ast = parse(src);
  CHECK(ast.diagnostics.empty());
  REQUIRE(ast.declarations.size() == 1);
  CHECK(ast.declarations[0].string_comment);
  CHECK(ast.declarations[0].comment == "the a parameter");
  CHECK(print(ast) == src);
}

TEST_CASE("resolve maps built-in types to dimensions") {
  const auto ast = parse(kCleanModel);
  const auto table = resolve(ast);
  const auto* cA0 = table.find("cA0");
  REQUIRE(cA0 != nullptr);
  CHECK(cA0->kind == SymbolInfo::Kind::kParameter);
  CHECK(cA0->dimension ==
        units::Dimension::amount() / units::Dimension::length().pow(3));
  REQUIRE(cA0->value.has_value());
  CHECK(*cA0->value == 125.0);

  const auto* kf = table.find("kf1");
  REQUIRE(kf != nullptr);
  CHECK(kf->dimension.is_wildcard());

  CHECK(table.find("undeclared_thing") == nullptr);
}

TEST_CASE("resolve folds parameter expressions and flags duplicates") {
  const std::string src =
      "model M\n"
      "  parameter Real a = 2*3 + 1; // folded\n"
      "  parameter Real b = a/2; // refers to a\n"
      "  parameter Real a = 9; // duplicate\n"
      "  Mystery m; // unknown type\n"
      "equation\n"
      "  b = 1; // x\n"
      "end M;\n";
  const auto ast = parse(src);
  const auto table = resolve(ast);
  REQUIRE(table.find("a") != nullptr);
  CHECK(*table.find("a")->value == 7.0);   // first wins
  CHECK(*table.find("b")->value == 3.5);
  REQUIRE(table.diagnostics.size() == 1);
  CHECK(table.diagnostics[0].zone == Diagnostic::Zone::kDeclaration);
  CHECK(table.find("m")->dimension.is_wildcard());
  CHECK(!table.notes.empty());
}

TEST_CASE("fuzzing never crashes and spans stay within the input") {
  std::mt19937_64 eng(123);
  const std::string alphabet =
      "modelparameter equationendinitial()=;,+-*/^\"0123456789 \n\tabcxyz_.";
  for (int round = 0; round < 300; ++round) {
    std::string src;
    const int len = static_cast<int>(eng() % 400);
    for (int i = 0; i < len; ++i) {
      if (round % 3 == 0) {
        src += static_cast<char>(eng() % 256);  // raw bytes
      } else {
        src += alphabet[eng() % alphabet.size()];
      }
    }
    const auto ast = parse(src);  // must not crash or loop
    const int lines = count_lines(src) + 1;
    for (const auto& d : ast.diagnostics) {
      CHECK(d.span.line >= 1);
      CHECK(d.span.line <= lines + 1);  // EOF diagnostics sit one past the end
      CHECK(d.span.col >= 1);
    }
  }
}

TEST_CASE("mutated clean models keep producing asts") {
  std::mt19937_64 eng(321);
  const std::string base = kCleanModel;
  for (int round = 0; round < 200; ++round) {
    std::string src = base;
    const int cuts = 1 + static_cast<int>(eng() % 3);
    for (int c = 0; c < cuts; ++c) {
      if (src.empty()) break;
      const std::size_t at = eng() % src.size();
      switch (eng() % 3) {
        case 0: src.erase(at, 1 + eng() % 5); break;
        case 1: src.insert(at, 1, static_cast<char>(33 + eng() % 90)); break;
        default: src[at] = static_cast<char>(33 + eng() % 90); break;
      }
    }
    const auto ast = parse(src);
    // recovery keeps at least the model shell in all but pathological cases
    CHECK(ast.declarations.size() <= 10);
  }
}

TEST_CASE("diagnostic format") {
  Diagnostic d{Diagnostic::Zone::kGeneral, {3, 7, 2}, "something"};
  CHECK(d.format("f.mo") == "f.mo:3:7: general: something");
}
