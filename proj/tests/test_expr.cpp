#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <functional>
#include <random>

#include "rxmod/expr.hpp"
#include "rxmod/frontend.hpp"

using namespace rxmod;
namespace ex = rxmod::expr;

namespace {

// Random expression trees over a small symbol pool, used to exercise the
// printer/parser agreement.
ex::ExprPtr random_tree(std::mt19937_64& eng, int depth) {
  const auto pick = [&](int n) { return static_cast<int>(eng() % n); };
  if (depth <= 0 || pick(4) == 0) {
    switch (pick(3)) {
      case 0: return ex::num(static_cast<double>(pick(1000)) / 8.0);
      case 1: return ex::sym(std::string(1, static_cast<char>('a' + pick(5))));
      default: return ex::sym("cA");
    }
  }
  switch (pick(8)) {
    case 0: return ex::add(random_tree(eng, depth - 1), random_tree(eng, depth - 1));
    case 1: return ex::sub(random_tree(eng, depth - 1), random_tree(eng, depth - 1));
    case 2: return ex::mul(random_tree(eng, depth - 1), random_tree(eng, depth - 1));
    case 3: return ex::div(random_tree(eng, depth - 1), random_tree(eng, depth - 1));
    case 4: return ex::neg(random_tree(eng, depth - 1));
    case 5: return ex::pow(random_tree(eng, depth - 1), ex::num(pick(5)));
    case 6: return ex::call("exp", {random_tree(eng, depth - 1)});
    default: return ex::der(ex::sym("cA"));
  }
}

// Parse an expression by wrapping it in a minimal model.
ex::ExprPtr parse_expr(const std::string& text) {
  const auto ast = frontend::parse("model M\nequation\n" + text + " = 0;\nend M;\n");
  REQUIRE(ast.diagnostics.empty());
  REQUIRE(ast.equations.size() == 1);
  return ast.equations[0].lhs;
}

}  // namespace

TEST_CASE("format_double round-trips") {
  for (double v : {0.0, 1.0, 38.0, 298.15, 4.184, 1e-3, 0.0007166666666666667,
                   123456.789, 5e-324, 1.7976931348623157e308}) {
    const std::string s = ex::format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("printer emits modelica precedence") {
  const auto q = ex::sym("q");
  const auto V = ex::sym("V");
  const auto cA = ex::sym("cA");
  const auto cA0 = ex::sym("cA0");
  CHECK(ex::to_string(ex::mul(ex::div(q, V), ex::sub(cA0, cA))) ==
        "q/V*(cA0 - cA)");
  CHECK(ex::to_string(ex::neg(ex::mul(q, V))) == "-q*V");
  CHECK(ex::to_string(ex::mul(ex::neg(q), V)) == "(-q)*V");
  CHECK(ex::to_string(ex::sub(q, ex::sub(V, cA))) == "q - (V - cA)");
  CHECK(ex::to_string(ex::pow(cA, ex::num(3))) == "cA^3");
  CHECK(ex::to_string(ex::pow(ex::add(q, V), ex::num(2))) == "(q + V)^2");
  CHECK(ex::to_string(ex::der(cA)) == "der(cA)");
  CHECK(ex::to_string(ex::mul(ex::num(2), ex::call("exp", {cA}))) == "2*exp(cA)");
}

TEST_CASE("print-parse round trip on random trees") {
  std::mt19937_64 eng(99);
  for (int i = 0; i < 300; ++i) {
    const auto tree = random_tree(eng, 4);
    const std::string once = ex::to_string(tree);
    const auto reparsed = parse_expr(once);
    CHECK(ex::to_string(reparsed) == once);
    CHECK(ex::equal(reparsed, parse_expr(ex::to_string(reparsed))));
  }
}

TEST_CASE("unary minus binds looser than multiplication") {
  // -a*b parses as -(a*b)
  const auto e = parse_expr("-a*b");
  REQUIRE(e->op == ex::Op::kNeg);
  CHECK(e->args[0]->op == ex::Op::kMul);
}

TEST_CASE("compiled evaluation matches a reference walker") {
  std::mt19937_64 eng(7);
  for (int i = 0; i < 200; ++i) {
    const auto tree = random_tree(eng, 4);
    ex::SlotMap slots;
    auto compiled = ex::CompiledExpr::compile(tree, slots, true);
    REQUIRE(compiled.has_value());
    std::vector<double> values(slots.size());
    for (std::size_t k = 0; k < values.size(); ++k)
      values[k] = 0.25 + static_cast<double>(k);
    std::function<std::optional<double>(const ex::ExprPtr&)> eval_ref =
        [&](const ex::ExprPtr& e) -> std::optional<double> {
      if (e->op == ex::Op::kDer)
        return values[*slots.find(ex::SlotMap::der_slot(e->args[0]->name))];
      if (e->op == ex::Op::kNumber) return e->number;
      if (e->op == ex::Op::kSymbol) return values[*slots.find(e->name)];
      std::vector<double> sub;
      for (const auto& a : e->args) {
        auto v = eval_ref(a);
        if (!v) return std::nullopt;
        sub.push_back(*v);
      }
      switch (e->op) {
        case ex::Op::kAdd: return sub[0] + sub[1];
        case ex::Op::kSub: return sub[0] - sub[1];
        case ex::Op::kMul: return sub[0] * sub[1];
        case ex::Op::kDiv: return sub[0] / sub[1];
        case ex::Op::kPow: return std::pow(sub[0], sub[1]);
        case ex::Op::kNeg: return -sub[0];
        case ex::Op::kCall: return std::exp(sub[0]);
        default: return std::nullopt;
      }
    };
    const double got = compiled->eval(values);
    const auto want = eval_ref(tree);
    REQUIRE(want.has_value());
    if (std::isfinite(*want)) {
      CHECK(got == doctest::Approx(*want).epsilon(1e-12));
    }
  }
}

TEST_CASE("compile reports missing symbols") {
  ex::SlotMap slots;
  slots.intern("a");
  std::string missing;
  auto c = ex::CompiledExpr::compile(ex::add(ex::sym("a"), ex::sym("zz")), slots,
                                     false, &missing);
  CHECK_FALSE(c.has_value());
  CHECK(missing == "zz");
}

TEST_CASE("collect gathers symbols, ders and functions") {
  const auto e = ex::add(ex::der(ex::sym("cA")),
                         ex::mul(ex::sym("kf"), ex::call("exp", {ex::sym("x")})));
  ex::SymbolUse use;
  ex::collect(e, use);
  CHECK(use.symbols == std::set<std::string>{"cA", "kf", "x"});
  CHECK(use.der_symbols == std::set<std::string>{"cA"});
  CHECK(use.functions == std::set<std::string>{"exp"});
}
