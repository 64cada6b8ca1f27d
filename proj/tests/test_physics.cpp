#include <doctest.h>

#include <cmath>

#include "rxmod/physics.hpp"
#include "rxmod/unit_analysis.hpp"

using namespace rxmod;
using namespace rxmod::physics;
namespace ex = rxmod::expr;
namespace ua = rxmod::unit_analysis;

namespace {

scenario::ReactorScenario make_first_order_scenario(bool reversible) {
  // Hand-built irreversible/reversible A<->B case, everything in SI.
  using units::Quantity;
  const auto& reg = units::UnitRegistry::instance();
  scenario::ReactorScenario s;
  s.template_id = reversible ? "iso-adi-rev2-cd" : "iso-adi-irr2-cd";
  s.seed = 0;
  s.mode = {true, true};
  s.density.constant = true;
  s.scheme.components = {"A", "B"};
  scenario::Reaction r;
  r.reactants["A"] = 1;
  r.products["B"] = 1;
  r.reversible = reversible;
  const auto kdim = units::Dimension::time().pow(-1);
  r.kinetics.k_forward = Quantity{0.05, reg.si_unit(kdim)};
  if (reversible) r.kinetics.k_reverse = Quantity{0.02, reg.si_unit(kdim)};
  s.scheme.reactions.push_back(r);
  s.parameters["q"] = Quantity{0.001, reg.get("m3/s")};
  s.parameters["V"] = Quantity{1.0, reg.get("m3")};
  s.parameters["cA0"] = Quantity{100.0, reg.get("mol/m3")};
  s.parameters["cB0"] = Quantity{5.0, reg.get("mol/m3")};
  s.parameters["T"] = Quantity{320.0, reg.get("K")};
  return s;
}

}  // namespace

TEST_CASE("first-order isothermal adiabatic case: 2 unknowns, 2 ODEs") {
  const auto sys = build_equations(make_first_order_scenario(false));
  CHECK(sys.classification == SystemKind::kOde);
  REQUIRE(sys.unknowns.size() == 2);
  CHECK(sys.unknowns[0].name == "cA");
  CHECK(sys.unknowns[1].name == "cB");
  CHECK(sys.equations.size() == 2);
  for (const auto& v : sys.unknowns) CHECK(v.kind == VarKind::kDifferential);

  // steady state for first-order kinetics: cA* = q*cA0/(q + kf*V)
  const double q = 0.001, V = 1.0, cA0 = 100.0, kf = 0.05;
  const double cA_star = q * cA0 / (q + kf * V);
  // residual at the analytic steady state with der = 0 vanishes
  std::map<std::string, double> state{{"cA", cA_star},
                                      {"cB", 5.0 + kf * V * cA_star / q}};
  std::map<std::string, double> ders{{"cA", 0.0}, {"cB", 0.0}};
  const auto res = residual(sys, state, ders, 0.0);
  REQUIRE(res.size() == 2);
  CHECK(std::fabs(res[0]) < 1e-12);
  CHECK(std::fabs(res[1]) < 1e-12);
}

TEST_CASE("satisfied equation has zero residual and scaling is linear") {
  const auto sys = build_equations(make_first_order_scenario(false));
  const double q = 0.001, V = 1.0, cA0 = 100.0, kf = 0.05;
  auto rhsA = [&](double cA) { return q / V * (cA0 - cA) - kf * cA; };
  std::map<std::string, double> state{{"cA", 40.0}, {"cB", 7.0}};
  std::map<std::string, double> ders{{"cA", rhsA(40.0)}, {"cB", 0.123}};
  auto res = residual(sys, state, ders, 0.0);
  CHECK(res[0] == 0.0);

  // doubling the concentration doubles the first-order rate term
  // (residual = 0 - rhs, so adding back the flow part isolates kf*cA)
  std::map<std::string, double> s1{{"cA", 40.0}, {"cB", 7.0}};
  std::map<std::string, double> s2{{"cA", 80.0}, {"cB", 7.0}};
  std::map<std::string, double> zero{{"cA", 0.0}, {"cB", 0.0}};
  const double r1 = residual(sys, s1, zero, 0.0)[0] + q / V * (cA0 - 40.0);
  const double r2 = residual(sys, s2, zero, 0.0)[0] + q / V * (cA0 - 80.0);
  CHECK(std::fabs(r2 - 2.0 * r1) < 1e-12);
}

TEST_CASE("reversible equilibrium has zero net rate") {
  const auto sys = build_equations(make_first_order_scenario(true));
  REQUIRE(sys.aux.size() == 1);
  CompiledSystem cs(sys);
  auto slots = cs.make_slots();
  const double kf = 0.05, kr = 0.02;
  const double cA = 10.0;
  slots[cs.unknown_slot(0)] = cA;
  slots[cs.unknown_slot(1)] = cA * kf / kr;  // cB at equilibrium ratio
  slots[cs.time_slot()] = 0.0;
  CHECK(std::fabs(cs.eval_aux(0, slots)) < 1e-14);
}

TEST_CASE("omitted parameters raise UnderSpecified") {
  auto t = scenario::find_template("x-omit");
  REQUIRE(t.has_value());
  const auto s = scenario::instantiate(*t, 3);
  try {
    build_equations(s);
    FAIL("expected UnderSpecified");
  } catch (const UnderSpecified& e) {
    REQUIRE(e.missing().size() == 1);
    CHECK(e.missing()[0] == "V");
  }
}

TEST_CASE("unbound symbols and non-finite results are reported") {
  const auto sys = build_equations(make_first_order_scenario(false));
  std::map<std::string, double> state{{"cA", 1.0}};  // cB missing
  std::map<std::string, double> ders{{"cA", 0.0}};
  CHECK_THROWS_AS(residual(sys, state, ders, 0.0), UnboundSymbol);
}

TEST_CASE("all templates build square, dimensionally closed, well-posed systems") {
  auto check_template = [](const scenario::ScenarioTemplate& t) {
    for (std::uint64_t seed : {1ull, 17ull}) {
      const auto s = scenario::instantiate(t, seed);
      const auto sys = build_equations(s);
      INFO(t.id, " seed ", seed);

      // squareness
      CHECK(sys.equations.size() == sys.unknowns.size());

      // classification by density model
      CHECK((sys.classification == SystemKind::kDae) == !t.constant_density);

      // mode semantics
      if (t.mode.isothermal) {
        CHECK(sys.unknown_index("T") == -1);
        CHECK(sys.find_parameter("T") != nullptr);
      } else {
        CHECK(sys.unknown_index("T") >= 0);
      }
      if (t.mode.adiabatic) {
        CHECK(sys.find_parameter("UA") == nullptr);
        CHECK(sys.find_parameter("T_cool") == nullptr);
      }
      if (!t.constant_density) {
        CHECK(sys.unknown_index("V") >= 0);
        CHECK(sys.unknown_index("rho") >= 0);
        CHECK(sys.unknown_index("q_out") >= 0);
      }

      // strict dimensional consistency without wildcard leaves
      ua::UnitEnv env;
      const auto& reg = units::UnitRegistry::instance();
      for (const auto& p : sys.parameters) env[p.name] = reg.si_unit(p.dimension);
      for (const auto& v : sys.unknowns) env[v.name] = reg.si_unit(v.dimension);
      env["time"] = reg.get("s");
      const ua::AnalysisOptions strict{/*literals_are_wildcard=*/false,
                                       /*missing_is_wildcard=*/false};
      for (std::size_t i = 0; i < sys.equations.size(); ++i) {
        const auto res = ua::check_equation_units(sys.equations[i].lhs,
                                                  sys.equations[i].rhs, env,
                                                  strict);
        INFO("equation ", i, ": ", ex::to_string(sys.equations[i].lhs), " = ",
             ex::to_string(sys.equations[i].rhs));
        CHECK(res.ok);
        CHECK_FALSE(res.used_wildcard);
      }
    }
  };
  for (const auto& t : scenario::enumerate_templates()) check_template(t);
  for (const auto& t : scenario::extrapolation_templates())
    if (t.omitted.empty()) check_template(t);
}

TEST_CASE("stoichiometric coefficients appear signed in the balances") {
  auto t = scenario::find_template("iso-adi-irr4-cd");
  REQUIRE(t.has_value());
  const auto s = scenario::instantiate(*t, 9);
  const auto sys = build_equations(s);
  const auto& rxn = s.scheme.reactions[0];

  CompiledSystem cs(sys);
  auto slots = cs.make_slots();
  // flow term vanishes when c == c0
  for (const auto& sp : s.scheme.components) {
    const auto* p = sys.find_parameter("c" + sp + "0");
    REQUIRE(p != nullptr);
    slots[cs.unknown_slot(sys.unknown_index("c" + sp))] = p->si_value;
  }
  slots[cs.time_slot()] = 0.0;
  const double rate = cs.eval_aux(0, slots);
  REQUIRE(rate > 0.0);
  for (const auto& sp : s.scheme.components) {
    const int idx = sys.unknown_index("c" + sp);
    // der slots are still NaN; evaluate the rhs only
    const double rhs = cs.eval_rhs(idx, slots);
    int nu_signed = 0;
    if (rxn.reactants.count(sp)) nu_signed = -rxn.reactants.at(sp);
    if (rxn.products.count(sp)) nu_signed = rxn.products.at(sp);
    CHECK(std::fabs(rhs - nu_signed * rate) < 1e-9 * std::fabs(rate));
  }
}

TEST_CASE("explicit form extraction") {
  // constant-density systems are explicit
  auto t = scenario::find_template("nis-nad-rev3-cd");
  REQUIRE(t.has_value());
  const auto sys = build_equations(scenario::instantiate(*t, 21));
  const auto form = explicit_form(sys);
  CHECK(form.ok);
  CHECK(form.der_eqs.size() == 4);  // 3 species + T
  CHECK(form.alg_eqs.empty());

  // the energy balance carries a parameter product coefficient
  bool found_T = false;
  for (const auto& de : form.der_eqs) {
    if (sys.unknowns[de.state].name == "T") {
      found_T = true;
      CHECK(de.coefficient != nullptr);
    }
  }
  CHECK(found_T);

  // the isothermal non-adiabatic duty equation is an explicit algebraic
  auto t2 = scenario::find_template("iso-nad-irr2-cd");
  REQUIRE(t2.has_value());
  const auto sys2 = build_equations(scenario::instantiate(*t2, 21));
  const auto form2 = explicit_form(sys2);
  CHECK(form2.ok);
  REQUIRE(form2.alg_eqs.size() == 1);
  CHECK(sys2.unknowns[form2.alg_eqs[0].var].name == "Qdot");

  // the non-constant-density system is not explicit
  auto t3 = scenario::find_template("nis-nad-irr4-vd");
  REQUIRE(t3.has_value());
  const auto sys3 = build_equations(scenario::instantiate(*t3, 21));
  CHECK_FALSE(explicit_form(sys3).ok);
}

TEST_CASE("arrhenius option produces a closed dimensioned system") {
  auto s = make_first_order_scenario(false);
  // switch to non-isothermal so T exists
  s.mode = {false, true};
  s.template_id = "nis-adi-irr2-cd";
  const auto& reg = units::UnitRegistry::instance();
  s.parameters.erase("T");
  s.parameters["T_in"] = units::Quantity{320.0, reg.get("K")};
  s.parameters["rho"] = units::Quantity{1000.0, reg.get("kg/m3")};
  s.parameters["cp"] = units::Quantity{4184.0, reg.get("J/(kg.K)")};
  s.parameters["dHr1"] = units::Quantity{-5e4, reg.get("J/mol")};
  s.scheme.reactions[0].kinetics.arrhenius = {
      units::Quantity{5.0, reg.si_unit(units::Dimension::time().pow(-1))},
      units::Quantity{2e4, reg.get("J/mol")}};
  const auto sys = build_equations(s);
  CHECK(sys.find_parameter("Rgas") != nullptr);
  CHECK(sys.find_parameter("k01") != nullptr);
  CHECK(sys.find_parameter("Ea1") != nullptr);

  ua::UnitEnv env;
  for (const auto& p : sys.parameters)
    env[p.name] = units::UnitRegistry::instance().si_unit(p.dimension);
  for (const auto& v : sys.unknowns)
    env[v.name] = units::UnitRegistry::instance().si_unit(v.dimension);
  env["time"] = reg.get("s");
  const ua::AnalysisOptions strict{false, false};
  for (const auto& eq : sys.equations) {
    const auto res = ua::check_equation_units(eq.lhs, eq.rhs, env, strict);
    CHECK(res.ok);
  }
}
