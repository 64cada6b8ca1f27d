#include <doctest.h>

#include <cmath>
#include <set>

#include "rxmod/scenario.hpp"

using namespace rxmod;
using namespace rxmod::scenario;

namespace {

double si_of(const units::Quantity& q) {
  return q.value * q.unit.scale + q.unit.offset;
}

}  // namespace

TEST_CASE("template enumeration counts") {
  const auto templates = enumerate_templates();
  CHECK(templates.size() == 26);
  int ode = 0, dae = 0;
  for (const auto& t : templates)
    (t.constant_density ? ode : dae)++;
  CHECK(ode == 24);
  CHECK(dae == 2);
}

TEST_CASE("template id golden list") {
  // Frozen ordering; corpus reproducibility depends on it.
  const std::vector<std::string> expected = {
      "iso-adi-irr2-cd", "iso-adi-rev2-cd", "iso-adi-irr3-cd", "iso-adi-rev3-cd",
      "iso-adi-irr4-cd", "iso-adi-rev4-cd", "iso-nad-irr2-cd", "iso-nad-rev2-cd",
      "iso-nad-irr3-cd", "iso-nad-rev3-cd", "iso-nad-irr4-cd", "iso-nad-rev4-cd",
      "nis-adi-irr2-cd", "nis-adi-rev2-cd", "nis-adi-irr3-cd", "nis-adi-rev3-cd",
      "nis-adi-irr4-cd", "nis-adi-rev4-cd", "nis-nad-irr2-cd", "nis-nad-rev2-cd",
      "nis-nad-irr3-cd", "nis-nad-rev3-cd", "nis-nad-irr4-cd", "nis-nad-rev4-cd",
      "nis-nad-irr4-vd", "nis-nad-rev4-vd"};
  const auto templates = enumerate_templates();
  REQUIRE(templates.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(templates[i].id == expected[i]);
}

TEST_CASE("extrapolation templates") {
  const auto xs = extrapolation_templates();
  REQUIRE(xs.size() == 4);
  CHECK(xs[0].id == "x-consec");
  CHECK(xs[1].id == "x-parallel");
  CHECK(xs[2].id == "x-dae5");
  CHECK(xs[3].id == "x-omit");
  CHECK_FALSE(xs[3].omitted.empty());
  CHECK(xs[2].n_components == 5);
  CHECK_FALSE(xs[2].constant_density);

  // consecutive: two reactions sharing B as product then reactant
  const auto s = instantiate(xs[0], 7);
  REQUIRE(s.scheme.reactions.size() == 2);
  CHECK(s.scheme.reactions[0].products.count("B") == 1);
  CHECK(s.scheme.reactions[1].reactants.count("B") == 1);

  // parallel: two reactions consuming A
  const auto p = instantiate(xs[1], 7);
  REQUIRE(p.scheme.reactions.size() == 2);
  CHECK(p.scheme.reactions[0].reactants.count("A") == 1);
  CHECK(p.scheme.reactions[1].reactants.count("A") == 1);
}

TEST_CASE("instantiate is deterministic") {
  const auto templates = enumerate_templates();
  for (const auto& t : {templates[0], templates[19], templates[25]}) {
    const auto a = instantiate(t, 12345);
    const auto b = instantiate(t, 12345);
    CHECK(to_json(a) == to_json(b));
    const auto c = instantiate(t, 12346);
    CHECK(to_json(a) != to_json(c));
  }
}

TEST_CASE("sampled values respect the documented ranges") {
  for (const auto& t : enumerate_templates()) {
    for (std::uint64_t seed : {1ull, 99ull, 31337ull}) {
      const auto s = instantiate(t, seed);
      for (const auto& r : s.scheme.reactions) {
        for (const auto& [sp, nu] : r.reactants) {
          CHECK(nu >= 1);
          CHECK(nu <= 15);
        }
        for (const auto& [sp, nu] : r.products) {
          CHECK(nu >= 1);
          CHECK(nu <= 15);
        }
        CHECK(si_of(r.kinetics.k_forward) > 0.0);
        if (r.reversible) {
          REQUIRE(r.kinetics.k_reverse.has_value());
          CHECK(si_of(*r.kinetics.k_reverse) > 0.0);
        } else {
          CHECK_FALSE(r.kinetics.k_reverse.has_value());
        }
      }
      for (const auto& [name, q] : s.parameters) {
        const double mag = std::fabs(q.value);
        INFO(t.id, " ", name, " = ", q.value, " ", q.unit.symbol);
        CHECK(mag >= 1e-4);
        CHECK(mag <= 1e5);
      }
      // training scenarios are fully specified
      CHECK(s.omitted.empty());
    }
  }
}

TEST_CASE("required parameter sets follow the mode") {
  for (const auto& t : enumerate_templates()) {
    const auto req = required_parameters(t);
    const std::set<std::string> names(req.begin(), req.end());
    if (t.mode.adiabatic) {
      CHECK(names.count("UA") == 0);
      CHECK(names.count("T_cool") == 0);
    } else {
      CHECK(names.count("UA") == 1);
      CHECK(names.count("T_cool") == 1);
    }
    if (t.mode.isothermal) {
      CHECK(names.count("T") == 1);
      CHECK(names.count("T_in") == 0);
    } else {
      CHECK(names.count("T_in") == 1);
    }
    if (!t.constant_density) {
      CHECK(names.count("V0") == 1);
      CHECK(names.count("MA") == 1);
      CHECK(names.count("rhoA") == 1);
      CHECK(names.count("rho") == 0);  // mixture density is an unknown
    } else {
      CHECK(names.count("V") == 1);
    }
    // instantiation provides exactly the required set
    const auto s = instantiate(t, 5);
    CHECK(s.parameters.size() == req.size());
    for (const auto& n : req) CHECK(s.parameters.count(n) == 1);
  }
}

TEST_CASE("two-component reversible templates are first order") {
  for (const auto& t : enumerate_templates()) {
    if (!(t.reversible && t.n_components == 2)) continue;
    const auto s = instantiate(t, 4242);
    const auto& r = s.scheme.reactions[0];
    CHECK(r.reactants.at("A") == 1);
    CHECK(r.products.at("B") == 1);
  }
}

TEST_CASE("non-constant density scenarios are self-consistent") {
  for (const char* id : {"nis-nad-irr4-vd", "nis-nad-rev4-vd", "x-dae5"}) {
    const auto t = find_template(id);
    REQUIRE(t.has_value());
    for (std::uint64_t seed : {3ull, 77ull}) {
      const auto s = instantiate(*t, seed);
      // volume additivity holds at the inlet
      double g = 1.0;
      double rho_in = 0.0;
      for (const auto& sp : s.scheme.components) {
        const double c0 = si_of(s.parameters.at("c" + sp + "0"));
        const double mm = si_of(s.density.molar_mass.at(sp));
        const double rp = si_of(s.density.pure_density.at(sp));
        CHECK(c0 > 0.0);
        CHECK(mm > 0.0);
        CHECK(rp > 0.0);
        g -= c0 * mm / rp;
        rho_in += c0 * mm;
      }
      CHECK(std::fabs(g) < 1e-10);
      CHECK(rho_in > 0.0);
    }
  }
}

TEST_CASE("omission case lacks the omitted parameter") {
  const auto t = find_template("x-omit");
  REQUIRE(t.has_value());
  const auto s = instantiate(*t, 11);
  CHECK(s.omitted == std::set<std::string>{"V"});
  CHECK(s.parameters.count("V") == 0);
  CHECK(s.parameters.count("q") == 1);
}

TEST_CASE("scenario record round-trips") {
  for (const char* id : {"iso-adi-irr2-cd", "nis-nad-rev4-vd", "x-omit"}) {
    const auto t = find_template(id);
    REQUIRE(t.has_value());
    const auto s = instantiate(*t, 2024);
    const std::string text = to_json(s);
    const auto back = scenario_from_json(text);
    CHECK(to_json(back) == text);
  }
}

TEST_CASE("prompt units vary across seeds") {
  const auto t = find_template("nis-nad-irr4-cd");
  REQUIRE(t.has_value());
  int non_si = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto s = instantiate(*t, seed);
    for (const auto& [name, q] : s.parameters) {
      ++total;
      if (!q.unit.is_si()) ++non_si;
    }
  }
  // with probability 1/2 per parameter the unit stays SI
  CHECK(non_si > total / 5);
  CHECK(non_si < total * 4 / 5);
}

TEST_CASE("seed derivation separates streams") {
  const auto a = derive_seed(42, "iso-adi-irr2-cd", 0, 0);
  const auto b = derive_seed(42, "iso-adi-irr2-cd", 0, 1);
  const auto c = derive_seed(42, "iso-adi-irr2-cd", 1, 0);
  const auto d = derive_seed(42, "iso-adi-rev2-cd", 0, 0);
  const auto e = derive_seed(43, "iso-adi-irr2-cd", 0, 0);
  CHECK(a != b);
  CHECK(a != c);
  CHECK(a != d);
  CHECK(a != e);
  CHECK(a == derive_seed(42, "iso-adi-irr2-cd", 0, 0));
}
