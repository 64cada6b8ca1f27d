#include "rxmod/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>

#include <json.hpp>

#include "rxmod/errors.hpp"

namespace rxmod::scenario {

using units::Dimension;
using units::Unit;
using units::UnitRegistry;

namespace {

// ---------------------------------------------------------------------------
// Deterministic sampling helpers. Distributions are hand-rolled on top of
// mt19937_64 so corpora are bit-identical across standard library versions.
// ---------------------------------------------------------------------------

double u01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

double log_uniform(std::mt19937_64& eng, double lo, double hi) {
  return std::exp(std::log(lo) + u01(eng) * (std::log(hi) - std::log(lo)));
}

int uniform_int(std::mt19937_64& eng, int lo, int hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo + 1);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t r;
  do {
    r = eng();
  } while (r >= limit);
  return lo + static_cast<int>(r % span);
}

// Round to four significant digits through the decimal representation so the
// prompt shows clean numbers and the rounded double is exact.
double round_sig4(double v) {
  if (v == 0.0) return 0.0;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return std::strtod(buf, nullptr);
}

struct Ranges {
  double volume_lo = 1e-2, volume_hi = 1e2;          // m3
  double tau_lo = 10.0, tau_hi = 300.0;              // s
  double conc_lo = 5.0, conc_hi = 5e3;               // mol/m3
  double temp_lo = 250.0, temp_hi = 1500.0;          // K
  double rho_lo = 500.0, rho_hi = 2000.0;            // kg/m3
  double cp_lo = 1e2, cp_hi = 1e4;                   // J/(kg.K)
  double dh_lo = 1e3, dh_hi = 5e5;                   // J/mol magnitude
  double ua_lo = 1.0, ua_hi = 1e5;                   // W/K
  double mm_lo = 2e-3, mm_hi = 0.5;                  // kg/mol
  double rho_pure_lo = 500.0, rho_pure_hi = 3000.0;  // kg/m3
  double da_lo = 0.5, da_hi = 5.0;                   // Damkoehler number
  double da_fast_lo = 1e5, da_fast_hi = 1e6;         // near-equilibrium runs
};

// Picks a prompt unit for an SI value: keep SI with probability si_prob,
// otherwise draw uniformly from the registered compatible non-SI units.
// Falls back along chosen -> SI -> any compatible unit until the prompt
// magnitude lands inside [prompt_lo, prompt_hi].
Quantity present(std::mt19937_64& eng, double si_value, const Dimension& dim,
                 const SamplingConfig& cfg, bool round_prompt = true) {
  const UnitRegistry& reg = UnitRegistry::instance();
  const Unit si = reg.si_unit(dim);
  Unit chosen = si;
  if (u01(eng) >= cfg.si_prob) {
    const auto alts = reg.compatible(dim, /*include_si=*/false);
    if (!alts.empty()) chosen = alts[uniform_int(eng, 0, static_cast<int>(alts.size()) - 1)];
  }
  auto in_range = [&](double v) {
    const double mag = std::fabs(v);
    return mag >= cfg.prompt_range_lo && mag <= cfg.prompt_range_hi;
  };
  auto express = [&](const Unit& u) {
    return (si_value - u.offset) / u.scale;
  };
  std::vector<Unit> order{chosen, si};
  for (const auto& u : reg.compatible(dim, /*include_si=*/true)) order.push_back(u);
  for (const auto& u : order) {
    const double raw = express(u);
    const double v = round_prompt ? round_sig4(raw) : raw;
    if (in_range(v)) return Quantity{v, u};
  }
  // Sub-ranges keep SI magnitudes inside the prompt range, so this is
  // unreachable for sampled values; derived values land here only when no
  // registered unit fits, and then SI without rounding is the honest form.
  return Quantity{express(si), si};
}

double si_value(const Quantity& q) { return q.value * q.unit.scale + q.unit.offset; }

std::string mode_token(const OperationMode& m) {
  return std::string(m.isothermal ? "iso" : "nis") + "-" +
         (m.adiabatic ? "adi" : "nad");
}

}  // namespace

std::vector<std::string> species_names(const ScenarioTemplate& t) {
  switch (t.n_components) {
    case 2: return {"A", "B"};
    case 3: return {"A", "B", "C"};
    case 4: return {"A", "B", "C", "E"};
    default: return {"A", "B", "C", "D", "E"};
  }
}

std::vector<ScenarioTemplate> enumerate_templates() {
  std::vector<ScenarioTemplate> out;
  const OperationMode modes[4] = {
      {true, true}, {true, false}, {false, true}, {false, false}};
  for (const auto& mode : modes) {
    for (int n : {2, 3, 4}) {
      for (bool rev : {false, true}) {
        ScenarioTemplate t;
        t.mode = mode;
        t.constant_density = true;
        t.n_components = n;
        t.reversible = rev;
        t.id = mode_token(mode) + "-" + (rev ? "rev" : "irr") +
               std::to_string(n) + "-cd";
        out.push_back(std::move(t));
      }
    }
  }
  for (bool rev : {false, true}) {
    ScenarioTemplate t;
    t.mode = {false, false};
    t.constant_density = false;
    t.n_components = 4;
    t.reversible = rev;
    t.id = std::string("nis-nad-") + (rev ? "rev" : "irr") + "4-vd";
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<ScenarioTemplate> extrapolation_templates() {
  std::vector<ScenarioTemplate> out;
  {
    ScenarioTemplate t;
    t.id = "x-consec";
    t.mode = {true, true};
    t.n_components = 3;
    t.topology = Topology::kConsecutive;
    t.extrapolation = true;
    out.push_back(std::move(t));
  }
  {
    ScenarioTemplate t;
    t.id = "x-parallel";
    t.mode = {true, true};
    t.n_components = 3;
    t.topology = Topology::kParallel;
    t.extrapolation = true;
    out.push_back(std::move(t));
  }
  {
    ScenarioTemplate t;
    t.id = "x-dae5";
    t.mode = {false, false};
    t.constant_density = false;
    t.n_components = 5;
    t.extrapolation = true;
    out.push_back(std::move(t));
  }
  {
    ScenarioTemplate t;
    t.id = "x-omit";
    t.mode = {false, false};
    t.n_components = 4;
    t.omitted = {"V"};
    t.extrapolation = true;
    out.push_back(std::move(t));
  }
  return out;
}

std::optional<ScenarioTemplate> find_template(const std::string& id) {
  for (const auto& t : enumerate_templates())
    if (t.id == id) return t;
  for (const auto& t : extrapolation_templates())
    if (t.id == id) return t;
  return std::nullopt;
}

std::vector<std::string> required_parameters(const ScenarioTemplate& t) {
  std::vector<std::string> out;
  out.push_back("q");
  out.push_back(t.constant_density ? "V" : "V0");
  for (const auto& sp : species_names(t)) out.push_back("c" + sp + "0");
  if (t.mode.isothermal) {
    out.push_back("T");
  } else {
    out.push_back("T_in");
    if (t.constant_density) out.push_back("rho");
    out.push_back("cp");
    const int n_reactions = t.topology == Topology::kSingle ? 1 : 2;
    for (int r = 1; r <= n_reactions; ++r)
      out.push_back("dHr" + std::to_string(r));
  }
  if (!t.mode.adiabatic) {
    out.push_back("UA");
    out.push_back("T_cool");
  }
  if (!t.constant_density) {
    for (const auto& sp : species_names(t)) out.push_back("M" + sp);
    for (const auto& sp : species_names(t)) out.push_back("rho" + sp);
  }
  return out;
}

namespace {

// Reaction shapes per template family; nu values are filled by sampling.
std::vector<Reaction> reaction_shapes(const ScenarioTemplate& t) {
  std::vector<Reaction> out;
  auto make = [&](std::vector<std::string> reac, std::vector<std::string> prod) {
    Reaction r;
    for (auto& s : reac) r.reactants[s] = 1;
    for (auto& s : prod) r.products[s] = 1;
    r.reversible = t.reversible;
    return r;
  };
  switch (t.topology) {
    case Topology::kConsecutive:
      out.push_back(make({"A"}, {"B"}));
      out.push_back(make({"B"}, {"C"}));
      break;
    case Topology::kParallel:
      out.push_back(make({"A"}, {"B"}));
      out.push_back(make({"A"}, {"C"}));
      break;
    case Topology::kSingle:
      switch (t.n_components) {
        case 2: out.push_back(make({"A"}, {"B"})); break;
        case 3: out.push_back(make({"A"}, {"B", "C"})); break;
        case 4: out.push_back(make({"A", "E"}, {"B", "C"})); break;
        default: out.push_back(make({"A", "E"}, {"B", "C", "D"})); break;
      }
      break;
  }
  return out;
}

Dimension rate_constant_dimension(const std::map<std::string, int>& side) {
  // rate [mol/(m3.s)] = k * prod c^nu  =>  k = rate / (mol/m3)^order
  int order = 0;
  for (const auto& [sp, nu] : side) order += nu;
  const Dimension conc = Dimension::amount() / Dimension::length().pow(3);
  const Dimension rate = conc / Dimension::time();
  return rate / conc.pow(order);
}

}  // namespace

ReactorScenario instantiate(const ScenarioTemplate& t, std::uint64_t seed,
                            const SamplingConfig& cfg) {
  std::mt19937_64 eng(seed);
  const Ranges rng;
  const UnitRegistry& reg = UnitRegistry::instance();

  ReactorScenario s;
  s.template_id = t.id;
  s.seed = seed;
  s.mode = t.mode;
  s.density.constant = t.constant_density;
  s.omitted = t.omitted;
  s.scheme.components = species_names(t);
  s.scheme.reactions = reaction_shapes(t);

  // 1. Stoichiometric coefficients. The two-component reversible family is
  //    pinned to nu = 1 on both sides so the equilibrium ratio identity
  //    cB/cA = kf/kr holds exactly at steady state.
  const bool pinned_first_order =
      t.reversible && t.n_components == 2 && t.topology == Topology::kSingle;
  for (auto& r : s.scheme.reactions) {
    for (auto& [sp, nu] : r.reactants)
      nu = pinned_first_order ? 1 : uniform_int(eng, 1, 15);
    for (auto& [sp, nu] : r.products)
      nu = pinned_first_order ? 1 : uniform_int(eng, 1, 15);
  }

  const Dimension d_volume = Dimension::length().pow(3);
  const Dimension d_flow = d_volume / Dimension::time();
  const Dimension d_conc = Dimension::amount() / d_volume;
  const Dimension d_temp = Dimension::temperature();
  const Dimension d_density = Dimension::mass() / d_volume;
  const Dimension d_energy = Dimension::mass() * Dimension::length().pow(2) /
                             Dimension::time().pow(2);
  const Dimension d_cp = d_energy / (Dimension::mass() * d_temp);
  const Dimension d_dh = d_energy / Dimension::amount();
  const Dimension d_ua = d_energy / Dimension::time() / d_temp;
  const Dimension d_mm = Dimension::mass() / Dimension::amount();

  // 2. Prompt parameters, drawn in a fixed canonical order.
  const auto names = required_parameters(t);
  const auto species = species_names(t);

  double v_si = log_uniform(eng, rng.volume_lo, rng.volume_hi);
  const double tau_target = log_uniform(eng, rng.tau_lo, rng.tau_hi);

  // Non-constant density pre-pass: molar masses, pure densities and inlet
  // composition have to be mutually consistent (approximate reaction mass
  // balance, exact volume additivity at the inlet).
  std::map<std::string, double> mm_si, rhop_si, c0_si;
  if (!t.constant_density) {
    const auto& rxn = s.scheme.reactions[0];
    double product_mass = 0.0;
    for (const auto& [sp, nu] : rxn.products) {
      mm_si[sp] = round_sig4(log_uniform(eng, rng.mm_lo, rng.mm_hi));
      product_mass += nu * mm_si[sp];
    }
    // Reactants: sample all but the first component, then set the first so
    // the reaction approximately conserves mass.
    std::vector<std::string> reactant_names;
    for (const auto& sp : species)
      if (rxn.reactants.count(sp)) reactant_names.push_back(sp);
    double other_mass = 0.0;
    for (std::size_t i = 1; i < reactant_names.size(); ++i) {
      const std::string& sp = reactant_names[i];
      const int nu = rxn.reactants.at(sp);
      const double cap = std::min(rng.mm_hi, 0.8 * product_mass / nu);
      const double lo = std::min(rng.mm_lo, 0.1 * cap);
      mm_si[sp] = round_sig4(log_uniform(eng, lo, cap));
      other_mass += nu * mm_si[sp];
    }
    const std::string& first = reactant_names[0];
    mm_si[first] = round_sig4((product_mass - other_mass) / rxn.reactants.at(first));
    for (const auto& sp : species)
      rhop_si[sp] = round_sig4(log_uniform(eng, rng.rho_pure_lo, rng.rho_pure_hi));
    // Inlet composition from a volume-fraction simplex; the last species is
    // derived unrounded so volume additivity holds exactly at t = 0.
    std::vector<double> phi(species.size());
    double sum = 0.0;
    for (auto& p : phi) {
      p = 0.05 + 0.95 * u01(eng);
      sum += p;
    }
    for (auto& p : phi) p /= sum;
    double used = 0.0;
    for (std::size_t i = 0; i + 1 < species.size(); ++i) {
      const std::string& sp = species[i];
      const double c = round_sig4(phi[i] * rhop_si[sp] / mm_si[sp]);
      c0_si[sp] = c;
      used += c * mm_si[sp] / rhop_si[sp];
    }
    const std::string& last = species.back();
    c0_si[last] = (1.0 - used) * rhop_si[last] / mm_si[last];
  }

  double q_si = 0.0;
  for (const auto& name : names) {
    Quantity qty;
    if (name == "q") {
      qty = present(eng, v_si / tau_target, d_flow, cfg);
      q_si = si_value(qty);
    } else if (name == "V" || name == "V0") {
      qty = present(eng, v_si, d_volume, cfg);
      v_si = si_value(qty);
    } else if (name.size() >= 3 && name[0] == 'c' && name.back() == '0') {
      const std::string sp = name.substr(1, name.size() - 2);
      if (!t.constant_density) {
        const bool derived = sp == species.back();
        qty = present(eng, c0_si[sp], d_conc, cfg, /*round_prompt=*/!derived);
      } else {
        qty = present(eng, log_uniform(eng, rng.conc_lo, rng.conc_hi), d_conc, cfg);
      }
    } else if (name == "T" || name == "T_in" || name == "T_cool") {
      qty = present(eng, log_uniform(eng, rng.temp_lo, rng.temp_hi), d_temp, cfg);
    } else if (name == "rho") {
      qty = present(eng, log_uniform(eng, rng.rho_lo, rng.rho_hi), d_density, cfg);
    } else if (name == "cp") {
      qty = present(eng, log_uniform(eng, rng.cp_lo, rng.cp_hi), d_cp, cfg);
    } else if (name.rfind("dHr", 0) == 0) {
      const double mag = log_uniform(eng, rng.dh_lo, rng.dh_hi);
      const double sign = u01(eng) < 0.5 ? -1.0 : 1.0;
      qty = present(eng, sign * mag, d_dh, cfg);
    } else if (name == "UA") {
      qty = present(eng, log_uniform(eng, rng.ua_lo, rng.ua_hi), d_ua, cfg);
    } else if (name.rfind("rho", 0) == 0) {
      qty = present(eng, rhop_si[name.substr(3)], d_density, cfg);
    } else if (name[0] == 'M') {
      qty = present(eng, mm_si[name.substr(1)], d_mm, cfg);
    } else {
      throw Error("unhandled parameter name: " + name);
    }
    s.parameters[name] = qty;
  }

  if (!t.constant_density) {
    for (const auto& sp : species) {
      s.density.molar_mass[sp] = s.parameters["M" + sp];
      s.density.pure_density[sp] = s.parameters["rho" + sp];
    }
  }

  // 3. Kinetics: rate constants are set through Damkoehler numbers relative
  //    to the residence time so every instantiated system is integrable.
  const double tau = v_si / (q_si > 0 ? q_si : v_si / tau_target);
  auto c0_of = [&](const std::string& sp) {
    const auto it = s.parameters.find("c" + sp + "0");
    return it == s.parameters.end() ? 1.0 : si_value(it->second);
  };
  for (auto& r : s.scheme.reactions) {
    auto derive_k = [&](const std::map<std::string, int>& side) {
      double prod = 1.0;
      double climit = 0.0;
      bool first = true;
      for (const auto& [sp, nu] : side) {
        const double c = c0_of(sp);
        prod *= std::pow(c, nu);
        const double lim = c / nu;
        if (first || lim < climit) climit = lim;
        first = false;
      }
      const double da = pinned_first_order
                            ? log_uniform(eng, rng.da_fast_lo, rng.da_fast_hi)
                            : log_uniform(eng, rng.da_lo, rng.da_hi);
      return round_sig4(da * climit / (tau * prod));
    };
    const double kf = derive_k(r.reactants);
    Unit uf = reg.si_unit(rate_constant_dimension(r.reactants));
    r.kinetics.k_forward = Quantity{kf, uf};
    if (r.reversible) {
      const double kr = derive_k(r.products);
      Unit ur = reg.si_unit(rate_constant_dimension(r.products));
      r.kinetics.k_reverse = Quantity{kr, ur};
    }
  }

  // Omitted parameters stay in the required set but out of the prompt.
  for (const auto& name : s.omitted) s.parameters.erase(name);

  return s;
}

// ---------------------------------------------------------------------------
// JSON record round-trip
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

ordered_json quantity_to_json(const Quantity& q) {
  return ordered_json{{"value", q.value}, {"unit", q.unit.symbol}};
}

Quantity quantity_from_json(const json& j) {
  Quantity q;
  q.value = j.at("value").get<double>();
  q.unit = units::resolve_unit(j.at("unit").get<std::string>());
  return q;
}

}  // namespace

std::string to_json(const ReactorScenario& s) {
  ordered_json j;
  j["template_id"] = s.template_id;
  j["seed"] = s.seed;
  j["mode"] = {{"isothermal", s.mode.isothermal}, {"adiabatic", s.mode.adiabatic}};
  j["density"]["constant"] = s.density.constant;
  if (!s.density.constant) {
    ordered_json mm, rp;
    for (const auto& [sp, q] : s.density.molar_mass) mm[sp] = quantity_to_json(q);
    for (const auto& [sp, q] : s.density.pure_density) rp[sp] = quantity_to_json(q);
    j["density"]["molar_mass"] = mm;
    j["density"]["pure_density"] = rp;
  }
  j["scheme"]["components"] = s.scheme.components;
  ordered_json rxns = ordered_json::array();
  for (const auto& r : s.scheme.reactions) {
    ordered_json jr;
    jr["reactants"] = r.reactants;
    jr["products"] = r.products;
    jr["reversible"] = r.reversible;
    jr["kf"] = quantity_to_json(r.kinetics.k_forward);
    if (r.kinetics.k_reverse) jr["kr"] = quantity_to_json(*r.kinetics.k_reverse);
    if (r.kinetics.arrhenius) {
      jr["arrhenius"] = {{"k0", quantity_to_json(r.kinetics.arrhenius->first)},
                         {"Ea", quantity_to_json(r.kinetics.arrhenius->second)}};
    }
    rxns.push_back(std::move(jr));
  }
  j["scheme"]["reactions"] = std::move(rxns);
  ordered_json params;
  for (const auto& [name, q] : s.parameters) params[name] = quantity_to_json(q);
  j["parameters"] = std::move(params);
  j["omitted"] = s.omitted;
  return j.dump();
}

ReactorScenario scenario_from_json(const std::string& text) {
  json j = json::parse(text);
  ReactorScenario s;
  s.template_id = j.at("template_id").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.mode.isothermal = j.at("mode").at("isothermal").get<bool>();
  s.mode.adiabatic = j.at("mode").at("adiabatic").get<bool>();
  s.density.constant = j.at("density").at("constant").get<bool>();
  if (!s.density.constant) {
    for (const auto& [sp, q] : j.at("density").at("molar_mass").items())
      s.density.molar_mass[sp] = quantity_from_json(q);
    for (const auto& [sp, q] : j.at("density").at("pure_density").items())
      s.density.pure_density[sp] = quantity_from_json(q);
  }
  s.scheme.components = j.at("scheme").at("components").get<std::vector<std::string>>();
  for (const auto& jr : j.at("scheme").at("reactions")) {
    Reaction r;
    r.reactants = jr.at("reactants").get<std::map<std::string, int>>();
    r.products = jr.at("products").get<std::map<std::string, int>>();
    r.reversible = jr.at("reversible").get<bool>();
    r.kinetics.k_forward = quantity_from_json(jr.at("kf"));
    if (jr.contains("kr")) r.kinetics.k_reverse = quantity_from_json(jr.at("kr"));
    if (jr.contains("arrhenius")) {
      r.kinetics.arrhenius = {quantity_from_json(jr.at("arrhenius").at("k0")),
                              quantity_from_json(jr.at("arrhenius").at("Ea"))};
    }
    s.scheme.reactions.push_back(std::move(r));
  }
  for (const auto& [name, q] : j.at("parameters").items())
    s.parameters[name] = quantity_from_json(q);
  s.omitted = j.at("omitted").get<std::set<std::string>>();
  return s;
}

// ---------------------------------------------------------------------------
// Seed derivation
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, const std::string& template_id,
                          std::uint64_t stream, std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the template id
  for (const char c : template_id) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(master ^ splitmix64(h ^ splitmix64(stream ^ splitmix64(index))));
}

}  // namespace rxmod::scenario
