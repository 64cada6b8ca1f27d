#include "rxmod/physics.hpp"
#include <functional>

#include <algorithm>
#include <cmath>

#include "rxmod/errors.hpp"

namespace rxmod::physics {

using expr::ExprPtr;
using scenario::ReactorScenario;
using units::Dimension;

namespace {

namespace ex = rxmod::expr;

const double kGasConstant = 8.31446261815324;  // J/(mol.K)

ExprPtr nu_times(int nu, ExprPtr e) {
  if (nu == 1) return e;
  return ex::mul(ex::num(static_cast<double>(nu)), std::move(e));
}

// kf1*cA^a*cE^e [- kr1*cB^b*cC^c]; Arrhenius replaces the bare constant by
// k0*exp(-Ea/(R*T)).
ExprPtr rate_expression(const scenario::Reaction& rxn, int index,
                        const std::vector<std::string>& species,
                        bool arrhenius) {
  auto side_product = [&](ExprPtr k, const std::map<std::string, int>& side) {
    ExprPtr acc = std::move(k);
    for (const auto& sp : species) {
      const auto it = side.find(sp);
      if (it == side.end()) continue;
      ExprPtr c = ex::sym("c" + sp);
      if (it->second != 1) c = ex::pow(c, ex::num(it->second));
      acc = ex::mul(acc, c);
    }
    return acc;
  };
  const std::string idx = std::to_string(index + 1);
  ExprPtr kf = ex::sym("kf" + idx);
  if (arrhenius) {
    kf = ex::mul(ex::sym("k0" + idx),
                 ex::call("exp", {ex::div(ex::neg(ex::sym("Ea" + idx)),
                                          ex::mul(ex::sym("Rgas"),
                                                  ex::sym("T")))}));
  }
  ExprPtr forward = side_product(std::move(kf), rxn.reactants);
  if (!rxn.reversible) return forward;
  ExprPtr reverse = side_product(ex::sym("kr" + idx), rxn.products);
  return ex::sub(std::move(forward), std::move(reverse));
}

std::string species_of(const std::string& name, const char* prefix) {
  return name.substr(std::string(prefix).size());
}

struct TypeInfo {
  const char* modelica_type;
  Dimension dimension;
};

TypeInfo parameter_type(const std::string& name) {
  const Dimension m3 = Dimension::length().pow(3);
  const Dimension energy =
      Dimension::mass() * Dimension::length().pow(2) / Dimension::time().pow(2);
  if (name == "q") return {"VolumeFlowRate", m3 / Dimension::time()};
  if (name == "V" || name == "V0") return {"Volume", m3};
  if (name[0] == 'c' && name.back() == '0')
    return {"Concentration", Dimension::amount() / m3};
  if (name == "T" || name == "T_in" || name == "T_cool")
    return {"Temperature", Dimension::temperature()};
  if (name == "rho" || name == "rho_in" || (name.rfind("rho", 0) == 0))
    return {"Density", Dimension::mass() / m3};
  if (name == "cp")
    return {"SpecificHeatCapacity",
            energy / (Dimension::mass() * Dimension::temperature())};
  if (name.rfind("dHr", 0) == 0)
    return {"MolarEnthalpy", energy / Dimension::amount()};
  if (name == "UA")
    return {"ThermalConductance",
            energy / Dimension::time() / Dimension::temperature()};
  if (name[0] == 'M') return {"MolarMass", Dimension::mass() / Dimension::amount()};
  return {"Real", Dimension::wildcard()};
}

std::string parameter_comment(const std::string& name) {
  if (name == "q") return "inlet volumetric flow rate";
  if (name == "V") return "reactor volume";
  if (name == "V0") return "nominal volume of the overflow reactor";
  if (name[0] == 'c' && name.back() == '0')
    return "inlet concentration of " + name.substr(1, name.size() - 2) +
           ", also the start value";
  if (name == "T") return "constant reactor temperature, isothermal operation";
  if (name == "T_in") return "inlet temperature";
  if (name == "T_cool") return "coolant temperature";
  if (name == "rho") return "constant mixture density";
  if (name == "rho_in") return "density of the inlet mixture";
  if (name == "cp") return "specific heat capacity of the mixture";
  if (name.rfind("dHr", 0) == 0)
    return "molar reaction enthalpy of reaction " + name.substr(3);
  if (name == "UA") return "heat transfer coefficient times exchange area";
  if (name.rfind("rho", 0) == 0)
    return "pure-component density of " + species_of(name, "rho");
  if (name[0] == 'M') return "molar mass of " + species_of(name, "M");
  return name;
}

}  // namespace

const Parameter* EquationSystem::find_parameter(const std::string& name) const {
  for (const auto& p : parameters)
    if (p.name == name) return &p;
  return nullptr;
}

const Variable* EquationSystem::find_unknown(const std::string& name) const {
  for (const auto& v : unknowns)
    if (v.name == name) return &v;
  return nullptr;
}

int EquationSystem::unknown_index(const std::string& name) const {
  for (std::size_t i = 0; i < unknowns.size(); ++i)
    if (unknowns[i].name == name) return static_cast<int>(i);
  return -1;
}

int EquationSystem::n_states() const {
  int n = 0;
  for (const auto& v : unknowns)
    if (v.kind == VarKind::kDifferential) ++n;
  return n;
}

std::map<std::string, Dimension> EquationSystem::dimension_env() const {
  std::map<std::string, Dimension> env;
  for (const auto& p : parameters) env[p.name] = p.dimension;
  for (const auto& v : unknowns) env[v.name] = v.dimension;
  env["time"] = Dimension::time();
  return env;
}

EquationSystem build_equations(const ReactorScenario& s) {
  if (!s.omitted.empty()) {
    std::vector<std::string> missing(s.omitted.begin(), s.omitted.end());
    throw UnderSpecified(std::move(missing));
  }

  EquationSystem sys;
  const auto& species = s.scheme.components;
  const bool constant_density = s.density.constant;
  const bool isothermal = s.mode.isothermal;
  const bool adiabatic = s.mode.adiabatic;
  sys.classification = constant_density ? SystemKind::kOde : SystemKind::kDae;

  // Parameters: prompt set in canonical order, then rate constants, then the
  // derived inlet density of the non-constant-density case.
  auto tmpl = scenario::find_template(s.template_id);
  std::vector<std::string> order;
  if (tmpl) {
    order = scenario::required_parameters(*tmpl);
  } else {
    for (const auto& [name, q] : s.parameters) order.push_back(name);
  }
  auto add_parameter = [&](const std::string& name, double si,
                           const Dimension& dim, const std::string& type,
                           const std::string& comment) {
    Parameter p;
    p.name = name;
    p.si_value = si;
    p.dimension = dim;
    p.modelica_type = type;
    p.comment = comment;
    sys.parameters.push_back(std::move(p));
  };
  for (const auto& name : order) {
    const auto it = s.parameters.find(name);
    if (it == s.parameters.end())
      throw UnderSpecified({name});
    const TypeInfo info = parameter_type(name);
    add_parameter(name, units::to_si(it->second).value, info.dimension,
                  info.modelica_type, parameter_comment(name));
  }
  bool any_arrhenius = false;
  for (const auto& rxn : s.scheme.reactions)
    if (rxn.kinetics.arrhenius) any_arrhenius = true;
  if (any_arrhenius) {
    const Dimension r_dim =
        Dimension::mass() * Dimension::length().pow(2) / Dimension::time().pow(2) /
        (Dimension::amount() * Dimension::temperature());
    add_parameter("Rgas", kGasConstant, r_dim, "Real",
                  "universal gas constant in J/(mol.K)");
  }
  for (std::size_t r = 0; r < s.scheme.reactions.size(); ++r) {
    const auto& rxn = s.scheme.reactions[r];
    const std::string idx = std::to_string(r + 1);
    const auto kf_si = units::to_si(rxn.kinetics.k_forward);
    add_parameter("kf" + idx, kf_si.value, kf_si.unit.dimension, "Real",
                  "forward rate constant of reaction " + idx + " in " +
                      kf_si.unit.symbol);
    if (rxn.reversible) {
      const auto kr_si = units::to_si(*rxn.kinetics.k_reverse);
      add_parameter("kr" + idx, kr_si.value, kr_si.unit.dimension, "Real",
                    "reverse rate constant of reaction " + idx + " in " +
                        kr_si.unit.symbol);
    }
    if (rxn.kinetics.arrhenius) {
      const auto k0_si = units::to_si(rxn.kinetics.arrhenius->first);
      const auto ea_si = units::to_si(rxn.kinetics.arrhenius->second);
      add_parameter("k0" + idx, k0_si.value, k0_si.unit.dimension, "Real",
                    "Arrhenius pre-exponential factor of reaction " + idx);
      add_parameter("Ea" + idx, ea_si.value, ea_si.unit.dimension, "Real",
                    "activation energy of reaction " + idx);
    }
  }
  double rho_in = 0.0;
  if (!constant_density) {
    for (const auto& sp : species)
      rho_in += units::to_si(s.parameters.at("c" + sp + "0")).value *
                units::to_si(s.density.molar_mass.at(sp)).value;
    add_parameter("rho_in", rho_in,
                  Dimension::mass() / Dimension::length().pow(3), "Density",
                  parameter_comment("rho_in"));
  }

  // Unknowns: states first (concentrations, temperature, density), then the
  // algebraic unknowns.
  const Dimension d_conc = Dimension::amount() / Dimension::length().pow(3);
  auto add_unknown = [&](const std::string& name, VarKind kind,
                         const Dimension& dim, const std::string& type,
                         const std::string& start_param,
                         const std::string& comment) {
    Variable v;
    v.name = name;
    v.kind = kind;
    v.dimension = dim;
    v.modelica_type = type;
    v.start_param = start_param;
    if (!start_param.empty()) {
      if (const Parameter* p = sys.find_parameter(start_param)) v.start = p->si_value;
    }
    v.comment = comment;
    sys.unknowns.push_back(std::move(v));
  };
  for (const auto& sp : species)
    add_unknown("c" + sp, VarKind::kDifferential, d_conc, "Concentration",
                "c" + sp + "0", "concentration of " + sp);
  if (!isothermal)
    add_unknown("T", VarKind::kDifferential, Dimension::temperature(),
                "Temperature", "T_in", "reactor temperature");
  if (!constant_density) {
    add_unknown("rho", VarKind::kDifferential,
                Dimension::mass() / Dimension::length().pow(3), "Density",
                "rho_in", "mixture density");
    add_unknown("V", VarKind::kAlgebraic, Dimension::length().pow(3), "Volume",
                "V0", "reaction volume");
    add_unknown("q_out", VarKind::kAlgebraic,
                Dimension::length().pow(3) / Dimension::time(),
                "VolumeFlowRate", "q", "outlet volumetric flow rate");
  }
  const bool has_duty_unknown = isothermal && !adiabatic;
  if (has_duty_unknown)
    add_unknown("Qdot", VarKind::kAlgebraic,
                Dimension::mass() * Dimension::length().pow(2) /
                    Dimension::time().pow(3),
                "HeatFlowRate", "", "heat flow from the cooling jacket");

  // Reaction-rate expressions, inlined into the balances and kept as named
  // auxiliary definitions for the checker.
  std::vector<ExprPtr> rates;
  for (std::size_t r = 0; r < s.scheme.reactions.size(); ++r) {
    const bool arrhenius = s.scheme.reactions[r].kinetics.arrhenius.has_value();
    ExprPtr rate = rate_expression(s.scheme.reactions[r], static_cast<int>(r),
                                   species, arrhenius);
    rates.push_back(rate);
    AuxDef aux;
    aux.name = "r" + std::to_string(r + 1);
    aux.rhs = rate;
    aux.dimension = d_conc / Dimension::time();
    aux.comment = "rate of reaction " + std::to_string(r + 1);
    sys.aux.push_back(std::move(aux));
  }

  auto add_equation = [&](ExprPtr lhs, ExprPtr rhs, const std::string& comment) {
    sys.equations.push_back(Equation{std::move(lhs), std::move(rhs), comment});
  };

  // Species balances.
  for (const auto& sp : species) {
    ExprPtr rhs;
    if (constant_density) {
      rhs = ex::mul(ex::div(ex::sym("q"), ex::sym("V")),
                    ex::sub(ex::sym("c" + sp + "0"), ex::sym("c" + sp)));
    } else {
      rhs = ex::sub(ex::mul(ex::sym("q"), ex::sym("c" + sp + "0")),
                    ex::mul(ex::sym("q_out"), ex::sym("c" + sp)));
    }
    for (std::size_t r = 0; r < s.scheme.reactions.size(); ++r) {
      const auto& rxn = s.scheme.reactions[r];
      const auto re = rxn.reactants.find(sp);
      const auto pr = rxn.products.find(sp);
      ExprPtr scaled_rate =
          constant_density ? rates[r] : ex::mul(ex::sym("V"), rates[r]);
      if (re != rxn.reactants.end())
        rhs = ex::sub(rhs, nu_times(re->second, scaled_rate));
      else if (pr != rxn.products.end())
        rhs = ex::add(rhs, nu_times(pr->second, scaled_rate));
    }
    ExprPtr lhs = constant_density
                      ? ex::der(ex::sym("c" + sp))
                      : ex::mul(ex::sym("V"), ex::der(ex::sym("c" + sp)));
    add_equation(std::move(lhs), std::move(rhs), "component balance for " + sp);
  }

  // Energy balance for the non-isothermal modes; the jacket duty is inlined
  // for the non-adiabatic case.
  if (!isothermal) {
    ExprPtr lhs = ex::mul(ex::mul(ex::mul(ex::sym("rho"), ex::sym("cp")),
                                  ex::sym("V")),
                          ex::der(ex::sym("T")));
    ExprPtr rhs = ex::mul(ex::mul(ex::mul(ex::sym("rho"), ex::sym("cp")),
                                  ex::sym("q")),
                          ex::sub(ex::sym("T_in"), ex::sym("T")));
    for (std::size_t r = 0; r < s.scheme.reactions.size(); ++r) {
      ExprPtr term = ex::mul(
          ex::mul(ex::neg(ex::sym("dHr" + std::to_string(r + 1))), ex::sym("V")),
          rates[r]);
      rhs = ex::add(std::move(rhs), std::move(term));
    }
    if (!adiabatic) {
      ExprPtr duty = ex::mul(ex::sym("UA"),
                             ex::sub(ex::sym("T_cool"), ex::sym("T")));
      AuxDef aux;
      aux.name = "Qdot";
      aux.rhs = duty;
      aux.dimension = Dimension::mass() * Dimension::length().pow(2) /
                      Dimension::time().pow(3);
      aux.comment = "heat flow from the cooling jacket";
      sys.aux.push_back(std::move(aux));
      rhs = ex::add(std::move(rhs), std::move(duty));
    }
    add_equation(std::move(lhs), std::move(rhs), "energy balance");
  }

  if (!constant_density) {
    // Total mass balance at constant reaction volume.
    add_equation(ex::mul(ex::sym("V"), ex::der(ex::sym("rho"))),
                 ex::sub(ex::mul(ex::sym("rho_in"), ex::sym("q")),
                         ex::mul(ex::sym("rho"), ex::sym("q_out"))),
                 "total mass balance at constant volume");
    // Overflow operation pins the reaction volume.
    add_equation(ex::sym("V"), ex::sym("V0"),
                 "overflow operation keeps the reaction volume constant");
    // Volume additivity closure.
    ExprPtr acc;
    for (const auto& sp : species) {
      ExprPtr term = ex::div(ex::mul(ex::sym("c" + sp), ex::sym("M" + sp)),
                             ex::sym("rho" + sp));
      acc = acc ? ex::add(std::move(acc), std::move(term)) : std::move(term);
    }
    add_equation(ex::num(1.0), std::move(acc), "volume additivity of the mixture");
  }

  // Jacket duty equation for the isothermal non-adiabatic mode.
  if (has_duty_unknown) {
    add_equation(ex::sym("Qdot"),
                 ex::mul(ex::sym("UA"), ex::sub(ex::sym("T_cool"), ex::sym("T"))),
                 "heat exchange with the cooling jacket");
  }

  return sys;
}

std::vector<double> residual(const EquationSystem& sys,
                             const std::map<std::string, double>& state,
                             const std::map<std::string, double>& derivatives,
                             double t) {
  CompiledSystem cs(sys);
  std::vector<double> slots = cs.make_slots();
  for (std::size_t i = 0; i < sys.unknowns.size(); ++i) {
    const auto& v = sys.unknowns[i];
    const auto it = state.find(v.name);
    if (it == state.end()) throw UnboundSymbol(v.name);
    slots[cs.unknown_slot(static_cast<int>(i))] = it->second;
    if (v.kind == VarKind::kDifferential) {
      const auto dit = derivatives.find(v.name);
      if (dit == derivatives.end()) throw UnboundSymbol("der(" + v.name + ")");
      slots[cs.der_slot(static_cast<int>(i))] = dit->second;
    }
  }
  slots[cs.time_slot()] = t;
  std::vector<double> out(sys.equations.size());
  for (std::size_t i = 0; i < sys.equations.size(); ++i) {
    out[i] = cs.eval_residual(static_cast<int>(i), slots);
    if (!std::isfinite(out[i]))
      throw NonFiniteResult("residual of equation " + std::to_string(i) +
                            " is not finite");
  }
  return out;
}

CompiledSystem::CompiledSystem(const EquationSystem& sys) : sys_(&sys) {
  for (const auto& p : sys.parameters) slots_.intern(p.name);
  unknown_slots_.resize(sys.unknowns.size());
  der_slots_.assign(sys.unknowns.size(), -1);
  for (std::size_t i = 0; i < sys.unknowns.size(); ++i)
    unknown_slots_[i] = slots_.intern(sys.unknowns[i].name);
  for (std::size_t i = 0; i < sys.unknowns.size(); ++i)
    if (sys.unknowns[i].kind == VarKind::kDifferential)
      der_slots_[i] = slots_.intern(expr::SlotMap::der_slot(sys.unknowns[i].name));
  time_slot_ = slots_.intern("time");

  auto compile = [&](const ExprPtr& e) {
    auto c = expr::CompiledExpr::compile(e, slots_, /*add_missing=*/true);
    return *c;  // add_missing never fails
  };
  for (const auto& eq : sys.equations) {
    lhs_.push_back(compile(eq.lhs));
    rhs_.push_back(compile(eq.rhs));
  }
  for (const auto& a : sys.aux) aux_.push_back(compile(a.rhs));

  preset_.assign(slots_.size(), std::nan(""));
  for (const auto& p : sys.parameters) {
    preset_[*slots_.find(p.name)] = p.si_value;
  }
}

std::vector<double> CompiledSystem::make_slots() const { return preset_; }

double CompiledSystem::eval_lhs(int eq, std::span<const double> slots) const {
  return lhs_[eq].eval(slots);
}
double CompiledSystem::eval_rhs(int eq, std::span<const double> slots) const {
  return rhs_[eq].eval(slots);
}
double CompiledSystem::eval_residual(int eq, std::span<const double> slots) const {
  return lhs_[eq].eval(slots) - rhs_[eq].eval(slots);
}
double CompiledSystem::eval_aux(int i, std::span<const double> slots) const {
  return aux_[i].eval(slots);
}

ExplicitForm explicit_form(const EquationSystem& sys) {
  ExplicitForm form;
  std::vector<bool> have(sys.unknowns.size(), false);

  auto is_param = [&](const std::string& name) {
    return sys.find_parameter(name) != nullptr;
  };
  // Multiplicative chain of parameter symbols ending in der(x).
  std::function<bool(const ExprPtr&, int*, ExprPtr*)> match_der_lhs =
      [&](const ExprPtr& lhs, int* state, ExprPtr* coefficient) -> bool {
    if (lhs->op == expr::Op::kDer && lhs->args[0]->op == expr::Op::kSymbol) {
      *state = sys.unknown_index(lhs->args[0]->name);
      *coefficient = nullptr;
      return *state >= 0;
    }
    if (lhs->op == expr::Op::kMul) {
      // Left side must be parameter-only, right side recurses.
      expr::SymbolUse use;
      expr::collect(lhs->args[0], use);
      if (!use.der_symbols.empty() || use.der_of_non_symbol) return false;
      for (const auto& s : use.symbols)
        if (!is_param(s)) return false;
      ExprPtr inner_coef;
      if (!match_der_lhs(lhs->args[1], state, &inner_coef)) return false;
      *coefficient = inner_coef ? ex::mul(lhs->args[0], inner_coef) : lhs->args[0];
      return true;
    }
    return false;
  };

  std::vector<ExplicitForm::AlgEq> raw_alg;
  for (std::size_t i = 0; i < sys.equations.size(); ++i) {
    const auto& eq = sys.equations[i];
    int state = -1;
    ExprPtr coef;
    if (match_der_lhs(eq.lhs, &state, &coef)) {
      if (sys.unknowns[state].kind != VarKind::kDifferential || have[state])
        return form;
      have[state] = true;
      form.der_eqs.push_back({static_cast<int>(i), state, coef, eq.rhs});
      continue;
    }
    if (eq.lhs->op == expr::Op::kSymbol) {
      const int var = sys.unknown_index(eq.lhs->name);
      if (var >= 0 && sys.unknowns[var].kind == VarKind::kAlgebraic && !have[var]) {
        have[var] = true;
        raw_alg.push_back({static_cast<int>(i), var, eq.rhs});
        continue;
      }
    }
    return form;  // not in explicit shape
  }
  for (bool h : have)
    if (!h) return form;

  // Order algebraic definitions so each only references already-computed
  // algebraics (states and parameters are always available).
  std::vector<bool> ready(sys.unknowns.size(), false);
  for (std::size_t i = 0; i < sys.unknowns.size(); ++i)
    if (sys.unknowns[i].kind == VarKind::kDifferential) ready[i] = true;
  std::vector<bool> placed(raw_alg.size(), false);
  for (std::size_t round = 0; round < raw_alg.size(); ++round) {
    bool progress = false;
    for (std::size_t i = 0; i < raw_alg.size(); ++i) {
      if (placed[i]) continue;
      expr::SymbolUse use;
      expr::collect(raw_alg[i].rhs, use);
      bool ok = !use.der_of_non_symbol && use.der_symbols.empty();
      for (const auto& s : use.symbols) {
        const int idx = sys.unknown_index(s);
        if (idx >= 0 && !ready[idx]) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      form.alg_eqs.push_back(raw_alg[i]);
      ready[raw_alg[i].var] = true;
      placed[i] = true;
      progress = true;
    }
    if (!progress) break;
  }
  if (form.alg_eqs.size() != raw_alg.size()) return form;

  form.ok = true;
  return form;
}

}  // namespace rxmod::physics
