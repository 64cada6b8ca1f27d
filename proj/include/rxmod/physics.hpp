#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rxmod/expr.hpp"
#include "rxmod/scenario.hpp"
#include "rxmod/units.hpp"

namespace rxmod::physics {

enum class VarKind { kDifferential, kAlgebraic };

struct Variable {
  std::string name;
  VarKind kind = VarKind::kDifferential;
  units::Dimension dimension;
  double start = 0.0;            // SI start value (initial guess for algebraics)
  std::string modelica_type;     // built-in physical type, or "Real"
  std::string start_param;       // identifier rendered in (start=...), may be empty
  std::string comment;
};

struct Parameter {
  std::string name;
  double si_value = 0.0;
  units::Dimension dimension;
  std::string modelica_type;
  std::string comment;
};

struct Equation {
  expr::ExprPtr lhs;
  expr::ExprPtr rhs;
  std::string comment;
};

// Named derived series (inlined reaction rates, jacket duty) kept alongside
// the square system so candidate models that declare these as variables can
// still be evaluated against the reference trajectory.
struct AuxDef {
  std::string name;
  expr::ExprPtr rhs;
  units::Dimension dimension;
  std::string comment;
};

enum class SystemKind { kOde, kDae };

struct EquationSystem {
  std::vector<Parameter> parameters;  // declaration order
  std::vector<Variable> unknowns;     // declaration order, states first
  std::vector<Equation> equations;    // declaration order
  std::vector<AuxDef> aux;
  SystemKind classification = SystemKind::kOde;

  const Parameter* find_parameter(const std::string& name) const;
  const Variable* find_unknown(const std::string& name) const;
  int unknown_index(const std::string& name) const;  // -1 when absent
  int n_states() const;

  // Dimension environment over parameters, unknowns and time.
  std::map<std::string, units::Dimension> dimension_env() const;
};

// Builds the ground-truth system for a fully specified scenario; throws
// UnderSpecified listing the missing names otherwise.
EquationSystem build_equations(const scenario::ReactorScenario& s);

// lhs - rhs per equation in declaration order. Throws UnboundSymbol when a
// referenced symbol or derivative is missing and NonFiniteResult when the
// evaluation produces a non-finite component.
std::vector<double> residual(const EquationSystem& sys,
                             const std::map<std::string, double>& state,
                             const std::map<std::string, double>& derivatives,
                             double t);

// ---------------------------------------------------------------------------
// Compiled form shared by the integrator and the checker: slots are laid out
// as [parameters..., unknowns..., der:<state>..., time] and parameter values
// can be preloaded once.
// ---------------------------------------------------------------------------
class CompiledSystem {
 public:
  explicit CompiledSystem(const EquationSystem& sys);

  const EquationSystem& system() const { return *sys_; }
  std::size_t n_slots() const { return slots_.size(); }
  int unknown_slot(int i) const { return unknown_slots_[i]; }
  int der_slot(int i) const { return der_slots_[i]; }  // -1 for algebraics
  int time_slot() const { return time_slot_; }

  // Writes parameter values into a fresh slot vector.
  std::vector<double> make_slots() const;

  double eval_lhs(int eq, std::span<const double> slots) const;
  double eval_rhs(int eq, std::span<const double> slots) const;
  double eval_residual(int eq, std::span<const double> slots) const;
  double eval_aux(int i, std::span<const double> slots) const;

 private:
  const EquationSystem* sys_;
  expr::SlotMap slots_;
  std::vector<int> unknown_slots_;
  std::vector<int> der_slots_;
  int time_slot_ = -1;
  std::vector<double> preset_;  // parameter values at their slots (NaN elsewhere)
  std::vector<expr::CompiledExpr> lhs_, rhs_;
  std::vector<expr::CompiledExpr> aux_;
};

// ---------------------------------------------------------------------------
// Explicit-form extraction for the ODE integrator. A der equation counts as
// explicit when its lhs is der(x) or a parameter-only product times der(x);
// an algebraic equation when its lhs is the bare variable and its rhs only
// references parameters, states and previously computable algebraics.
// ---------------------------------------------------------------------------
struct ExplicitForm {
  bool ok = false;
  struct DerEq {
    int eq = -1;
    int state = -1;            // unknown index
    expr::ExprPtr coefficient; // nullptr means 1
    expr::ExprPtr rhs;
  };
  struct AlgEq {
    int eq = -1;
    int var = -1;  // unknown index
    expr::ExprPtr rhs;
  };
  std::vector<DerEq> der_eqs;
  std::vector<AlgEq> alg_eqs;   // in evaluation order
};

ExplicitForm explicit_form(const EquationSystem& sys);

}  // namespace rxmod::physics
