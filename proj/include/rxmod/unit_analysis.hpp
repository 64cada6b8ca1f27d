#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rxmod/expr.hpp"
#include "rxmod/units.hpp"

namespace rxmod::unit_analysis {

// Symbol environment for unit checking. A symbol mapped to a unit with a
// wildcard dimension stands for a generic Real declaration.
using UnitEnv = std::map<std::string, units::Unit>;

struct Conflict {
  expr::Span span;
  std::string message;
};

struct AnalysisOptions {
  // Lenient mode (checker): numeric literals carry an unknown unit, so an
  // explicit numeric factor next to a mismatched unit is taken as a possible
  // manual conversion and silences the conflict. Strict mode (generated
  // physics): literals are dimensionless, which makes the check exact.
  bool literals_are_wildcard = true;
  // Whether a symbol absent from the environment unifies as wildcard (true)
  // or is itself a conflict (false).
  bool missing_is_wildcard = true;
};

struct AnalysisResult {
  bool ok = true;
  units::Unit unit;                   // unified unit when ok
  std::optional<Conflict> conflict;   // first non-unifiable node
  bool used_wildcard = false;         // a wildcard took part in unification
  std::vector<std::string> notes;

  units::Dimension dimension() const { return unit.dimension; }
};

// Unit of an expression under the environment; add/sub/equality demand
// unifiable operand units, mul/div combine them, der(x) divides by time,
// transcendental functions demand dimensionless arguments, and affine
// (offset) units are rejected in any multiplicative context.
AnalysisResult unit_of_expression(const expr::ExprPtr& e, const UnitEnv& env,
                                  const AnalysisOptions& opts = {});

// Dimension-only wrapper over unit_of_expression.
AnalysisResult dimension_of_expression(
    const expr::ExprPtr& e, const std::map<std::string, units::Dimension>& env,
    const AnalysisOptions& opts = {});

// Unit check of the equation lhs = rhs (both sides analyzed, then unified).
AnalysisResult check_equation_units(const expr::ExprPtr& lhs,
                                    const expr::ExprPtr& rhs,
                                    const UnitEnv& env,
                                    const AnalysisOptions& opts = {});

}  // namespace rxmod::unit_analysis
