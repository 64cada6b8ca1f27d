#include "rxmod/unit_analysis.hpp"

#include <cmath>

namespace rxmod::unit_analysis {

using expr::Expr;
using expr::ExprPtr;
using expr::Op;
using units::Dimension;
using units::Unit;

namespace {

struct UnitVal {
  Unit unit;
  bool wildcard = false;
};

UnitVal wildcard_val() {
  UnitVal v;
  v.unit.symbol = "*";
  v.unit.dimension = Dimension::wildcard();
  v.wildcard = true;
  return v;
}

std::string describe(const UnitVal& v) {
  if (v.wildcard) return "<any>";
  return v.unit.symbol.empty() ? units::canonical_symbol(v.unit.dimension)
                               : v.unit.symbol;
}

struct Walker {
  const UnitEnv& env;
  const AnalysisOptions& opts;
  AnalysisResult* result;

  void fail(const ExprPtr& node, const std::string& msg) {
    if (result->conflict) return;
    result->ok = false;
    result->conflict = Conflict{node->span, msg};
  }

  UnitVal unify(const ExprPtr& node, const UnitVal& a, const UnitVal& b,
                const char* what) {
    if (a.wildcard && b.wildcard) return a;
    if (a.wildcard) {
      result->used_wildcard = true;
      return b;
    }
    if (b.wildcard) {
      result->used_wildcard = true;
      return a;
    }
    if (a.unit.dimension == b.unit.dimension && a.unit.scale == b.unit.scale &&
        a.unit.offset == b.unit.offset) {
      return a;
    }
    fail(node, std::string("unit conflict in ") + what + ": " + describe(a) +
                   " vs " + describe(b));
    return wildcard_val();
  }

  // Rejects affine units (nonzero offset) in multiplicative contexts.
  bool reject_affine(const ExprPtr& node, const UnitVal& v, const char* what) {
    if (!v.wildcard && v.unit.offset != 0.0) {
      fail(node, std::string("affine unit ") + describe(v) + " used in " + what);
      return true;
    }
    return false;
  }

  // Small-rational reading of a numeric exponent (integers and halves etc.).
  std::optional<Rational> as_rational(double v) {
    for (std::int64_t den = 1; den <= 4; ++den) {
      const double scaled = v * static_cast<double>(den);
      const double rounded = std::nearbyint(scaled);
      if (std::fabs(scaled - rounded) < 1e-12 && std::fabs(rounded) <= 64)
        return Rational(static_cast<std::int64_t>(rounded), den);
    }
    return std::nullopt;
  }

  UnitVal walk(const ExprPtr& e) {
    if (!result->ok) return wildcard_val();
    switch (e->op) {
      case Op::kNumber: {
        if (opts.literals_are_wildcard) return wildcard_val();
        UnitVal v;
        v.unit = units::UnitRegistry::instance().si_unit(Dimension::dimensionless());
        return v;
      }
      case Op::kSymbol: {
        auto it = env.find(e->name);
        if (it == env.end()) {
          if (opts.missing_is_wildcard) {
            result->notes.push_back("symbol '" + e->name + "' has no known unit");
            return wildcard_val();
          }
          fail(e, "symbol '" + e->name + "' not present in unit environment");
          return wildcard_val();
        }
        if (it->second.dimension.is_wildcard()) return wildcard_val();
        UnitVal v;
        v.unit = it->second;
        return v;
      }
      case Op::kNeg:
        return walk(e->args[0]);
      case Op::kAdd:
      case Op::kSub: {
        UnitVal a = walk(e->args[0]);
        UnitVal b = walk(e->args[1]);
        if (!result->ok) return wildcard_val();
        return unify(e, a, b, e->op == Op::kAdd ? "addition" : "subtraction");
      }
      case Op::kMul:
      case Op::kDiv: {
        UnitVal a = walk(e->args[0]);
        UnitVal b = walk(e->args[1]);
        if (!result->ok) return wildcard_val();
        const char* what = e->op == Op::kMul ? "multiplication" : "division";
        if (reject_affine(e, a, what) || reject_affine(e, b, what))
          return wildcard_val();
        if (a.wildcard || b.wildcard) return wildcard_val();
        UnitVal v;
        if (e->op == Op::kMul) {
          v.unit.dimension = a.unit.dimension * b.unit.dimension;
          v.unit.scale = a.unit.scale * b.unit.scale;
        } else {
          v.unit.dimension = a.unit.dimension / b.unit.dimension;
          v.unit.scale = a.unit.scale / b.unit.scale;
        }
        v.unit.offset = 0.0;
        v.unit.symbol = units::canonical_symbol(v.unit.dimension);
        return v;
      }
      case Op::kPow: {
        UnitVal base = walk(e->args[0]);
        if (!result->ok) return wildcard_val();
        if (reject_affine(e, base, "exponentiation")) return wildcard_val();
        const ExprPtr& ex = e->args[1];
        if (ex->op == Op::kNumber ||
            (ex->op == Op::kNeg && ex->args[0]->op == Op::kNumber)) {
          const double raw = ex->op == Op::kNumber ? ex->number
                                                   : -ex->args[0]->number;
          if (base.wildcard) return wildcard_val();
          auto r = as_rational(raw);
          if (!r) {
            if (base.unit.dimension.is_dimensionless()) return base;
            fail(e, "irrational exponent on dimensioned base");
            return wildcard_val();
          }
          UnitVal v;
          v.unit.dimension = base.unit.dimension.pow(*r);
          v.unit.scale = std::pow(base.unit.scale, r->value());
          v.unit.offset = 0.0;
          v.unit.symbol = units::canonical_symbol(v.unit.dimension);
          return v;
        }
        UnitVal expv = walk(ex);
        if (!result->ok) return wildcard_val();
        if (!expv.wildcard && !expv.unit.dimension.is_dimensionless()) {
          fail(e, "exponent has dimension " + describe(expv));
          return wildcard_val();
        }
        if (base.wildcard) return wildcard_val();
        if (base.unit.dimension.is_dimensionless()) return base;
        fail(e, "non-literal exponent on dimensioned base " + describe(base));
        return wildcard_val();
      }
      case Op::kDer: {
        UnitVal a = walk(e->args[0]);
        if (!result->ok) return wildcard_val();
        if (a.wildcard) return wildcard_val();
        UnitVal v;
        v.unit.dimension = a.unit.dimension / Dimension::time();
        v.unit.scale = a.unit.scale;
        v.unit.offset = 0.0;  // d/dt cancels any affine offset
        v.unit.symbol = units::canonical_symbol(v.unit.dimension);
        return v;
      }
      case Op::kCall: {
        if (e->name == "abs" && e->args.size() == 1) return walk(e->args[0]);
        if (e->name == "sqrt" && e->args.size() == 1) {
          UnitVal a = walk(e->args[0]);
          if (!result->ok) return wildcard_val();
          if (reject_affine(e, a, "sqrt")) return wildcard_val();
          if (a.wildcard) return wildcard_val();
          UnitVal v;
          v.unit.dimension = a.unit.dimension.pow(Rational(1, 2));
          v.unit.scale = std::sqrt(a.unit.scale);
          v.unit.offset = 0.0;
          v.unit.symbol = units::canonical_symbol(v.unit.dimension);
          return v;
        }
        // Transcendental functions demand a dimensionless argument after
        // wildcard unification and yield a dimensionless result.
        for (const auto& arg : e->args) {
          UnitVal a = walk(arg);
          if (!result->ok) return wildcard_val();
          if (a.wildcard) {
            result->used_wildcard = true;
            continue;
          }
          if (!a.unit.dimension.is_dimensionless()) {
            fail(e, "argument of " + e->name + "() has dimension " + describe(a));
            return wildcard_val();
          }
        }
        UnitVal v;
        v.unit = units::UnitRegistry::instance().si_unit(Dimension::dimensionless());
        return v;
      }
    }
    return wildcard_val();
  }
};

}  // namespace

AnalysisResult unit_of_expression(const ExprPtr& e, const UnitEnv& env,
                                  const AnalysisOptions& opts) {
  AnalysisResult result;
  Walker w{env, opts, &result};
  UnitVal v = w.walk(e);
  if (result.ok) {
    if (v.wildcard) {
      result.used_wildcard = true;
      result.unit.symbol = "*";
      result.unit.dimension = Dimension::wildcard();
    } else {
      result.unit = v.unit;
    }
  }
  return result;
}

AnalysisResult dimension_of_expression(
    const ExprPtr& e, const std::map<std::string, Dimension>& env,
    const AnalysisOptions& opts) {
  UnitEnv uenv;
  for (const auto& [name, dim] : env) {
    Unit u;
    u.symbol = dim.is_wildcard() ? "*" : units::canonical_symbol(dim);
    u.dimension = dim;
    uenv.emplace(name, std::move(u));
  }
  return unit_of_expression(e, uenv, opts);
}

AnalysisResult check_equation_units(const ExprPtr& lhs, const ExprPtr& rhs,
                                    const UnitEnv& env,
                                    const AnalysisOptions& opts) {
  AnalysisResult result;
  Walker w{env, opts, &result};
  UnitVal a = w.walk(lhs);
  UnitVal b = w.walk(rhs);
  if (!result.ok) return result;
  UnitVal u = w.unify(lhs, a, b, "equation");
  if (result.ok) {
    if (u.wildcard) {
      result.used_wildcard = true;
      result.unit.symbol = "*";
      result.unit.dimension = Dimension::wildcard();
    } else {
      result.unit = u.unit;
    }
  }
  return result;
}

}  // namespace rxmod::unit_analysis
