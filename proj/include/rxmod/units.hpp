#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rxmod/errors.hpp"
#include "rxmod/rational.hpp"

namespace rxmod::units {

// Index order of the seven SI base dimensions.
enum BaseDim : int {
  kLength = 0,
  kMass = 1,
  kTime = 2,
  kTemperature = 3,
  kAmount = 4,
  kCurrent = 5,
  kLuminosity = 6,
};

inline constexpr int kNumBaseDims = 7;

// Physical dimension: rational exponents over the seven SI base dimensions,
// plus a wildcard flag for symbols whose dimension is unknown (generic Real
// declarations). A wildcard unifies with anything; two concrete unequal
// dimensions do not unify.
class Dimension {
 public:
  Dimension() = default;

  static Dimension wildcard() {
    Dimension d;
    d.wildcard_ = true;
    return d;
  }
  static Dimension base(BaseDim which, Rational exp = Rational(1)) {
    Dimension d;
    d.exp_[which] = exp;
    return d;
  }
  static Dimension dimensionless() { return Dimension(); }

  static Dimension length() { return base(kLength); }
  static Dimension mass() { return base(kMass); }
  static Dimension time() { return base(kTime); }
  static Dimension temperature() { return base(kTemperature); }
  static Dimension amount() { return base(kAmount); }

  bool is_wildcard() const { return wildcard_; }
  bool is_dimensionless() const {
    if (wildcard_) return false;
    for (const auto& e : exp_)
      if (!e.is_zero()) return false;
    return true;
  }

  const Rational& exponent(BaseDim which) const { return exp_[which]; }
  Rational& exponent(BaseDim which) { return exp_[which]; }

  Dimension operator*(const Dimension& o) const {
    Dimension r;
    if (wildcard_ || o.wildcard_) return wildcard();
    for (int i = 0; i < kNumBaseDims; ++i) r.exp_[i] = exp_[i] + o.exp_[i];
    return r;
  }
  Dimension operator/(const Dimension& o) const {
    Dimension r;
    if (wildcard_ || o.wildcard_) return wildcard();
    for (int i = 0; i < kNumBaseDims; ++i) r.exp_[i] = exp_[i] - o.exp_[i];
    return r;
  }
  Dimension pow(const Rational& e) const {
    Dimension r;
    if (wildcard_) return wildcard();
    for (int i = 0; i < kNumBaseDims; ++i) r.exp_[i] = exp_[i] * e;
    return r;
  }

  friend bool operator==(const Dimension& a, const Dimension& b) {
    if (a.wildcard_ != b.wildcard_) return false;
    if (a.wildcard_) return true;
    return a.exp_ == b.exp_;
  }
  friend bool operator!=(const Dimension& a, const Dimension& b) { return !(a == b); }

  // Wildcard unifies with any dimension; two concrete dimensions unify only
  // when equal. Returns the concrete side (or wildcard when both are).
  static std::optional<Dimension> unify(const Dimension& a, const Dimension& b) {
    if (a.wildcard_) return b;
    if (b.wildcard_) return a;
    if (a == b) return a;
    return std::nullopt;
  }

  // Compact text form, e.g. "mol.m-3" or "1" for dimensionless.
  std::string to_string() const;

 private:
  std::array<Rational, kNumBaseDims> exp_{};
  bool wildcard_ = false;
};

// A concrete measurement unit. `scale` and `offset` map a value in this unit
// onto SI: value_si = value * scale + offset. Offsets exist only for
// temperature units (degree Celsius).
struct Unit {
  std::string symbol;
  Dimension dimension;
  double scale = 1.0;
  double offset = 0.0;
  std::string latex;

  bool is_si() const { return scale == 1.0 && offset == 0.0; }

  friend bool operator==(const Unit& a, const Unit& b) {
    return a.symbol == b.symbol && a.dimension == b.dimension &&
           a.scale == b.scale && a.offset == b.offset;
  }
};

struct Quantity {
  double value = 0.0;
  Unit unit;
};

// Immutable registry of known units. Built once; all lookups are const, so
// unrestricted parallel use is safe.
class UnitRegistry {
 public:
  static const UnitRegistry& instance();

  const Unit* find(const std::string& symbol) const;
  const Unit& get(const std::string& symbol) const;  // throws UnknownUnit

  // A unit counts as registered when its symbol is in the table or when it
  // is the exact SI-canonical form of its dimension (synthesized units for
  // derived rate-constant dimensions).
  bool is_registered(const Unit& u) const;

  // Canonical SI unit for a dimension: the first registered SI unit with
  // that dimension, else a synthesized one (scale 1, offset 0).
  Unit si_unit(const Dimension& d) const;

  // All registered units with the given dimension. Order is registration
  // order (deterministic).
  std::vector<Unit> compatible(const Dimension& d, bool include_si = true) const;

  const std::vector<Unit>& all() const { return units_; }

  // Text table (symbol, dimension exponents, scale, offset) used for
  // documentation dumps.
  std::string to_table() const;

 private:
  UnitRegistry();
  void add(const std::string& symbol, const Dimension& d, double scale,
           double offset, const std::string& latex);

  std::vector<Unit> units_;
};

// Synthesized canonical symbol for a dimension, e.g. "m3/(mol.s)".
std::string canonical_symbol(const Dimension& d);
std::string canonical_latex(const Dimension& d);

// Inverse of canonical_symbol; nullopt when the text is not in that form.
std::optional<Dimension> parse_canonical_symbol(const std::string& symbol);

// Resolve a unit symbol: registry lookup first, then canonical-form parse
// (synthesized SI units for derived dimensions). Throws UnknownUnit.
Unit resolve_unit(const std::string& symbol);

// Unit conversion. value_target = (value*scale + offset - offset_t)/scale_t.
// Throws DimensionMismatch when dimensions differ (wildcards not allowed)
// and UnknownUnit when either unit is unregistered.
Quantity convert(const Quantity& q, const Unit& target);

// Convenience: convert a quantity to the canonical SI unit of its dimension.
Quantity to_si(const Quantity& q);

}  // namespace rxmod::units
