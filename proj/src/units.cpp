#include "rxmod/units.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace rxmod::units {

namespace {

const char* kBaseSymbols[kNumBaseDims] = {"m", "kg", "s", "K", "mol", "A", "cd"};
const char* kBaseLatex[kNumBaseDims] = {"m", "kg", "s", "K", "mol", "A", "cd"};

std::string exponent_suffix(const Rational& e) {
  if (e == Rational(1)) return "";
  if (e.is_integer()) return std::to_string(e.num);
  return "^(" + e.to_string() + ")";
}

}  // namespace

std::string Dimension::to_string() const {
  if (wildcard_) return "*";
  return canonical_symbol(*this);
}

std::string canonical_symbol(const Dimension& d) {
  if (d.is_wildcard()) return "*";
  std::string num, den;
  int den_terms = 0;
  // Amount first so concentration-like units read "mol/m3" rather than
  // "1/m3.mol-1"; the rest in base order.
  const int order[kNumBaseDims] = {kAmount, kLength, kMass, kTime,
                                   kTemperature, kCurrent, kLuminosity};
  for (int k = 0; k < kNumBaseDims; ++k) {
    const int i = order[k];
    const Rational& e = d.exponent(static_cast<BaseDim>(i));
    if (e.is_zero()) continue;
    if (e.num > 0) {
      if (!num.empty()) num += ".";
      num += kBaseSymbols[i] + exponent_suffix(e);
    } else {
      if (!den.empty()) den += ".";
      den += kBaseSymbols[i] + exponent_suffix(-e);
      ++den_terms;
    }
  }
  if (num.empty() && den.empty()) return "1";
  if (den.empty()) return num;
  if (num.empty()) num = "1";
  if (den_terms > 1) return num + "/(" + den + ")";
  return num + "/" + den;
}

std::string canonical_latex(const Dimension& d) {
  if (d.is_wildcard()) return "-";
  std::string num, den;
  const int order[kNumBaseDims] = {kAmount, kLength, kMass, kTime,
                                   kTemperature, kCurrent, kLuminosity};
  for (int k = 0; k < kNumBaseDims; ++k) {
    const int i = order[k];
    const Rational& e = d.exponent(static_cast<BaseDim>(i));
    if (e.is_zero()) continue;
    const Rational mag = e.num > 0 ? e : -e;
    std::string part = kBaseLatex[i];
    if (mag != Rational(1)) part += "^{" + mag.to_string() + "}";
    std::string& side = e.num > 0 ? num : den;
    if (!side.empty()) side += "\\,";
    side += part;
  }
  if (num.empty() && den.empty()) return "1";
  if (den.empty()) return "\\mathrm{" + num + "}";
  if (num.empty()) num = "1";
  return "\\mathrm{" + num + "/(" + den + ")}";
}

const UnitRegistry& UnitRegistry::instance() {
  static const UnitRegistry registry;
  return registry;
}

void UnitRegistry::add(const std::string& symbol, const Dimension& d,
                       double scale, double offset, const std::string& latex) {
  Unit u;
  u.symbol = symbol;
  u.dimension = d;
  u.scale = scale;
  u.offset = offset;
  u.latex = latex.empty() ? "\\mathrm{" + symbol + "}" : latex;
  units_.push_back(std::move(u));
}

UnitRegistry::UnitRegistry() {
  using D = Dimension;
  const D one = D::dimensionless();
  const D m = D::length();
  const D kg = D::mass();
  const D s = D::time();
  const D K = D::temperature();
  const D mol = D::amount();
  const D m3 = m.pow(3);
  const D J = kg * m.pow(2) / s.pow(2);
  const D W = J / s;

  // SI base and derived units (scale 1, offset 0). Canonical units for each
  // dimension come first so si_unit() picks them.
  add("m", m, 1.0, 0.0, "\\mathrm{m}");
  add("kg", kg, 1.0, 0.0, "\\mathrm{kg}");
  add("s", s, 1.0, 0.0, "\\mathrm{s}");
  add("K", K, 1.0, 0.0, "\\mathrm{K}");
  add("mol", mol, 1.0, 0.0, "\\mathrm{mol}");
  add("m3", m3, 1.0, 0.0, "\\mathrm{m^{3}}");
  add("m3/s", m3 / s, 1.0, 0.0, "\\mathrm{m^{3}/s}");
  add("mol/m3", mol / m3, 1.0, 0.0, "\\mathrm{mol/m^{3}}");
  add("kg/m3", kg / m3, 1.0, 0.0, "\\mathrm{kg/m^{3}}");
  add("kg/mol", kg / mol, 1.0, 0.0, "\\mathrm{kg/mol}");
  add("J", J, 1.0, 0.0, "\\mathrm{J}");
  add("J/mol", J / mol, 1.0, 0.0, "\\mathrm{J/mol}");
  add("J/(kg.K)", J / (kg * K), 1.0, 0.0, "\\mathrm{J/(kg\\,K)}");
  add("W", W, 1.0, 0.0, "\\mathrm{W}");
  add("W/K", W / K, 1.0, 0.0, "\\mathrm{W/K}");
  add("Pa", J / m3, 1.0, 0.0, "\\mathrm{Pa}");

  // Non-SI variants. The thermochemical calorie is fixed at 4.184 J.
  add("degC", K, 1.0, 273.15, "^{\\circ}\\mathrm{C}");
  add("min", s, 60.0, 0.0, "\\mathrm{min}");
  add("h", s, 3600.0, 0.0, "\\mathrm{h}");
  add("g", kg, 1e-3, 0.0, "\\mathrm{g}");
  add("kmol", mol, 1e3, 0.0, "\\mathrm{kmol}");
  add("L", m3, 1e-3, 0.0, "\\mathrm{L}");
  add("mL", m3, 1e-6, 0.0, "\\mathrm{mL}");
  add("L/min", m3 / s, 1e-3 / 60.0, 0.0, "\\mathrm{L/min}");
  add("L/h", m3 / s, 1e-3 / 3600.0, 0.0, "\\mathrm{L/h}");
  add("m3/h", m3 / s, 1.0 / 3600.0, 0.0, "\\mathrm{m^{3}/h}");
  add("mol/L", mol / m3, 1e3, 0.0, "\\mathrm{mol/L}");
  add("kmol/m3", mol / m3, 1e3, 0.0, "\\mathrm{kmol/m^{3}}");
  add("g/L", kg / m3, 1.0, 0.0, "\\mathrm{g/L}");
  add("g/mL", kg / m3, 1e3, 0.0, "\\mathrm{g/mL}");
  add("kg/L", kg / m3, 1e3, 0.0, "\\mathrm{kg/L}");
  add("g/mol", kg / mol, 1e-3, 0.0, "\\mathrm{g/mol}");
  add("cal", J, 4.184, 0.0, "\\mathrm{cal}");
  add("kcal", J, 4184.0, 0.0, "\\mathrm{kcal}");
  add("kJ", J, 1e3, 0.0, "\\mathrm{kJ}");
  add("cal/mol", J / mol, 4.184, 0.0, "\\mathrm{cal/mol}");
  add("kcal/mol", J / mol, 4184.0, 0.0, "\\mathrm{kcal/mol}");
  add("kJ/mol", J / mol, 1e3, 0.0, "\\mathrm{kJ/mol}");
  add("cal/(g.K)", J / (kg * K), 4184.0, 0.0, "\\mathrm{cal/(g\\,K)}");
  add("kJ/(kg.K)", J / (kg * K), 1e3, 0.0, "\\mathrm{kJ/(kg\\,K)}");
  add("kW", W, 1e3, 0.0, "\\mathrm{kW}");
  add("kW/K", W / K, 1e3, 0.0, "\\mathrm{kW/K}");
  add("bar", J / m3, 1e5, 0.0, "\\mathrm{bar}");
  add("atm", J / m3, 101325.0, 0.0, "\\mathrm{atm}");
  add("1", one, 1.0, 0.0, "1");
}

const Unit* UnitRegistry::find(const std::string& symbol) const {
  for (const auto& u : units_)
    if (u.symbol == symbol) return &u;
  return nullptr;
}

const Unit& UnitRegistry::get(const std::string& symbol) const {
  const Unit* u = find(symbol);
  if (!u) throw UnknownUnit(symbol);
  return *u;
}

bool UnitRegistry::is_registered(const Unit& u) const {
  if (const Unit* hit = find(u.symbol))
    return hit->dimension == u.dimension && hit->scale == u.scale &&
           hit->offset == u.offset;
  // Synthesized SI-canonical units (derived rate-constant dimensions).
  return u.is_si() && u.symbol == canonical_symbol(u.dimension);
}

Unit UnitRegistry::si_unit(const Dimension& d) const {
  for (const auto& u : units_)
    if (u.is_si() && u.dimension == d) return u;
  Unit u;
  u.symbol = canonical_symbol(d);
  u.dimension = d;
  u.scale = 1.0;
  u.offset = 0.0;
  u.latex = canonical_latex(d);
  return u;
}

std::vector<Unit> UnitRegistry::compatible(const Dimension& d, bool include_si) const {
  std::vector<Unit> out;
  for (const auto& u : units_) {
    if (u.dimension != d) continue;
    if (!include_si && u.is_si()) continue;
    out.push_back(u);
  }
  return out;
}

std::string UnitRegistry::to_table() const {
  std::ostringstream os;
  os << "symbol       ";
  const char* heads[kNumBaseDims] = {"L", "M", "T", "Th", "N", "I", "J"};
  for (const auto* h : heads) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%-5s", h);
    os << buf;
  }
  os << "scale                  offset\n";
  for (const auto& u : units_) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-13s", u.symbol.c_str());
    os << buf;
    for (int i = 0; i < kNumBaseDims; ++i) {
      std::snprintf(buf, sizeof(buf), "%-5s",
                    u.dimension.exponent(static_cast<BaseDim>(i)).to_string().c_str());
      os << buf;
    }
    std::snprintf(buf, sizeof(buf), "%-22.17g %g", u.scale, u.offset);
    os << buf << "\n";
  }
  return os.str();
}

std::optional<Dimension> parse_canonical_symbol(const std::string& symbol) {
  if (symbol == "1") return Dimension::dimensionless();
  if (symbol == "*") return Dimension::wildcard();
  Dimension d;
  std::size_t pos = 0;
  int sign = 1;
  bool saw_any = false;

  auto parse_part = [&](const std::string& text) -> bool {
    // <base>[<int>] or <base>^( num / den )
    int base = -1;
    std::size_t blen = 0;
    for (int i = 0; i < kNumBaseDims; ++i) {
      const std::string b = kBaseSymbols[i];
      if (text.rfind(b, 0) == 0 && b.size() > blen) {
        base = i;
        blen = b.size();
      }
    }
    if (base < 0) return false;
    std::string rest = text.substr(blen);
    Rational e(1);
    if (!rest.empty()) {
      if (rest[0] == '^') {
        if (rest.size() < 5 || rest[1] != '(' || rest.back() != ')') return false;
        const std::string frac = rest.substr(2, rest.size() - 3);
        const auto slash = frac.find('/');
        try {
          if (slash == std::string::npos) {
            e = Rational(std::stoll(frac));
          } else {
            e = Rational(std::stoll(frac.substr(0, slash)),
                         std::stoll(frac.substr(slash + 1)));
          }
        } catch (...) {
          return false;
        }
      } else {
        try {
          e = Rational(std::stoll(rest));
        } catch (...) {
          return false;
        }
      }
    }
    d.exponent(static_cast<BaseDim>(base)) =
        d.exponent(static_cast<BaseDim>(base)) + (sign > 0 ? e : -e);
    saw_any = true;
    return true;
  };

  std::string part;
  bool in_caret = false;
  auto flush = [&]() -> bool {
    if (part.empty()) return true;
    if (part == "1") {
      part.clear();
      return true;
    }
    const bool ok = parse_part(part);
    part.clear();
    return ok;
  };
  while (pos < symbol.size()) {
    const char c = symbol[pos];
    if (in_caret) {
      part += c;
      if (c == ')') in_caret = false;
    } else if (c == '^') {
      part += c;
      in_caret = true;
    } else if (c == '.' || c == '/' || c == '(' || c == ')') {
      if (!flush()) return std::nullopt;
      if (c == '/') sign = -1;
    } else {
      part += c;
    }
    ++pos;
  }
  if (!flush()) return std::nullopt;
  if (!saw_any) return std::nullopt;
  return d;
}

Unit resolve_unit(const std::string& symbol) {
  const UnitRegistry& reg = UnitRegistry::instance();
  if (const Unit* hit = reg.find(symbol)) return *hit;
  if (auto d = parse_canonical_symbol(symbol)) {
    if (canonical_symbol(*d) == symbol) {
      Unit u;
      u.symbol = symbol;
      u.dimension = *d;
      u.scale = 1.0;
      u.offset = 0.0;
      u.latex = canonical_latex(*d);
      return u;
    }
  }
  throw UnknownUnit(symbol);
}

Quantity convert(const Quantity& q, const Unit& target) {
  const UnitRegistry& reg = UnitRegistry::instance();
  if (!reg.is_registered(q.unit)) throw UnknownUnit(q.unit.symbol);
  if (!reg.is_registered(target)) throw UnknownUnit(target.symbol);
  if (q.unit.dimension.is_wildcard() || target.dimension.is_wildcard() ||
      q.unit.dimension != target.dimension) {
    throw DimensionMismatch("cannot convert " + q.unit.symbol + " to " +
                            target.symbol);
  }
  Quantity out;
  out.value = (q.value * q.unit.scale + q.unit.offset - target.offset) / target.scale;
  out.unit = target;
  return out;
}

Quantity to_si(const Quantity& q) {
  return convert(q, UnitRegistry::instance().si_unit(q.unit.dimension));
}

}  // namespace rxmod::units
