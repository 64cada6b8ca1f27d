#include "rxmod/checker.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rxmod/errors.hpp"
#include "rxmod/unit_analysis.hpp"

namespace rxmod::checker {

namespace ex = rxmod::expr;
namespace ua = rxmod::unit_analysis;
using frontend::ModelicaAST;
using frontend::SymbolTable;
using units::Quantity;

namespace {

std::string normalize_identifier(const std::string& name) {
  std::string out;
  for (const char c : name)
    if (c != '_') out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool rel_equal(double a, double b, double rtol) {
  const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
  return std::fabs(a - b) <= rtol * scale;
}

// Exact-name lookup first, then the normalized (case-insensitive,
// underscore-stripped) fallback. Returns the canonical name.
class NameMatcher {
 public:
  void add(const std::string& canonical) {
    exact_.insert(canonical);
    normalized_.emplace(normalize_identifier(canonical), canonical);
  }
  std::optional<std::string> match(const std::string& candidate) const {
    if (exact_.count(candidate)) return candidate;
    const auto it = normalized_.find(normalize_identifier(candidate));
    if (it != normalized_.end()) return it->second;
    return std::nullopt;
  }

 private:
  std::set<std::string> exact_;
  std::map<std::string, std::string> normalized_;
};

double si_value(const Quantity& q) { return q.value * q.unit.scale + q.unit.offset; }

}  // namespace

CheckContext CheckContext::build(const scenario::ReactorScenario& s,
                                 const Tolerances& tol) {
  CheckContext ctx;
  ctx.scenario = s;
  ctx.tolerances = tol;
  for (const auto& [name, q] : s.parameters) ctx.expected[name] = q;
  for (std::size_t r = 0; r < s.scheme.reactions.size(); ++r) {
    const std::string idx = std::to_string(r + 1);
    ctx.expected["kf" + idx] = s.scheme.reactions[r].kinetics.k_forward;
    if (s.scheme.reactions[r].kinetics.k_reverse)
      ctx.expected["kr" + idx] = *s.scheme.reactions[r].kinetics.k_reverse;
  }
  if (s.omitted.empty()) {
    ctx.reference = physics::build_equations(s);
    ctx.trajectory = sim::simulate(*ctx.reference);
  }
  return ctx;
}

// ---------------------------------------------------------------------------
// Categories 1 and 3: declared parameter values
// ---------------------------------------------------------------------------

namespace {

// Enumerates "interpreted as unit a, converted to unit b" over all registered
// unit pairs of the prompt dimension. The raw unconverted magnitude is the
// a == b case.
bool explained_by_misconversion(double declared, const Quantity& prompt,
                                double rtol, std::string* how) {
  const auto& reg = units::UnitRegistry::instance();
  const auto compat = reg.compatible(prompt.unit.dimension);
  const double correct = si_value(prompt);
  for (const auto& a : compat) {
    for (const auto& b : compat) {
      const double v = (prompt.value * a.scale + a.offset - b.offset) / b.scale;
      if (rel_equal(v, correct, rtol)) continue;  // that would simply be right
      if (rel_equal(declared, v, rtol)) {
        *how = "matches " + ex::format_double(prompt.value) + " " + a.symbol +
               " converted to " + b.symbol + " instead of the SI value " +
               ex::format_double(correct);
        return true;
      }
    }
  }
  return false;
}

}  // namespace

void check_parameter_values(const ModelicaAST& ast, const SymbolTable& table,
                            const CheckContext& ctx, ErrorReport& report) {
  NameMatcher matcher;
  for (const auto& [name, q] : ctx.expected) matcher.add(name);
  for (const auto& name : ctx.scenario.omitted) matcher.add(name);

  const double rtol = ctx.tolerances.value_rtol;
  for (const auto& [name, info] : table.symbols) {
    if (info.declaration_index < 0) continue;
    const auto& decl = ast.declarations[info.declaration_index];
    const auto canonical = matcher.match(name);
    if (!canonical) {
      if (decl.is_parameter)
        report.notes.push_back("parameter '" + name +
                               "' has no scenario counterpart; not scored");
      continue;
    }
    if (ctx.scenario.omitted.count(*canonical)) {
      if (info.value.has_value()) {
        report.add(Category::kIncorrectValue, decl.span,
                   "'" + name + "' was deliberately not given in the prompt; "
                   "the declared value " + ex::format_double(*info.value) +
                   " is fabricated");
      } else {
        report.notes.push_back("'" + name +
                               "' is correctly left without a value");
      }
      continue;
    }
    if (!info.value.has_value()) {
      if (decl.value)
        report.notes.push_back("value of '" + name +
                               "' could not be evaluated; not scored");
      else
        report.notes.push_back("'" + name + "' declared without a value");
      continue;
    }
    const Quantity& prompt = ctx.expected.at(*canonical);
    const double correct = si_value(prompt);
    if (rel_equal(*info.value, correct, rtol)) continue;
    std::string how;
    if (explained_by_misconversion(*info.value, prompt, rtol, &how)) {
      report.add(Category::kUnitConversion, decl.span,
                 "'" + name + "' = " + ex::format_double(*info.value) + " " + how);
    } else {
      report.add(Category::kIncorrectValue, decl.span,
                 "'" + name + "' = " + ex::format_double(*info.value) +
                     " cannot be derived from the given " +
                     ex::format_double(prompt.value) + " " + prompt.unit.symbol);
    }
  }
}

// ---------------------------------------------------------------------------
// Category 4: undefined variables in the equation section
// ---------------------------------------------------------------------------

namespace {

void collect_with_spans(const ex::ExprPtr& e,
                        std::map<std::string, expr::Span>& symbols,
                        std::set<std::string>& functions) {
  switch (e->op) {
    case ex::Op::kSymbol:
      symbols.emplace(e->name, e->span);
      return;
    case ex::Op::kCall:
      functions.insert(e->name);
      break;
    default:
      break;
  }
  for (const auto& a : e->args) collect_with_spans(a, symbols, functions);
}

bool is_known_function(const std::string& name) {
  static const std::set<std::string> known = {"exp", "log", "log10", "sqrt",
                                              "sin", "cos", "tan", "abs"};
  return known.count(name) > 0;
}

}  // namespace

void check_undefined_variables(const ModelicaAST& ast, const SymbolTable& table,
                               ErrorReport& report) {
  std::map<std::string, expr::Span> used;
  std::set<std::string> functions;
  for (const auto& eq : ast.equations) {
    collect_with_spans(eq.lhs, used, functions);
    collect_with_spans(eq.rhs, used, functions);
  }
  for (const auto& [name, span] : used) {
    if (name == "time") continue;
    if (table.find(name)) continue;
    report.add(Category::kUndefinedVariable, span,
               "'" + name + "' is used in the equations but never declared");
  }
  for (const auto& fn : functions) {
    if (!is_known_function(fn))
      report.notes.push_back("unknown function '" + fn +
                             "()'; equations using it are not evaluated");
  }
}

// ---------------------------------------------------------------------------
// Category 5: equation residuals along the reference trajectory plus
// mode-constraint screens
// ---------------------------------------------------------------------------

namespace {

struct SeriesBinding {
  enum class Source { kConst, kColumn, kDerColumn, kAux, kTime, kBlocked };
  Source source = Source::kBlocked;
  double constant = 0.0;
  int column = -1;
  std::string blocker;
};

struct BoundEquation {
  ex::CompiledExpr lhs, rhs;
  std::vector<SeriesBinding> bindings;  // per slot
  bool blocked = false;
  std::string blocker;
};

}  // namespace

void check_equations(const ModelicaAST& ast, const SymbolTable& table,
                     const CheckContext& ctx, ErrorReport& report) {
  // Matchers for the reference vocabulary.
  NameMatcher param_matcher, unknown_matcher, aux_matcher, heat_matcher;
  std::map<std::string, double> ref_params;
  std::map<std::string, int> ref_unknowns;
  std::map<std::string, int> ref_aux;
  if (ctx.reference) {
    for (const auto& p : ctx.reference->parameters) {
      param_matcher.add(p.name);
      ref_params[p.name] = p.si_value;
    }
    for (std::size_t i = 0; i < ctx.reference->unknowns.size(); ++i) {
      unknown_matcher.add(ctx.reference->unknowns[i].name);
      ref_unknowns[ctx.reference->unknowns[i].name] = static_cast<int>(i);
    }
    for (std::size_t i = 0; i < ctx.reference->aux.size(); ++i) {
      aux_matcher.add(ctx.reference->aux[i].name);
      ref_aux[ctx.reference->aux[i].name] = static_cast<int>(i);
    }
  } else {
    for (const auto& [name, q] : ctx.expected) {
      param_matcher.add(name);
      ref_params[name] = si_value(q);
    }
  }
  for (const char* n : {"UA", "T_cool", "Qdot"}) heat_matcher.add(n);

  const bool isothermal = ctx.scenario.mode.isothermal;
  const bool adiabatic = ctx.scenario.mode.adiabatic;

  std::set<int> flagged;  // equation indices already counted in category 5
  bool any_heat_reference = false;

  // Sample indices over the stored trajectory.
  std::vector<int> samples;
  if (ctx.trajectory) {
    const int n = static_cast<int>(ctx.trajectory->size());
    const int want = std::min(ctx.tolerances.trajectory_samples, n);
    for (int i = 0; i < want; ++i)
      samples.push_back(want == 1 ? 0 : (i * (n - 1)) / (want - 1));
  }

  for (std::size_t ei = 0; ei < ast.equations.size(); ++ei) {
    const auto& eq = ast.equations[ei];

    // Symbol usage drives both the screens and the evaluation bindings.
    ex::SymbolUse use;
    ex::collect(eq.lhs, use);
    ex::collect(eq.rhs, use);
    bool references_heat = false;
    bool references_der_T = false;
    for (const auto& s : use.symbols) {
      const auto hm = heat_matcher.match(s);
      if (hm && (*hm == "UA" || *hm == "T_cool")) references_heat = true;
      if (hm && *hm == "Qdot" && !adiabatic) any_heat_reference = true;
    }
    if (references_heat) any_heat_reference = true;
    for (const auto& s : use.der_symbols)
      if (normalize_identifier(s) == "t") references_der_T = true;

    // Screens: heat exchange modeled in an adiabatic scenario, temperature
    // dynamics in an isothermal scenario.
    if (adiabatic && references_heat && !flagged.count(static_cast<int>(ei))) {
      flagged.insert(static_cast<int>(ei));
      report.add(Category::kIncorrectEquation, eq.span,
                 "heat-exchange term in an adiabatic scenario");
      continue;
    }
    if (isothermal && references_der_T && !flagged.count(static_cast<int>(ei))) {
      flagged.insert(static_cast<int>(ei));
      report.add(Category::kIncorrectEquation, eq.span,
                 "temperature dynamics in an isothermal scenario");
      continue;
    }

    if (!ctx.trajectory) continue;

    // Bind candidate symbols to reference series.
    ex::SlotMap slots;
    auto lhs_c = ex::CompiledExpr::compile(eq.lhs, slots, true);
    auto rhs_c = ex::CompiledExpr::compile(eq.rhs, slots, true);
    if (!lhs_c || !rhs_c) {
      report.notes.push_back("equation " + std::to_string(ei + 1) +
                             " is not evaluable; skipped");
      continue;
    }
    std::vector<SeriesBinding> bindings(slots.size());
    bool blocked = false;
    std::string blocker;
    for (std::size_t si = 0; si < slots.names().size(); ++si) {
      const std::string& name = slots.names()[si];
      SeriesBinding b;
      if (name == "time") {
        b.source = SeriesBinding::Source::kTime;
      } else if (name.rfind("der:", 0) == 0) {
        const std::string state = name.substr(4);
        const auto m = unknown_matcher.match(state);
        if (m && ctx.reference->find_unknown(*m)->kind ==
                     physics::VarKind::kDifferential) {
          b.source = SeriesBinding::Source::kDerColumn;
          b.column = ref_unknowns.at(*m);
        } else {
          blocked = true;
          blocker = "der(" + state + ")";
        }
      } else if (const auto pm = param_matcher.match(name)) {
        b.source = SeriesBinding::Source::kConst;
        b.constant = ref_params.at(*pm);
      } else if (ctx.reference) {
        if (const auto um = unknown_matcher.match(name)) {
          b.source = SeriesBinding::Source::kColumn;
          b.column = ref_unknowns.at(*um);
        } else if (const auto am = aux_matcher.match(name)) {
          b.source = SeriesBinding::Source::kAux;
          b.column = ref_aux.at(*am);
        } else if (const auto* info = table.find(name);
                   info && info->value.has_value()) {
          // candidate-only parameter with a constant value
          b.source = SeriesBinding::Source::kConst;
          b.constant = *info->value;
        } else {
          blocked = true;
          blocker = name;
        }
      } else {
        blocked = true;
        blocker = name;
      }
      bindings[si] = b;
      if (blocked) break;
    }
    for (const auto& fn : use.functions)
      if (!is_known_function(fn)) {
        blocked = true;
        blocker = fn + "()";
      }
    if (blocked) {
      report.notes.push_back("equation " + std::to_string(ei + 1) +
                             " references '" + blocker +
                             "' with no reference series; skipped");
      continue;
    }

    // Evaluate the normalized residual along the trajectory.
    std::vector<double> slot_values(slots.size());
    double worst = 0.0;
    for (const int k : samples) {
      for (std::size_t si = 0; si < bindings.size(); ++si) {
        const auto& b = bindings[si];
        switch (b.source) {
          case SeriesBinding::Source::kConst:
            slot_values[si] = b.constant;
            break;
          case SeriesBinding::Source::kColumn:
            slot_values[si] = ctx.trajectory->values[k][b.column];
            break;
          case SeriesBinding::Source::kDerColumn:
            slot_values[si] = ctx.trajectory->derivatives[k][b.column];
            break;
          case SeriesBinding::Source::kAux:
            slot_values[si] = ctx.trajectory->aux_values[k][b.column];
            break;
          case SeriesBinding::Source::kTime:
            slot_values[si] = ctx.trajectory->times[k];
            break;
          case SeriesBinding::Source::kBlocked:
            break;
        }
      }
      const double l = lhs_c->eval(slot_values);
      const double r = rhs_c->eval(slot_values);
      if (!std::isfinite(l) || !std::isfinite(r)) {
        worst = std::numeric_limits<double>::infinity();
        break;
      }
      worst = std::max(worst,
                       std::fabs(l - r) / (1.0 + std::fabs(l) + std::fabs(r)));
    }
    if (worst > ctx.tolerances.equation_tol &&
        !flagged.count(static_cast<int>(ei))) {
      flagged.insert(static_cast<int>(ei));
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.3g", worst);
      report.add(Category::kIncorrectEquation, eq.span,
                 "does not hold along the reference trajectory (normalized "
                 "residual " + std::string(buf) + ")");
    }
  }

  // Screen: a non-adiabatic scenario whose candidate never models the heat
  // exchange at all.
  if (!adiabatic && !ast.equations.empty() && !any_heat_reference) {
    report.add(Category::kIncorrectEquation, ast.equations.front().span,
               "no heat-exchange term although the scenario is non-adiabatic");
  }
}

// ---------------------------------------------------------------------------
// Category 6: structural analysis by maximum matching
// ---------------------------------------------------------------------------

int maximum_matching(const std::vector<std::vector<int>>& adj, int n_cols) {
  std::vector<int> match_col(n_cols, -1);
  int matched = 0;
  std::vector<char> visited;
  std::function<bool(int)> augment = [&](int row) -> bool {
    for (const int c : adj[row]) {
      if (visited[c]) continue;
      visited[c] = 1;
      if (match_col[c] < 0 || augment(match_col[c])) {
        match_col[c] = row;
        return true;
      }
    }
    return false;
  };
  for (std::size_t r = 0; r < adj.size(); ++r) {
    visited.assign(n_cols, 0);
    if (augment(static_cast<int>(r))) ++matched;
  }
  return matched;
}

void check_structure(const ModelicaAST& ast, const SymbolTable& table,
                     ErrorReport& report) {
  if (!ast.has_equation_section && ast.equations.empty()) return;

  // Unknowns are the declared non-parameter variables; undeclared symbols
  // are category 4's problem and stay out of the incidence.
  std::vector<std::string> unknowns;
  std::map<std::string, int> column;
  for (const auto& d : ast.declarations) {
    const auto* info = table.find(d.name);
    if (!info || info->kind != frontend::SymbolInfo::Kind::kVariable) continue;
    if (column.count(d.name)) continue;
    column[d.name] = static_cast<int>(unknowns.size());
    unknowns.push_back(d.name);
  }

  std::vector<std::vector<int>> adj(ast.equations.size());
  for (std::size_t ei = 0; ei < ast.equations.size(); ++ei) {
    ex::SymbolUse use;
    ex::collect(ast.equations[ei].lhs, use);
    ex::collect(ast.equations[ei].rhs, use);
    std::set<int> cols;
    for (const auto& s : use.symbols) {
      const auto it = column.find(s);
      if (it != column.end()) cols.insert(it->second);
    }
    // der(x) and x share the state column; collect() already reports the
    // der argument among the plain symbols.
    adj[ei].assign(cols.begin(), cols.end());
  }

  const int n_eq = static_cast<int>(ast.equations.size());
  const int n_un = static_cast<int>(unknowns.size());
  const int matched = maximum_matching(adj, n_un);
  const int deficiency = std::max(n_eq, n_un) - matched;
  for (int k = 0; k < deficiency; ++k) {
    report.add(Category::kStructural,
               ast.equations.empty() ? expr::Span{1, 1, 1}
                                     : ast.equations.front().span,
               "structurally singular: " + std::to_string(n_eq) +
                   " equations, " + std::to_string(n_un) +
                   " unknowns, maximum matching " + std::to_string(matched));
  }
}

// ---------------------------------------------------------------------------
// Category 7: unit conflicts within equations
// ---------------------------------------------------------------------------

void check_units(const ModelicaAST& ast, const SymbolTable& table,
                 ErrorReport& report) {
  const auto& reg = units::UnitRegistry::instance();
  ua::UnitEnv env;
  bool any_concrete = false;
  for (const auto& [name, info] : table.symbols) {
    if (info.dimension.is_wildcard()) {
      units::Unit wild;
      wild.symbol = "*";
      wild.dimension = units::Dimension::wildcard();
      env[name] = wild;
    } else {
      env[name] = reg.si_unit(info.dimension);
      any_concrete = true;
    }
  }
  env["time"] = reg.get("s");

  for (const auto& eq : ast.equations) {
    const auto res = ua::check_equation_units(eq.lhs, eq.rhs, env);
    if (!res.ok && res.conflict) {
      const expr::Span span =
          res.conflict->span.valid() ? res.conflict->span : eq.span;
      report.add(Category::kUnitConflict, span, res.conflict->message);
    }
  }
  if (!any_concrete && !ast.declarations.empty())
    report.notes.push_back(
        "all declarations use generic Real types; unit checks have nothing "
        "to verify");
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

std::string extract_code_block(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string block;
  bool in_fence = false;
  bool found = false;
  while (std::getline(in, line)) {
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(" \t"));
    if (trimmed.rfind("```", 0) == 0) {
      if (in_fence) return block;  // closing fence
      in_fence = true;
      found = true;
      continue;
    }
    if (in_fence) block += line + "\n";
  }
  if (found) return block;  // unterminated fence: keep what was collected
  return text;
}

ErrorReport check(const std::string& source, const CheckContext& ctx) {
  ErrorReport report;
  const std::string code = extract_code_block(source);
  const auto ast = frontend::parse(code);
  for (const auto& d : ast.diagnostics) {
    report.add(d.zone == frontend::Diagnostic::Zone::kDeclaration
                   ? Category::kDeclarationSyntax
                   : Category::kGeneralSyntax,
               d.span, d.message);
  }
  const auto table = frontend::resolve(ast);
  for (const auto& d : table.diagnostics)
    report.add(Category::kDeclarationSyntax, d.span, d.message);
  for (const auto& n : table.notes) report.notes.push_back(n);

  check_parameter_values(ast, table, ctx, report);
  check_undefined_variables(ast, table, report);
  check_equations(ast, table, ctx, report);
  check_structure(ast, table, report);
  check_units(ast, table, report);
  return report;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

const char* kShortNames[8] = {"UnitConv", "DeclSyn", "IncValue", "UndefVar",
                              "IncEq",    "Struct",  "UnitConf", "Syntax"};

const char* category_name(Category c) {
  return kShortNames[static_cast<int>(c) - 1];
}

}  // namespace

std::string tabulate_text(
    const std::vector<std::pair<std::string, ErrorReport>>& reports) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-28s %-39s %-29s %-9s %s\n", "",
                "Parameter and variable declarations", "Physics equations",
                "General", "");
  os << buf;
  std::snprintf(buf, sizeof(buf),
                "%-28s %9s %9s %9s %9s %9s %9s %9s %9s %9s\n", "model",
                kShortNames[0], kShortNames[1], kShortNames[2], kShortNames[3],
                kShortNames[4], kShortNames[5], kShortNames[6], kShortNames[7],
                "Total");
  os << buf;
  os << std::string(128, '-') << "\n";
  std::array<long long, 8> totals{};
  for (const auto& [label, rep] : reports) {
    std::snprintf(buf, sizeof(buf),
                  "%-28s %9d %9d %9d %9d %9d %9d %9d %9d %9d\n", label.c_str(),
                  rep.counts[0], rep.counts[1], rep.counts[2], rep.counts[3],
                  rep.counts[4], rep.counts[5], rep.counts[6], rep.counts[7],
                  rep.total());
    os << buf;
    for (int i = 0; i < 8; ++i) totals[i] += rep.counts[i];
  }
  long long grand = 0;
  for (const long long t : totals) grand += t;
  std::snprintf(buf, sizeof(buf),
                "%-28s %9lld %9lld %9lld %9lld %9lld %9lld %9lld %9lld %9lld\n",
                "TOTAL", totals[0], totals[1], totals[2], totals[3], totals[4],
                totals[5], totals[6], totals[7], grand);
  os << buf;
  return os.str();
}

std::string tabulate_json(
    const std::vector<std::pair<std::string, ErrorReport>>& reports) {
  nlohmann::ordered_json j;
  j["columns"] = {"unit_conversion", "declaration_syntax", "incorrect_value",
                  "undefined_variable", "incorrect_equation", "structural",
                  "unit_conflict", "general_syntax"};
  j["groups"] = {{"declarations", {1, 2, 3, 4}},
                 {"equations", {5, 6, 7}},
                 {"general_syntax", {8}}};
  auto rows = nlohmann::ordered_json::array();
  std::array<long long, 8> totals{};
  for (const auto& [label, rep] : reports) {
    nlohmann::ordered_json row;
    row["label"] = label;
    row["counts"] = rep.counts;
    row["total"] = rep.total();
    rows.push_back(std::move(row));
    for (int i = 0; i < 8; ++i) totals[i] += rep.counts[i];
  }
  j["rows"] = std::move(rows);
  j["totals"] = totals;
  return j.dump(2);
}

std::string report_text(const std::string& label, const ErrorReport& report) {
  std::ostringstream os;
  os << label << ": " << report.total() << " finding(s)\n";
  for (const auto& f : report.findings) {
    os << "  [" << static_cast<int>(f.category) << " "
       << category_name(f.category) << "] " << f.span.line << ":" << f.span.col
       << ": " << f.explanation << "\n";
  }
  for (const auto& n : report.notes) os << "  note: " << n << "\n";
  return os.str();
}

std::string report_json(const std::string& label, const ErrorReport& report) {
  nlohmann::ordered_json j;
  j["label"] = label;
  j["counts"] = report.counts;
  j["total"] = report.total();
  auto findings = nlohmann::ordered_json::array();
  for (const auto& f : report.findings) {
    findings.push_back({{"category", static_cast<int>(f.category)},
                        {"name", category_name(f.category)},
                        {"line", f.span.line},
                        {"col", f.span.col},
                        {"explanation", f.explanation}});
  }
  j["findings"] = std::move(findings);
  j["notes"] = report.notes;
  return j.dump(2);
}

}  // namespace rxmod::checker
