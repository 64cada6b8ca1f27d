#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rxmod/frontend.hpp"
#include "rxmod/physics.hpp"
#include "rxmod/scenario.hpp"
#include "rxmod/simulate.hpp"

namespace rxmod::checker {

// The eight error categories, numbered as in the evaluation scheme:
// declarations (1-4), equations (5-7), general syntax (8).
enum class Category : int {
  kUnitConversion = 1,
  kDeclarationSyntax = 2,
  kIncorrectValue = 3,
  kUndefinedVariable = 4,
  kIncorrectEquation = 5,
  kStructural = 6,
  kUnitConflict = 7,
  kGeneralSyntax = 8,
};

struct Finding {
  Category category;
  expr::Span span;
  std::string explanation;
};

struct ErrorReport {
  std::array<int, 8> counts{};
  std::vector<Finding> findings;
  std::vector<std::string> notes;  // informational only, never counted

  int count(Category c) const { return counts[static_cast<int>(c) - 1]; }
  int total() const {
    int t = 0;
    for (int c : counts) t += c;
    return t;
  }
  void add(Category c, const expr::Span& span, const std::string& why) {
    counts[static_cast<int>(c) - 1]++;
    findings.push_back({c, span, why});
  }
};

struct Tolerances {
  double value_rtol = 1e-6;    // declared-value comparison
  double equation_tol = 1e-4;  // normalized trajectory residual threshold
  int trajectory_samples = 50;
};

// Everything needed to score candidates against one scenario. For
// under-specified scenarios (omission case) the reference system and
// trajectory are absent and the equation oracle degrades to mode screens.
struct CheckContext {
  scenario::ReactorScenario scenario;
  std::optional<physics::EquationSystem> reference;
  std::optional<sim::Trajectory> trajectory;
  Tolerances tolerances;

  // Prompt-given quantities keyed by canonical identifier (parameters plus
  // rate constants).
  std::map<std::string, units::Quantity> expected;

  static CheckContext build(const scenario::ReactorScenario& s,
                            const Tolerances& tol = {});
};

// Full check: parse diagnostics land in categories 2/8, then the six
// semantic sub-checks run over the AST. Never throws on candidate content.
ErrorReport check(const std::string& source, const CheckContext& ctx);

// ---------------------------------------------------------------------------
// Sub-checks (exposed for targeted tests).
// ---------------------------------------------------------------------------
void check_parameter_values(const frontend::ModelicaAST& ast,
                            const frontend::SymbolTable& table,
                            const CheckContext& ctx, ErrorReport& report);
void check_undefined_variables(const frontend::ModelicaAST& ast,
                               const frontend::SymbolTable& table,
                               ErrorReport& report);
void check_equations(const frontend::ModelicaAST& ast,
                     const frontend::SymbolTable& table,
                     const CheckContext& ctx, ErrorReport& report);
void check_structure(const frontend::ModelicaAST& ast,
                     const frontend::SymbolTable& table, ErrorReport& report);
void check_units(const frontend::ModelicaAST& ast,
                 const frontend::SymbolTable& table, ErrorReport& report);

// Maximum bipartite matching via augmenting paths; adj[i] lists the columns
// incident to row i.
int maximum_matching(const std::vector<std::vector<int>>& adj, int n_cols);

// First fenced code block if present, else the whole text.
std::string extract_code_block(const std::string& text);

// ---------------------------------------------------------------------------
// Aggregate table in the standard layout: four declaration categories,
// three equation categories, general syntax, plus a totals line.
// ---------------------------------------------------------------------------
std::string tabulate_text(
    const std::vector<std::pair<std::string, ErrorReport>>& reports);
std::string tabulate_json(
    const std::vector<std::pair<std::string, ErrorReport>>& reports);

// Per-candidate evidence report.
std::string report_text(const std::string& label, const ErrorReport& report);
std::string report_json(const std::string& label, const ErrorReport& report);

}  // namespace rxmod::checker
