#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rxmod/expr.hpp"
#include "rxmod/units.hpp"

namespace rxmod::frontend {

// Diagnostics are classified at parse time only by zone; semantic
// categorization happens in the checker.
struct Diagnostic {
  enum class Zone { kDeclaration, kGeneral };
  Zone zone = Zone::kGeneral;
  expr::Span span;
  std::string message;

  std::string format(const std::string& file = "<input>") const;
};

struct Declaration {
  bool is_parameter = false;
  std::string type_name;
  std::string name;
  expr::ExprPtr value;  // may be null
  std::vector<std::pair<std::string, expr::ExprPtr>> modifiers;  // parsed order
  std::string comment;
  bool string_comment = false;  // "..." form instead of a trailing // comment
  expr::Span span;

  expr::ExprPtr start() const {
    for (const auto& [k, v] : modifiers)
      if (k == "start") return v;
    return nullptr;
  }
};

struct ParsedEquation {
  expr::ExprPtr lhs;
  expr::ExprPtr rhs;
  std::string comment;
  bool string_comment = false;
  expr::Span span;
};

// Best-effort AST: produced even for erroneous input, with recovery nodes
// simply skipped and reported through diagnostics.
struct ModelicaAST {
  std::string model_name;
  std::string end_name;
  std::vector<Declaration> declarations;
  std::vector<ParsedEquation> equations;
  std::vector<Diagnostic> diagnostics;
  bool has_equation_section = false;
  bool has_end = false;
};

// Never throws; arbitrary bytes produce diagnostics, not crashes. Recovery
// resynchronizes at ';', 'equation' and 'end'.
ModelicaAST parse(const std::string& source);

// Canonical pretty-printer; parsing its output reproduces an equal AST, and
// the corpus generator emits models through this same path.
std::string print(const ModelicaAST& ast);

// Structural equality ignoring spans and diagnostics.
bool ast_equal(const ModelicaAST& a, const ModelicaAST& b);

struct SymbolInfo {
  enum class Kind { kParameter, kVariable };
  Kind kind = Kind::kVariable;
  std::string type_name;
  units::Dimension dimension;   // wildcard for Real and unknown types
  std::optional<double> value;  // constant-folded parameter value
  int declaration_index = -1;
};

struct SymbolTable {
  std::map<std::string, SymbolInfo> symbols;
  std::vector<Diagnostic> diagnostics;  // duplicate declarations
  std::vector<std::string> notes;       // unknown type names etc.

  const SymbolInfo* find(const std::string& name) const {
    const auto it = symbols.find(name);
    return it == symbols.end() ? nullptr : &it->second;
  }
};

// Builds the symbol table over successfully parsed declarations; built-in
// physical types map to their SI dimensions, unknown type names to wildcard
// with an informational note. Never throws.
SymbolTable resolve(const ModelicaAST& ast);

// Built-in physical type table shared with the unit registry.
const std::map<std::string, units::Unit>& builtin_types();

}  // namespace rxmod::frontend
