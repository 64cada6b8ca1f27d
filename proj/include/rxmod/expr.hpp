#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace rxmod::expr {

// Source location of a node in parsed text. Synthetic (generated) trees
// carry line 0.
struct Span {
  int line = 0;
  int col = 0;
  int len = 0;
  bool valid() const { return line > 0; }
};

enum class Op {
  kNumber,
  kSymbol,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kPow,
  kNeg,
  kDer,
  kCall,
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  Op op;
  double number = 0.0;         // kNumber
  std::string name;            // kSymbol / kCall function name
  std::vector<ExprPtr> args;   // operands
  Span span;
};

// ---------------------------------------------------------------------------
// Builders. Numeric literals are kept non-negative; negate with neg().
// ---------------------------------------------------------------------------
ExprPtr num(double v);
ExprPtr sym(const std::string& name);
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr sub(ExprPtr a, ExprPtr b);
ExprPtr mul(ExprPtr a, ExprPtr b);
ExprPtr div(ExprPtr a, ExprPtr b);
ExprPtr pow(ExprPtr a, ExprPtr b);
ExprPtr neg(ExprPtr a);
ExprPtr der(ExprPtr a);
ExprPtr call(const std::string& fn, std::vector<ExprPtr> args);

// Sum of a list (empty list folds to 0).
ExprPtr sum(const std::vector<ExprPtr>& terms);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

// Canonical text form using Modelica operator precedence; printing a parsed
// tree and reparsing yields an equal tree.
std::string to_string(const ExprPtr& e);

// Deep structural equality (spans ignored).
bool equal(const ExprPtr& a, const ExprPtr& b);

struct SymbolUse {
  std::set<std::string> symbols;       // plain identifier leaves
  std::set<std::string> der_symbols;   // x for every der(x)
  std::set<std::string> functions;     // called function names
  bool der_of_non_symbol = false;
};

void collect(const ExprPtr& e, SymbolUse& out);

// Recursive evaluation with a symbol lookup. Returns nullopt when a symbol
// is unbound, a der() node is hit, or an unknown function appears.
std::optional<double> try_eval(
    const ExprPtr& e,
    const std::function<std::optional<double>(const std::string&)>& lookup);

// ---------------------------------------------------------------------------
// Compiled evaluation. Expressions are flattened to a postfix tape over a
// shared slot table so trajectory sweeps do not re-walk trees.
// ---------------------------------------------------------------------------
class SlotMap {
 public:
  int intern(const std::string& name);
  std::optional<int> find(const std::string& name) const;
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  // Conventional slot name for the derivative of a state.
  static std::string der_slot(const std::string& state) { return "der:" + state; }

 private:
  std::vector<std::string> names_;
};

class CompiledExpr {
 public:
  // Compiles against the slot map. When add_missing is false, unknown
  // symbols abort compilation and the offending name lands in *missing.
  static std::optional<CompiledExpr> compile(const ExprPtr& e, SlotMap& slots,
                                             bool add_missing,
                                             std::string* missing = nullptr);

  double eval(std::span<const double> slot_values) const;

 private:
  enum class K : unsigned char {
    kConst, kSlot, kAdd, kSub, kMul, kDiv, kPow, kNeg,
    kExp, kLog, kLog10, kSqrt, kSin, kCos, kTan, kAbs,
  };
  struct Ins {
    K k;
    int idx = 0;
    double c = 0.0;
  };
  std::vector<Ins> code_;
  int max_stack_ = 0;
};

}  // namespace rxmod::expr
