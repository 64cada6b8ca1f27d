#include "rxmod/expr.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace rxmod::expr {

namespace {

ExprPtr make(Op op) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  return e;
}

ExprPtr make2(Op op, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->op = op;
  e->args = {std::move(a), std::move(b)};
  return e;
}

}  // namespace

ExprPtr num(double v) {
  auto e = std::make_shared<Expr>();
  e->op = Op::kNumber;
  e->number = v;
  return e;
}

ExprPtr sym(const std::string& name) {
  auto e = std::make_shared<Expr>();
  e->op = Op::kSymbol;
  e->name = name;
  return e;
}

ExprPtr add(ExprPtr a, ExprPtr b) { return make2(Op::kAdd, std::move(a), std::move(b)); }
ExprPtr sub(ExprPtr a, ExprPtr b) { return make2(Op::kSub, std::move(a), std::move(b)); }
ExprPtr mul(ExprPtr a, ExprPtr b) { return make2(Op::kMul, std::move(a), std::move(b)); }
ExprPtr div(ExprPtr a, ExprPtr b) { return make2(Op::kDiv, std::move(a), std::move(b)); }
ExprPtr pow(ExprPtr a, ExprPtr b) { return make2(Op::kPow, std::move(a), std::move(b)); }

ExprPtr neg(ExprPtr a) {
  auto e = make(Op::kNeg);
  const_cast<Expr*>(e.get())->args = {std::move(a)};
  return e;
}

ExprPtr der(ExprPtr a) {
  auto e = make(Op::kDer);
  const_cast<Expr*>(e.get())->args = {std::move(a)};
  return e;
}

ExprPtr call(const std::string& fn, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->op = Op::kCall;
  e->name = fn;
  e->args = std::move(args);
  return e;
}

ExprPtr sum(const std::vector<ExprPtr>& terms) {
  if (terms.empty()) return num(0.0);
  ExprPtr acc = terms[0];
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

// Precedence levels matching the Modelica expression grammar: unary minus
// sits at the additive level, so -a*b means -(a*b).
int precedence(const Expr& e) {
  switch (e.op) {
    case Op::kAdd:
    case Op::kSub:
    case Op::kNeg:
      return 1;
    case Op::kMul:
    case Op::kDiv:
      return 2;
    case Op::kPow:
      return 3;
    default:
      return 4;
  }
}

void print(const ExprPtr& e, int min_prec, std::string& out) {
  const int prec = precedence(*e);
  const bool parens = prec < min_prec;
  if (parens) out += "(";
  switch (e->op) {
    case Op::kNumber:
      out += format_double(e->number);
      break;
    case Op::kSymbol:
      out += e->name;
      break;
    case Op::kAdd:
      print(e->args[0], 1, out);
      out += " + ";
      print(e->args[1], 2, out);
      break;
    case Op::kSub:
      print(e->args[0], 1, out);
      out += " - ";
      print(e->args[1], 2, out);
      break;
    case Op::kMul:
      print(e->args[0], 2, out);
      out += "*";
      print(e->args[1], 3, out);
      break;
    case Op::kDiv:
      print(e->args[0], 2, out);
      out += "/";
      print(e->args[1], 3, out);
      break;
    case Op::kPow:
      print(e->args[0], 4, out);
      out += "^";
      print(e->args[1], 4, out);
      break;
    case Op::kNeg:
      out += "-";
      print(e->args[0], 2, out);
      break;
    case Op::kDer:
      out += "der(";
      print(e->args[0], 0, out);
      out += ")";
      break;
    case Op::kCall:
      out += e->name;
      out += "(";
      for (std::size_t i = 0; i < e->args.size(); ++i) {
        if (i) out += ", ";
        print(e->args[i], 0, out);
      }
      out += ")";
      break;
  }
  if (parens) out += ")";
}

}  // namespace

std::string to_string(const ExprPtr& e) {
  std::string out;
  print(e, 0, out);
  return out;
}

bool equal(const ExprPtr& a, const ExprPtr& b) {
  if (a->op != b->op) return false;
  switch (a->op) {
    case Op::kNumber:
      return a->number == b->number;
    case Op::kSymbol:
      return a->name == b->name;
    case Op::kCall:
      if (a->name != b->name) return false;
      break;
    default:
      break;
  }
  if (a->args.size() != b->args.size()) return false;
  for (std::size_t i = 0; i < a->args.size(); ++i)
    if (!equal(a->args[i], b->args[i])) return false;
  return true;
}

void collect(const ExprPtr& e, SymbolUse& out) {
  switch (e->op) {
    case Op::kSymbol:
      out.symbols.insert(e->name);
      return;
    case Op::kDer:
      if (e->args[0]->op == Op::kSymbol)
        out.der_symbols.insert(e->args[0]->name);
      else
        out.der_of_non_symbol = true;
      // Fall through to walk the argument so der(expr) still reports leaves.
      break;
    case Op::kCall:
      out.functions.insert(e->name);
      break;
    default:
      break;
  }
  for (const auto& a : e->args) collect(a, out);
}

std::optional<double> try_eval(
    const ExprPtr& e,
    const std::function<std::optional<double>(const std::string&)>& lookup) {
  switch (e->op) {
    case Op::kNumber:
      return e->number;
    case Op::kSymbol:
      return lookup(e->name);
    case Op::kDer:
      return std::nullopt;
    case Op::kNeg: {
      auto v = try_eval(e->args[0], lookup);
      if (!v) return std::nullopt;
      return -*v;
    }
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv:
    case Op::kPow: {
      auto a = try_eval(e->args[0], lookup);
      auto b = try_eval(e->args[1], lookup);
      if (!a || !b) return std::nullopt;
      switch (e->op) {
        case Op::kAdd: return *a + *b;
        case Op::kSub: return *a - *b;
        case Op::kMul: return *a * *b;
        case Op::kDiv: return *a / *b;
        default: return std::pow(*a, *b);
      }
    }
    case Op::kCall: {
      if (e->args.size() != 1) return std::nullopt;
      auto v = try_eval(e->args[0], lookup);
      if (!v) return std::nullopt;
      const std::string& fn = e->name;
      if (fn == "exp") return std::exp(*v);
      if (fn == "log") return std::log(*v);
      if (fn == "log10") return std::log10(*v);
      if (fn == "sqrt") return std::sqrt(*v);
      if (fn == "sin") return std::sin(*v);
      if (fn == "cos") return std::cos(*v);
      if (fn == "tan") return std::tan(*v);
      if (fn == "abs") return std::fabs(*v);
      return std::nullopt;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Compiled evaluation
// ---------------------------------------------------------------------------

int SlotMap::intern(const std::string& name) {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  names_.push_back(name);
  return static_cast<int>(names_.size() - 1);
}

std::optional<int> SlotMap::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return std::nullopt;
}

namespace {

struct CompileCtx {
  SlotMap* slots;
  bool add_missing;
  std::string* missing;
  bool failed = false;
};

}  // namespace

std::optional<CompiledExpr> CompiledExpr::compile(const ExprPtr& e, SlotMap& slots,
                                                  bool add_missing,
                                                  std::string* missing) {
  CompiledExpr out;
  int depth = 0;
  bool ok = true;

  std::function<void(const ExprPtr&)> emit = [&](const ExprPtr& n) {
    if (!ok) return;
    auto push = [&](K k, int idx = 0, double c = 0.0) {
      out.code_.push_back({k, idx, c});
    };
    auto slot_for = [&](const std::string& name) -> std::optional<int> {
      if (add_missing) return slots.intern(name);
      auto idx = slots.find(name);
      if (!idx && missing && missing->empty()) *missing = name;
      return idx;
    };
    switch (n->op) {
      case Op::kNumber:
        push(K::kConst, 0, n->number);
        ++depth;
        out.max_stack_ = std::max(out.max_stack_, depth);
        return;
      case Op::kSymbol: {
        auto idx = slot_for(n->name);
        if (!idx) { ok = false; return; }
        push(K::kSlot, *idx);
        ++depth;
        out.max_stack_ = std::max(out.max_stack_, depth);
        return;
      }
      case Op::kDer: {
        if (n->args[0]->op != Op::kSymbol) {
          if (missing && missing->empty()) *missing = "der(<expr>)";
          ok = false;
          return;
        }
        auto idx = slot_for(SlotMap::der_slot(n->args[0]->name));
        if (!idx) { ok = false; return; }
        push(K::kSlot, *idx);
        ++depth;
        out.max_stack_ = std::max(out.max_stack_, depth);
        return;
      }
      case Op::kNeg:
        emit(n->args[0]);
        push(K::kNeg);
        return;
      case Op::kAdd:
      case Op::kSub:
      case Op::kMul:
      case Op::kDiv:
      case Op::kPow:
        emit(n->args[0]);
        emit(n->args[1]);
        if (!ok) return;
        switch (n->op) {
          case Op::kAdd: push(K::kAdd); break;
          case Op::kSub: push(K::kSub); break;
          case Op::kMul: push(K::kMul); break;
          case Op::kDiv: push(K::kDiv); break;
          default: push(K::kPow); break;
        }
        --depth;
        return;
      case Op::kCall: {
        static const struct { const char* name; K k; } kFns[] = {
            {"exp", K::kExp}, {"log", K::kLog}, {"log10", K::kLog10},
            {"sqrt", K::kSqrt}, {"sin", K::kSin}, {"cos", K::kCos},
            {"tan", K::kTan}, {"abs", K::kAbs},
        };
        const K* hit = nullptr;
        for (const auto& f : kFns)
          if (n->name == f.name) { hit = &f.k; break; }
        if (!hit || n->args.size() != 1) {
          if (missing && missing->empty()) *missing = n->name + "()";
          ok = false;
          return;
        }
        emit(n->args[0]);
        if (!ok) return;
        out.code_.push_back({*hit, 0, 0.0});
        return;
      }
    }
  };

  emit(e);
  if (!ok) return std::nullopt;
  return out;
}

double CompiledExpr::eval(std::span<const double> slot_values) const {
  double stack[64];
  double* heap = nullptr;
  double* sp = stack;
  if (max_stack_ > 64) {
    heap = new double[max_stack_];
    sp = heap;
  }
  int top = -1;
  for (const auto& ins : code_) {
    switch (ins.k) {
      case K::kConst: sp[++top] = ins.c; break;
      case K::kSlot: sp[++top] = slot_values[ins.idx]; break;
      case K::kAdd: --top; sp[top] = sp[top] + sp[top + 1]; break;
      case K::kSub: --top; sp[top] = sp[top] - sp[top + 1]; break;
      case K::kMul: --top; sp[top] = sp[top] * sp[top + 1]; break;
      case K::kDiv: --top; sp[top] = sp[top] / sp[top + 1]; break;
      case K::kPow: --top; sp[top] = std::pow(sp[top], sp[top + 1]); break;
      case K::kNeg: sp[top] = -sp[top]; break;
      case K::kExp: sp[top] = std::exp(sp[top]); break;
      case K::kLog: sp[top] = std::log(sp[top]); break;
      case K::kLog10: sp[top] = std::log10(sp[top]); break;
      case K::kSqrt: sp[top] = std::sqrt(sp[top]); break;
      case K::kSin: sp[top] = std::sin(sp[top]); break;
      case K::kCos: sp[top] = std::cos(sp[top]); break;
      case K::kTan: sp[top] = std::tan(sp[top]); break;
      case K::kAbs: sp[top] = std::fabs(sp[top]); break;
    }
  }
  const double result = sp[top];
  delete[] heap;
  return result;
}

}  // namespace rxmod::expr
