#include "rxmod/frontend.hpp"

#include <cctype>
#include <cstdlib>

namespace rxmod::frontend {

namespace ex = rxmod::expr;

std::string Diagnostic::format(const std::string& file) const {
  const char* zone_name = zone == Zone::kDeclaration ? "declaration" : "general";
  return file + ":" + std::to_string(span.line) + ":" + std::to_string(span.col) +
         ": " + zone_name + ": " + message;
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

namespace {

enum class Tok {
  kIdent,
  kKeyword,
  kNumber,
  kString,
  kComment,   // // line comment (block comments are skipped)
  kPunct,
  kEof,
};

struct Token {
  Tok kind = Tok::kEof;
  std::string text;
  double number = 0.0;
  int line = 1;
  int col = 1;

  expr::Span span() const {
    return {line, col, static_cast<int>(text.size())};
  }
  bool is(const char* p) const { return text == p; }
};

bool is_keyword(const std::string& s) {
  static const char* kw[] = {"model", "parameter", "equation", "end", "initial"};
  for (const char* k : kw)
    if (s == k) return true;
  return false;
}

struct Lexer {
  const std::string& src;
  std::size_t pos = 0;
  int line = 1;
  int col = 1;
  std::vector<Diagnostic>* diags;
  bool* seen_equation;  // zone tracking for stray-character diagnostics

  char peek(int off = 0) const {
    return pos + off < src.size() ? src[pos + off] : '\0';
  }
  void bump() {
    if (pos >= src.size()) return;
    if (src[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      Token t = next();
      const bool eof = t.kind == Tok::kEof;
      out.push_back(std::move(t));
      if (eof) break;
    }
    return out;
  }

  Token next() {
    while (pos < src.size()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        bump();
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        // Block comment; skipped, unterminated one reported.
        const int l = line, co = col;
        bump();
        bump();
        bool closed = false;
        while (pos < src.size()) {
          if (peek() == '*' && peek(1) == '/') {
            bump();
            bump();
            closed = true;
            break;
          }
          bump();
        }
        if (!closed)
          diags->push_back({*seen_equation ? Diagnostic::Zone::kGeneral
                                           : Diagnostic::Zone::kDeclaration,
                            {l, co, 2},
                            "unterminated block comment"});
        continue;
      }
      break;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (pos >= src.size()) {
      t.kind = Tok::kEof;
      return t;
    }
    const char c = peek();
    if (c == '/' && peek(1) == '/') {
      t.kind = Tok::kComment;
      while (pos < src.size() && peek() != '\n') {
        t.text += peek();
        bump();
      }
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos < src.size() &&
             (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
        t.text += peek();
        bump();
      }
      t.kind = is_keyword(t.text) ? Tok::kKeyword : Tok::kIdent;
      if (t.text == "equation") *seen_equation = true;
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
      bool saw_exp = false;
      while (pos < src.size()) {
        const char d = peek();
        if (std::isdigit(static_cast<unsigned char>(d)) || d == '.') {
          t.text += d;
          bump();
        } else if ((d == 'e' || d == 'E') && !saw_exp) {
          saw_exp = true;
          t.text += d;
          bump();
          if (peek() == '+' || peek() == '-') {
            t.text += peek();
            bump();
          }
        } else {
          break;
        }
      }
      t.kind = Tok::kNumber;
      t.number = std::strtod(t.text.c_str(), nullptr);
      return t;
    }
    if (c == '"') {
      bump();
      t.kind = Tok::kString;
      bool closed = false;
      while (pos < src.size()) {
        const char d = peek();
        if (d == '\\' && pos + 1 < src.size()) {
          const char n = peek(1);
          t.text += (n == 'n') ? '\n' : (n == 't') ? '\t' : n;
          bump();
          bump();
          continue;
        }
        if (d == '"') {
          bump();
          closed = true;
          break;
        }
        t.text += d;
        bump();
      }
      if (!closed)
        diags->push_back({*seen_equation ? Diagnostic::Zone::kGeneral
                                         : Diagnostic::Zone::kDeclaration,
                          {t.line, t.col, 1},
                          "unterminated string"});
      return t;
    }
    static const std::string punct = "()=;,+-*/^<>[]{}:";
    if (punct.find(c) != std::string::npos) {
      t.kind = Tok::kPunct;
      t.text = std::string(1, c);
      bump();
      return t;
    }
    // Unknown byte: report once and skip.
    diags->push_back({*seen_equation ? Diagnostic::Zone::kGeneral
                                     : Diagnostic::Zone::kDeclaration,
                      {t.line, t.col, 1},
                      std::string("unexpected character '") + c + "'"});
    bump();
    return next();
  }
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct ParseFail {};  // internal statement-level recovery signal

struct Parser {
  std::vector<Token> toks;
  std::size_t i = 0;
  ModelicaAST* ast;
  bool in_equation_zone = false;

  const Token& cur() const { return toks[i]; }
  const Token& ahead(std::size_t k = 1) const {
    return toks[std::min(i + k, toks.size() - 1)];
  }
  bool at_eof() const { return cur().kind == Tok::kEof; }

  void advance() {
    if (!at_eof()) ++i;
    skip_comments();
  }
  void skip_comments() {
    while (cur().kind == Tok::kComment) ++i;
  }

  void diag(const expr::Span& span, const std::string& msg) {
    ast->diagnostics.push_back({in_equation_zone ? Diagnostic::Zone::kGeneral
                                                 : Diagnostic::Zone::kDeclaration,
                                span, msg});
  }

  [[noreturn]] void fail(const std::string& msg) {
    diag(cur().span(), msg);
    throw ParseFail{};
  }

  bool accept_punct(const char* p) {
    if (cur().kind == Tok::kPunct && cur().is(p)) {
      advance();
      return true;
    }
    return false;
  }
  void expect_punct(const char* p) {
    if (!accept_punct(p)) fail(std::string("expected '") + p + "'");
  }
  bool accept_keyword(const char* k) {
    if (cur().kind == Tok::kKeyword && cur().is(k)) {
      advance();
      return true;
    }
    return false;
  }

  // Skip to just after the next ';', stopping before 'equation'/'end'.
  void resync() {
    while (!at_eof()) {
      if (cur().kind == Tok::kKeyword &&
          (cur().is("equation") || cur().is("end")))
        return;
      if (cur().kind == Tok::kPunct && cur().is(";")) {
        ++i;  // keep a trailing comment from being eaten by advance()
        skip_line_comment_same_line(toks[i - 1].line);
        skip_comments();
        return;
      }
      ++i;
    }
  }

  void skip_line_comment_same_line(int line) {
    if (cur().kind == Tok::kComment && cur().line == line) ++i;
  }

  // Trailing comment handling for the canonical one-line form:
  // consumes ';' plus an optional same-line // comment.
  std::pair<std::string, bool> finish_statement(std::string string_comment,
                                                bool have_string) {
    skip_comments();
    if (!(cur().kind == Tok::kPunct && cur().is(";"))) fail("expected ';'");
    const int line = cur().line;
    ++i;
    if (cur().kind == Tok::kComment && cur().line == line) {
      std::string text = cur().text;
      ++i;
      skip_comments();
      text.erase(0, text.rfind("//", 0) == 0 ? 2 : 0);
      if (!text.empty() && text[0] == ' ') text.erase(0, 1);
      return {text, false};
    }
    skip_comments();
    return {string_comment, have_string};
  }

  // ---- expressions -------------------------------------------------------

  ex::ExprPtr parse_expression() {
    // [+|-] term { (+|-) term }
    bool negate = false;
    expr::Span lead = cur().span();
    if (cur().kind == Tok::kPunct && (cur().is("-") || cur().is("+"))) {
      negate = cur().is("-");
      advance();
    }
    ex::ExprPtr acc = parse_term();
    if (negate) {
      auto n = ex::neg(acc);
      const_cast<ex::Expr*>(n.get())->span = lead;
      acc = n;
    }
    while (cur().kind == Tok::kPunct && (cur().is("+") || cur().is("-"))) {
      const bool plus = cur().is("+");
      const expr::Span sp = cur().span();
      advance();
      ex::ExprPtr rhs = parse_term();
      auto node = plus ? ex::add(acc, rhs) : ex::sub(acc, rhs);
      const_cast<ex::Expr*>(node.get())->span = sp;
      acc = node;
    }
    return acc;
  }

  ex::ExprPtr parse_term() {
    ex::ExprPtr acc = parse_factor();
    while (cur().kind == Tok::kPunct && (cur().is("*") || cur().is("/"))) {
      const bool star = cur().is("*");
      const expr::Span sp = cur().span();
      advance();
      ex::ExprPtr rhs = parse_factor();
      auto node = star ? ex::mul(acc, rhs) : ex::div(acc, rhs);
      const_cast<ex::Expr*>(node.get())->span = sp;
      acc = node;
    }
    return acc;
  }

  ex::ExprPtr parse_factor() {
    ex::ExprPtr base = parse_primary();
    if (cur().kind == Tok::kPunct && cur().is("^")) {
      const expr::Span sp = cur().span();
      advance();
      ex::ExprPtr exp = parse_primary();
      auto node = ex::pow(base, exp);
      const_cast<ex::Expr*>(node.get())->span = sp;
      return node;
    }
    return base;
  }

  ex::ExprPtr parse_primary() {
    const Token& t = cur();
    if (t.kind == Tok::kNumber) {
      auto n = ex::num(t.number);
      const_cast<ex::Expr*>(n.get())->span = t.span();
      advance();
      return n;
    }
    if (t.kind == Tok::kIdent) {
      const std::string name = t.text;
      const expr::Span sp = t.span();
      advance();
      if (cur().kind == Tok::kPunct && cur().is("(")) {
        advance();
        std::vector<ex::ExprPtr> args;
        if (!(cur().kind == Tok::kPunct && cur().is(")"))) {
          args.push_back(parse_expression());
          while (accept_punct(",")) args.push_back(parse_expression());
        }
        expect_punct(")");
        ex::ExprPtr node;
        if (name == "der") {
          if (args.size() != 1) fail("der() takes exactly one argument");
          node = ex::der(args[0]);
        } else {
          node = ex::call(name, std::move(args));
        }
        const_cast<ex::Expr*>(node.get())->span = sp;
        return node;
      }
      auto s = ex::sym(name);
      const_cast<ex::Expr*>(s.get())->span = sp;
      return s;
    }
    if (t.kind == Tok::kPunct && t.is("(")) {
      advance();
      ex::ExprPtr inner = parse_expression();
      expect_punct(")");
      return inner;
    }
    fail("expected expression");
  }

  // ---- statements --------------------------------------------------------

  void parse_declaration() {
    Declaration d;
    d.span = cur().span();
    if (accept_keyword("parameter")) d.is_parameter = true;
    if (cur().kind != Tok::kIdent) fail("expected type name");
    d.type_name = cur().text;
    advance();
    if (cur().kind != Tok::kIdent) fail("expected identifier after type name");
    d.name = cur().text;
    advance();
    if (accept_punct("(")) {
      // modifier list: name = expr {, name = expr}
      do {
        if (cur().kind != Tok::kIdent) fail("expected modifier name");
        const std::string mname = cur().text;
        advance();
        expect_punct("=");
        ex::ExprPtr mval;
        if (cur().kind == Tok::kString) {
          // String-valued modifiers (e.g. unit="...") are carried verbatim
          // as quoted symbols so printing round-trips.
          mval = ex::sym("\"" + cur().text + "\"");
          advance();
        } else {
          mval = parse_expression();
        }
        d.modifiers.emplace_back(mname, mval);
      } while (accept_punct(","));
      expect_punct(")");
    }
    if (accept_punct("=")) d.value = parse_expression();
    bool have_string = false;
    std::string str_comment;
    if (cur().kind == Tok::kString) {
      have_string = true;
      str_comment = cur().text;
      advance();
    }
    auto [comment, is_string] = finish_statement(str_comment, have_string);
    d.comment = comment;
    d.string_comment = is_string;
    ast->declarations.push_back(std::move(d));
  }

  void parse_equation_stmt() {
    ParsedEquation eq;
    eq.span = cur().span();
    eq.lhs = parse_expression();
    expect_punct("=");
    eq.rhs = parse_expression();
    bool have_string = false;
    std::string str_comment;
    if (cur().kind == Tok::kString) {
      have_string = true;
      str_comment = cur().text;
      advance();
    }
    auto [comment, is_string] = finish_statement(str_comment, have_string);
    eq.comment = comment;
    eq.string_comment = is_string;
    ast->equations.push_back(std::move(eq));
  }

  void run() {
    skip_comments();
    // model header
    if (accept_keyword("model")) {
      if (cur().kind == Tok::kIdent) {
        ast->model_name = cur().text;
        advance();
        if (cur().kind == Tok::kString) advance();  // class description string
        accept_punct(";");
      } else {
        diag(cur().span(), "expected model name after 'model'");
      }
    } else if (!at_eof()) {
      diag(cur().span(), "expected 'model' at start of input");
    }

    // declaration zone
    while (!at_eof()) {
      if (cur().kind == Tok::kKeyword && cur().is("equation")) break;
      if (cur().kind == Tok::kKeyword && cur().is("end")) break;
      if (cur().kind == Tok::kKeyword && cur().is("initial")) {
        // Pseudo-declaration in the style "initial cA = cA0;" instead of the
        // start-value modifier convention.
        diag(cur().span(),
             "'initial' is not a declaration; use the (start=...) modifier");
        advance();
        resync();
        continue;
      }
      try {
        parse_declaration();
      } catch (const ParseFail&) {
        resync();
      }
    }

    // equation zone
    if (accept_keyword("equation")) {
      ast->has_equation_section = true;
      in_equation_zone = true;
      while (!at_eof()) {
        if (cur().kind == Tok::kKeyword && cur().is("end")) break;
        if (cur().kind == Tok::kKeyword) {
          diag(cur().span(), "unexpected keyword '" + cur().text +
                                 "' in equation section");
          advance();
          resync();
          continue;
        }
        try {
          parse_equation_stmt();
        } catch (const ParseFail&) {
          resync();
        }
      }
    }
    in_equation_zone = true;  // anything after this point is general zone

    if (accept_keyword("end")) {
      ast->has_end = true;
      if (cur().kind == Tok::kIdent || cur().kind == Tok::kKeyword) {
        ast->end_name = cur().text;
        advance();
      }
      if (!accept_punct(";"))
        diag(cur().span(), "expected ';' after 'end " + ast->end_name + "'");
      if (!ast->end_name.empty() && !ast->model_name.empty() &&
          ast->end_name != ast->model_name)
        diag(cur().span(), "'end " + ast->end_name + "' does not match model '" +
                               ast->model_name + "'");
    } else {
      const Token& t = cur();
      ast->diagnostics.push_back({Diagnostic::Zone::kGeneral,
                                  {t.line, t.col, 1},
                                  "missing 'end " + ast->model_name + ";'"});
    }

    // trailing garbage
    if (!at_eof())
      diag(cur().span(), "unexpected trailing content after 'end'");
  }
};

}  // namespace

ModelicaAST parse(const std::string& source) {
  ModelicaAST ast;
  bool seen_equation = false;
  Lexer lex{source, 0, 1, 1, &ast.diagnostics, &seen_equation};
  Parser p;
  p.toks = lex.run();
  p.ast = &ast;
  p.run();
  return ast;
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

std::string print(const ModelicaAST& ast) {
  std::string out;
  out += "model " + ast.model_name + "\n";
  for (const auto& d : ast.declarations) {
    out += "  ";
    if (d.is_parameter) out += "parameter ";
    out += d.type_name + " " + d.name;
    if (!d.modifiers.empty()) {
      out += "(";
      for (std::size_t k = 0; k < d.modifiers.size(); ++k) {
        if (k) out += ", ";
        out += d.modifiers[k].first + "=" + ex::to_string(d.modifiers[k].second);
      }
      out += ")";
    }
    if (d.value) out += " = " + ex::to_string(d.value);
    if (d.string_comment && !d.comment.empty()) {
      out += " \"" + d.comment + "\";\n";
    } else if (!d.comment.empty()) {
      out += "; // " + d.comment + "\n";
    } else {
      out += ";\n";
    }
  }
  if (ast.has_equation_section || !ast.equations.empty()) out += "equation\n";
  for (const auto& eq : ast.equations) {
    out += "  " + ex::to_string(eq.lhs) + " = " + ex::to_string(eq.rhs);
    if (eq.string_comment && !eq.comment.empty()) {
      out += " \"" + eq.comment + "\";\n";
    } else if (!eq.comment.empty()) {
      out += "; // " + eq.comment + "\n";
    } else {
      out += ";\n";
    }
  }
  out += "end " + (ast.end_name.empty() ? ast.model_name : ast.end_name) + ";\n";
  return out;
}

bool ast_equal(const ModelicaAST& a, const ModelicaAST& b) {
  if (a.model_name != b.model_name) return false;
  if (a.declarations.size() != b.declarations.size()) return false;
  if (a.equations.size() != b.equations.size()) return false;
  for (std::size_t i = 0; i < a.declarations.size(); ++i) {
    const auto& x = a.declarations[i];
    const auto& y = b.declarations[i];
    if (x.is_parameter != y.is_parameter || x.type_name != y.type_name ||
        x.name != y.name || x.comment != y.comment ||
        x.string_comment != y.string_comment)
      return false;
    if ((x.value == nullptr) != (y.value == nullptr)) return false;
    if (x.value && !ex::equal(x.value, y.value)) return false;
    if (x.modifiers.size() != y.modifiers.size()) return false;
    for (std::size_t k = 0; k < x.modifiers.size(); ++k) {
      if (x.modifiers[k].first != y.modifiers[k].first) return false;
      if (!ex::equal(x.modifiers[k].second, y.modifiers[k].second)) return false;
    }
  }
  for (std::size_t i = 0; i < a.equations.size(); ++i) {
    const auto& x = a.equations[i];
    const auto& y = b.equations[i];
    if (!ex::equal(x.lhs, y.lhs) || !ex::equal(x.rhs, y.rhs)) return false;
    if (x.comment != y.comment || x.string_comment != y.string_comment)
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Symbol table
// ---------------------------------------------------------------------------

const std::map<std::string, units::Unit>& builtin_types() {
  static const std::map<std::string, units::Unit> table = [] {
    const auto& reg = units::UnitRegistry::instance();
    std::map<std::string, units::Unit> t;
    t["Concentration"] = reg.get("mol/m3");
    t["Density"] = reg.get("kg/m3");
    t["Temperature"] = reg.get("K");
    t["Volume"] = reg.get("m3");
    t["VolumeFlowRate"] = reg.get("m3/s");
    t["SpecificHeatCapacity"] = reg.get("J/(kg.K)");
    t["MolarEnthalpy"] = reg.get("J/mol");
    t["HeatFlowRate"] = reg.get("W");
    t["Mass"] = reg.get("kg");
    t["MolarMass"] = reg.get("kg/mol");
    t["Time"] = reg.get("s");
    t["ThermalConductance"] = reg.get("W/K");
    t["Pressure"] = reg.get("Pa");
    t["Energy"] = reg.get("J");
    t["Power"] = reg.get("W");
    units::Unit wildcard;
    wildcard.symbol = "*";
    wildcard.dimension = units::Dimension::wildcard();
    t["Real"] = wildcard;
    return t;
  }();
  return table;
}

SymbolTable resolve(const ModelicaAST& ast) {
  SymbolTable table;
  const auto& types = builtin_types();
  for (std::size_t i = 0; i < ast.declarations.size(); ++i) {
    const auto& d = ast.declarations[i];
    if (table.symbols.count(d.name)) {
      table.diagnostics.push_back(
          {Diagnostic::Zone::kDeclaration, d.span,
           "duplicate declaration of '" + d.name + "' (first wins)"});
      continue;
    }
    SymbolInfo info;
    info.kind = d.is_parameter ? SymbolInfo::Kind::kParameter
                               : SymbolInfo::Kind::kVariable;
    info.type_name = d.type_name;
    info.declaration_index = static_cast<int>(i);
    const auto it = types.find(d.type_name);
    if (it != types.end()) {
      info.dimension = it->second.dimension;
    } else {
      info.dimension = units::Dimension::wildcard();
      table.notes.push_back("unknown type '" + d.type_name + "' for '" +
                            d.name + "' treated as Real");
    }
    table.symbols.emplace(d.name, std::move(info));
  }
  // Constant-fold parameter values in declaration order; only the winning
  // declaration of a duplicated name contributes.
  for (std::size_t i = 0; i < ast.declarations.size(); ++i) {
    const auto& d = ast.declarations[i];
    if (!d.value) continue;
    auto it = table.symbols.find(d.name);
    if (it == table.symbols.end() ||
        it->second.declaration_index != static_cast<int>(i))
      continue;
    auto lookup = [&](const std::string& name) -> std::optional<double> {
      const auto sit = table.symbols.find(name);
      if (sit == table.symbols.end()) return std::nullopt;
      return sit->second.value;
    };
    it->second.value = ex::try_eval(d.value, lookup);
  }
  return table;
}

}  // namespace rxmod::frontend
