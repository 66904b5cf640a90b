#include "fcdl/parser.hpp"

#include <cctype>

namespace fcdl {

namespace {

enum class Tok { Ident, UIdent, String, LParen, RParen, Comma, Dot, Arrow, Eq, Slash, End };

struct Token {
  Tok kind;
  std::string text;
  SourceSpan span;
};

struct Lexer {
  std::string_view src;
  size_t pos = 0;
  uint32_t line = 1, col = 1;

  SourceSpan span_from(size_t start, uint32_t sl, uint32_t sc) const {
    return SourceSpan{static_cast<uint32_t>(start), static_cast<uint32_t>(pos), sl, sc};
  }

  void advance() {
    if (src[pos] == '\n') {
      line++;
      col = 1;
    } else {
      col++;
    }
    pos++;
  }

  void skip_ws() {
    while (pos < src.size()) {
      if (std::isspace(static_cast<unsigned char>(src[pos]))) {
        advance();
      } else if (src[pos] == '#') {
        while (pos < src.size() && src[pos] != '\n') advance();
      } else {
        break;
      }
    }
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw ParseError(msg, SourceSpan{static_cast<uint32_t>(pos),
                                     static_cast<uint32_t>(std::min(pos + 1, src.size())), line,
                                     col});
  }

  Token next() {
    skip_ws();
    size_t start = pos;
    uint32_t sl = line, sc = col;
    if (pos >= src.size()) return {Tok::End, "", span_from(start, sl, sc)};
    char c = src[pos];
    if (c == '(') return advance(), Token{Tok::LParen, "(", span_from(start, sl, sc)};
    if (c == ')') return advance(), Token{Tok::RParen, ")", span_from(start, sl, sc)};
    if (c == ',') return advance(), Token{Tok::Comma, ",", span_from(start, sl, sc)};
    if (c == '.') return advance(), Token{Tok::Dot, ".", span_from(start, sl, sc)};
    if (c == '=') return advance(), Token{Tok::Eq, "=", span_from(start, sl, sc)};
    if (c == '/') return advance(), Token{Tok::Slash, "/", span_from(start, sl, sc)};
    if (c == '<') {
      advance();
      if (pos >= src.size() || src[pos] != '-') fail("expected '-' after '<'");
      advance();
      return {Tok::Arrow, "<-", span_from(start, sl, sc)};
    }
    if (c == '\'' || c == '"') {
      char quote = c;
      advance();
      std::string text;
      while (pos < src.size() && src[pos] != quote) {
        if (src[pos] == '\n') fail("unterminated string");
        text += src[pos];
        advance();
      }
      if (pos >= src.size()) fail("unterminated string");
      advance();
      return {Tok::String, text, span_from(start, sl, sc)};
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string text;
      while (pos < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_')) {
        text += src[pos];
        advance();
      }
      bool upper = std::isupper(static_cast<unsigned char>(text[0]));
      return {upper ? Tok::UIdent : Tok::Ident, text, span_from(start, sl, sc)};
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

struct Parser {
  Lexer lex;
  Token tok;
  ProgramBuilder b;

  explicit Parser(std::string_view src) : lex{src} { tok = lex.next(); }

  [[noreturn]] void fail(const std::string& msg, SourceSpan sp) { throw ParseError(msg, sp); }

  Token expect(Tok k, const std::string& what) {
    if (tok.kind != k) fail("expected " + what + ", got '" + tok.text + "'", tok.span);
    Token t = tok;
    tok = lex.next();
    return t;
  }

  bool accept(Tok k) {
    if (tok.kind != k) return false;
    tok = lex.next();
    return true;
  }

  Program run() {
    if (tok.kind == Tok::Ident && tok.text == "alphabet") {
      tok = lex.next();
      Token s = expect(Tok::String, "alphabet string");
      b.declare_alphabet(s.text);
      expect(Tok::Dot, "'.'");
    }
    if (tok.kind == Tok::End) fail("empty program", tok.span);
    while (tok.kind != Tok::End) parse_rule();
    return b.finish(true);
  }

  std::vector<VarId> parse_var_list() {
    std::vector<VarId> vars;
    expect(Tok::LParen, "'('");
    if (!accept(Tok::RParen)) {
      for (;;) {
        Token v = expect(Tok::Ident, "variable");
        vars.push_back(b.var(v.text));
        if (accept(Tok::RParen)) break;
        expect(Tok::Comma, "','");
      }
    }
    return vars;
  }

  void parse_rule() {
    Token head = expect(Tok::UIdent, "relation symbol");
    std::vector<VarId> args = parse_var_list();
    SymId head_sym = b.rel(head.text, static_cast<int>(args.size()));
    expect(Tok::Arrow, "'<-'");
    std::vector<Atom> body;
    for (;;) {
      body.push_back(parse_atom());
      if (accept(Tok::Dot)) break;
      expect(Tok::Comma, "','");
    }
    SourceSpan rs = head.span;
    b.rule(head_sym, std::move(args), std::move(body), rs);
  }

  Atom parse_atom() {
    if (tok.kind == Tok::UIdent) {
      Token sym = tok;
      tok = lex.next();
      std::vector<VarId> args = parse_var_list();
      SymId s = b.rel(sym.text, static_cast<int>(args.size()));
      return RelationAtom{s, std::move(args), sym.span};
    }
    Token v = expect(Tok::Ident, "variable");
    VarId var = b.var(v.text);
    if (tok.kind == Tok::Ident && tok.text == "in") {
      tok = lex.next();
      if (tok.kind != Tok::Slash) fail("expected '/' opening a regex", tok.span);
      // tok is the '/' itself, so the lexer sits right after it; scan the
      // regex raw up to the closing unquoted '/'
      size_t start = lex.pos;
      size_t depth_quote = 0;
      while (lex.pos < lex.src.size() && (lex.src[lex.pos] != '/' || depth_quote % 2 == 1)) {
        if (lex.src[lex.pos] == '\'') depth_quote++;
        lex.advance();
      }
      if (lex.pos >= lex.src.size()) fail("unterminated regex", v.span);
      std::string_view body = lex.src.substr(start, lex.pos - start);
      lex.advance();  // closing '/'
      tok = lex.next();
      DrxPtr ast;
      try {
        ast = parse_drx(body);
      } catch (const ParseError& e) {
        SourceSpan sp = e.span;
        sp.start += static_cast<uint32_t>(start);
        sp.end += static_cast<uint32_t>(start);
        throw ParseError(e.what(), sp);
      }
      return DrxConstraint{var, ast, v.span};
    }
    expect(Tok::Eq, "'=' or 'in'");
    Pattern pat;
    while (tok.kind == Tok::Ident || tok.kind == Tok::String) {
      if (tok.kind == Tok::Ident) {
        pat.v(b.var(tok.text));
      } else {
        for (char c : tok.text) pat.t(c);
      }
      tok = lex.next();
    }
    return PatternEquation{var, std::move(pat), v.span};
  }
};

}  // namespace

Program parse_program(std::string_view text) { return Parser(text).run(); }

std::string print_pattern(const Program& p, const Pattern& pat) {
  if (pat.items.empty()) return "''";
  std::string out;
  size_t i = 0;
  while (i < pat.items.size()) {
    if (!out.empty()) out += ' ';
    if (pat.items[i].is_var) {
      out += p.var_name(pat.items[i].var);
      i++;
    } else {
      out += '\'';
      while (i < pat.items.size() && !pat.items[i].is_var) out += pat.items[i++].sym;
      out += '\'';
    }
  }
  return out;
}

std::string print_atom(const Program& p, const Atom& a) {
  if (const auto* eq = std::get_if<PatternEquation>(&a))
    return p.var_name(eq->lhs) + " = " + print_pattern(p, eq->rhs);
  if (const auto* ra = std::get_if<RelationAtom>(&a)) {
    std::string out = p.sym_name(ra->sym) + "(";
    for (size_t i = 0; i < ra->args.size(); i++) {
      if (i) out += ", ";
      out += p.var_name(ra->args[i]);
    }
    return out + ")";
  }
  const auto& c = std::get<DrxConstraint>(a);
  return p.var_name(c.var) + " in /" + print_drx(*c.regex) + "/";
}

std::string print_rule(const Program& p, const Rule& r) {
  std::string out = p.sym_name(r.head) + "(";
  for (size_t i = 0; i < r.head_args.size(); i++) {
    if (i) out += ", ";
    out += p.var_name(r.head_args[i]);
  }
  out += ") <- ";
  for (size_t i = 0; i < r.body.size(); i++) {
    if (i) out += ", ";
    out += print_atom(p, r.body[i]);
  }
  return out + ".";
}

std::string print_program(const Program& p) {
  std::string out;
  if (p.alphabet_declared) out += "alphabet '" + p.alphabet + "'.\n";
  for (auto& r : p.rules) out += print_rule(p, r) + "\n";
  return out;
}

}  // namespace fcdl
