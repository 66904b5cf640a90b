#include "fcdl/drx.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>

namespace fcdl {

DrxPtr DrxNode::terminal(char c) {
  auto n = std::make_shared<DrxNode>();
  n->kind = Kind::Terminal;
  n->sym = c;
  return n;
}

DrxPtr DrxNode::concat(std::vector<DrxPtr> cs) {
  if (cs.size() == 1) return cs[0];
  auto n = std::make_shared<DrxNode>();
  n->kind = Kind::Concat;
  n->children = std::move(cs);
  return n;
}

DrxPtr DrxNode::alt(DrxPtr a, DrxPtr b) {
  auto n = std::make_shared<DrxNode>();
  n->kind = Kind::Union;
  n->children = {std::move(a), std::move(b)};
  return n;
}

DrxPtr DrxNode::plus(DrxPtr c) {
  auto n = std::make_shared<DrxNode>();
  n->kind = Kind::Plus;
  n->children = {std::move(c)};
  return n;
}

DrxPtr DrxNode::star(DrxPtr c) {
  auto n = std::make_shared<DrxNode>();
  n->kind = Kind::Star;
  n->children = {std::move(c)};
  return n;
}

DrxPtr DrxNode::bind(std::string mem, DrxPtr c) {
  auto n = std::make_shared<DrxNode>();
  n->kind = Kind::Bind;
  n->memory = std::move(mem);
  n->children = {std::move(c)};
  return n;
}

DrxPtr DrxNode::recall(std::string mem) {
  auto n = std::make_shared<DrxNode>();
  n->kind = Kind::Recall;
  n->memory = std::move(mem);
  return n;
}

namespace {

struct DrxParser {
  std::string_view text;
  size_t pos = 0;
  uint32_t base = 0;  // offset of `text` inside the surrounding source

  SourceSpan here(size_t from, size_t to) const {
    SourceSpan s;
    s.start = base + static_cast<uint32_t>(from);
    s.end = base + static_cast<uint32_t>(to);
    s.col = s.start + 1;
    return s;
  }

  [[noreturn]] void fail(const std::string& msg, size_t at) {
    throw ParseError("drx: " + msg, here(at, std::min(at + 1, text.size())));
  }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) pos++;
  }

  bool peek_is(char c) {
    skip_ws();
    return pos < text.size() && text[pos] == c;
  }

  bool at_atom_start() {
    skip_ws();
    if (pos >= text.size()) return false;
    char c = text[pos];
    if (c == '(' || c == '<' || c == '&' || c == '\'') return true;
    // bare terminal: anything that is not an operator or a delimiter
    return std::string_view("()|+*<>:&/").find(c) == std::string_view::npos;
  }

  std::string ident() {
    skip_ws();
    size_t s = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      pos++;
    if (pos == s) fail("expected identifier", s);
    return std::string(text.substr(s, pos - s));
  }

  DrxPtr parse_union() {
    DrxPtr left = parse_concat();
    while (peek_is('|')) {
      pos++;
      DrxPtr right = parse_concat();
      left = DrxNode::alt(left, right);
    }
    return left;
  }

  DrxPtr parse_concat() {
    std::vector<DrxPtr> parts;
    while (at_atom_start()) parts.push_back(parse_postfix());
    if (parts.empty()) fail("expected expression", pos);
    return DrxNode::concat(std::move(parts));
  }

  DrxPtr parse_postfix() {
    DrxPtr e = parse_atom();
    for (;;) {
      skip_ws();
      if (pos < text.size() && text[pos] == '+') {
        pos++;
        e = DrxNode::plus(e);
      } else if (pos < text.size() && text[pos] == '*') {
        pos++;
        e = DrxNode::star(e);
      } else {
        break;
      }
    }
    return e;
  }

  DrxPtr parse_atom() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of expression", pos);
    char c = text[pos];
    if (c == '(') {
      pos++;
      DrxPtr e = parse_union();
      skip_ws();
      if (pos >= text.size() || text[pos] != ')') fail("expected ')'", pos);
      pos++;
      return e;
    }
    if (c == '<') {
      size_t at = pos;
      pos++;
      std::string mem = ident();
      skip_ws();
      if (pos >= text.size() || text[pos] != ':') fail("expected ':' in bind", pos);
      pos++;
      DrxPtr body = parse_union();
      skip_ws();
      if (pos >= text.size() || text[pos] != '>') fail("unterminated bind , expected '>'", at);
      pos++;
      return DrxNode::bind(std::move(mem), body);
    }
    if (c == '&') {
      pos++;
      return DrxNode::recall(ident());
    }
    if (c == '\'') {
      size_t at = pos;
      pos++;
      if (pos >= text.size()) fail("unterminated quoted terminal", at);
      char t = text[pos++];
      if (pos >= text.size() || text[pos] != '\'') fail("unterminated quoted terminal", at);
      pos++;
      return DrxNode::terminal(t);
    }
    pos++;
    return DrxNode::terminal(c);
  }
};

void walk(const DrxNode& n, const std::function<void(const DrxNode&)>& f) {
  f(n);
  for (const auto& c : n.children) walk(*c, f);
}

// Every recall must name a memory bound somewhere, and no memory may be bound
// or recalled inside its own (or an equally named) bind.
void check_normalized(const DrxNode& root) {
  std::set<std::string> bound;
  walk(root, [&](const DrxNode& n) {
    if (n.kind == DrxNode::Kind::Bind) bound.insert(n.memory);
  });
  walk(root, [&](const DrxNode& n) {
    if (n.kind == DrxNode::Kind::Recall && !bound.count(n.memory))
      throw ParseError("drx: recall of unbound memory '" + n.memory + "'", SourceSpan{});
  });
  std::function<void(const DrxNode&, std::set<std::string>&)> rec =
      [&](const DrxNode& n, std::set<std::string>& open) {
        if (n.kind == DrxNode::Kind::Bind) {
          if (open.count(n.memory))
            throw ParseError("drx: memory '" + n.memory + "' bound inside its own bind",
                             SourceSpan{});
          open.insert(n.memory);
          rec(*n.children[0], open);
          open.erase(n.memory);
          return;
        }
        if (n.kind == DrxNode::Kind::Recall && open.count(n.memory))
          throw ParseError("drx: memory '" + n.memory + "' recalled while still being saved",
                           SourceSpan{});
        for (const auto& c : n.children) rec(*c, open);
      };
  std::set<std::string> open;
  rec(root, open);
}

int prec(DrxNode::Kind k) {
  switch (k) {
    case DrxNode::Kind::Union: return 0;
    case DrxNode::Kind::Concat: return 1;
    default: return 2;
  }
}

void print_rec(const DrxNode& e, int outer, std::string& out) {
  bool paren = prec(e.kind) < outer;
  if (paren) out += '(';
  switch (e.kind) {
    case DrxNode::Kind::Terminal:
      if (std::isalnum(static_cast<unsigned char>(e.sym))) {
        out += e.sym;
      } else {
        out += '\'';
        out += e.sym;
        out += '\'';
      }
      break;
    case DrxNode::Kind::Concat:
      for (size_t i = 0; i < e.children.size(); i++) {
        if (i) out += ' ';
        print_rec(*e.children[i], 1, out);
      }
      break;
    case DrxNode::Kind::Union:
      print_rec(*e.children[0], 0, out);
      out += '|';
      print_rec(*e.children[1], 0, out);
      break;
    case DrxNode::Kind::Plus:
      print_rec(*e.children[0], 2, out);
      out += '+';
      break;
    case DrxNode::Kind::Star:
      print_rec(*e.children[0], 2, out);
      out += '*';
      break;
    case DrxNode::Kind::Bind:
      out += '<';
      out += e.memory;
      out += ':';
      print_rec(*e.children[0], 0, out);
      out += '>';
      break;
    case DrxNode::Kind::Recall:
      out += '&';
      out += e.memory;
      break;
  }
  if (paren) out += ')';
}

}  // namespace

DrxPtr parse_drx(std::string_view text) {
  DrxParser p{text};
  DrxPtr e = p.parse_union();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input after expression", p.pos);
  check_normalized(*e);
  return e;
}

std::string print_drx(const DrxNode& e) {
  std::string out;
  print_rec(e, 0, out);
  return out;
}

bool drx_equal(const DrxNode& a, const DrxNode& b) {
  if (a.kind != b.kind || a.sym != b.sym || a.memory != b.memory ||
      a.children.size() != b.children.size())
    return false;
  for (size_t i = 0; i < a.children.size(); i++)
    if (!drx_equal(*a.children[i], *b.children[i])) return false;
  return true;
}

std::string drx_terminals(const DrxNode& e) {
  std::set<char> s;
  walk(e, [&](const DrxNode& n) {
    if (n.kind == DrxNode::Kind::Terminal) s.insert(n.sym);
  });
  return std::string(s.begin(), s.end());
}

std::vector<std::string> drx_memory_names(const DrxNode& e) {
  std::vector<std::string> names;
  walk(e, [&](const DrxNode& n) {
    if (n.kind == DrxNode::Kind::Bind &&
        std::find(names.begin(), names.end(), n.memory) == names.end())
      names.push_back(n.memory);
  });
  return names;
}

}  // namespace fcdl
