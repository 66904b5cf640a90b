#include "fcdl/program.hpp"

#include <algorithm>
#include <set>

namespace fcdl {

std::optional<SymId> Program::find_sym(std::string_view name) const {
  for (size_t i = 0; i < relations.size(); i++)
    if (relations[i].name == name) return static_cast<SymId>(i);
  return std::nullopt;
}

std::optional<VarId> Program::find_var(std::string_view name) const {
  for (size_t i = 0; i < var_names.size(); i++)
    if (var_names[i] == name) return static_cast<VarId>(i);
  return std::nullopt;
}

std::vector<int> Program::rules_of(SymId s) const {
  std::vector<int> out;
  for (size_t i = 0; i < rules.size(); i++)
    if (rules[i].head == s) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<VarId> atom_vars(const Atom& a) {
  std::vector<VarId> out;
  if (const auto* eq = std::get_if<PatternEquation>(&a)) {
    out.push_back(eq->lhs);
    for (auto& it : eq->rhs.items)
      if (it.is_var) out.push_back(it.var);
  } else if (const auto* ra = std::get_if<RelationAtom>(&a)) {
    out = ra->args;
  } else {
    out.push_back(std::get<DrxConstraint>(a).var);
  }
  return out;
}

std::vector<VarId> Program::rule_vars(const Rule& r) const {
  std::set<VarId> s(r.head_args.begin(), r.head_args.end());
  for (auto& a : r.body)
    for (VarId v : atom_vars(a)) s.insert(v);
  return std::vector<VarId>(s.begin(), s.end());
}

bool Program::has_drx_constraints() const {
  for (auto& r : rules)
    for (auto& a : r.body)
      if (std::holds_alternative<DrxConstraint>(a)) return true;
  return false;
}

bool operator==(const Pattern& a, const Pattern& b) {
  if (a.items.size() != b.items.size()) return false;
  for (size_t i = 0; i < a.items.size(); i++) {
    if (a.items[i].is_var != b.items[i].is_var) return false;
    if (a.items[i].is_var ? a.items[i].var != b.items[i].var : a.items[i].sym != b.items[i].sym)
      return false;
  }
  return true;
}

static bool atom_eq(const Atom& a, const Atom& b) {
  if (a.index() != b.index()) return false;
  if (const auto* ea = std::get_if<PatternEquation>(&a)) {
    const auto& eb = std::get<PatternEquation>(b);
    return ea->lhs == eb.lhs && ea->rhs == eb.rhs;
  }
  if (const auto* ra = std::get_if<RelationAtom>(&a)) {
    const auto& rb = std::get<RelationAtom>(b);
    return ra->sym == rb.sym && ra->args == rb.args;
  }
  const auto& ca = std::get<DrxConstraint>(a);
  const auto& cb = std::get<DrxConstraint>(b);
  return ca.var == cb.var && drx_equal(*ca.regex, *cb.regex);
}

bool operator==(const Rule& a, const Rule& b) {
  if (a.head != b.head || a.head_args != b.head_args || a.body.size() != b.body.size())
    return false;
  for (size_t i = 0; i < a.body.size(); i++)
    if (!atom_eq(a.body[i], b.body[i])) return false;
  return true;
}

bool operator==(const Program& a, const Program& b) {
  if (a.var_names != b.var_names || a.universe != b.universe || a.alphabet != b.alphabet)
    return false;
  if (a.relations.size() != b.relations.size()) return false;
  for (size_t i = 0; i < a.relations.size(); i++)
    if (a.relations[i].name != b.relations[i].name || a.relations[i].arity != b.relations[i].arity)
      return false;
  if (a.rules.size() != b.rules.size()) return false;
  for (size_t i = 0; i < a.rules.size(); i++)
    if (!(a.rules[i] == b.rules[i])) return false;
  return true;
}

ProgramBuilder::ProgramBuilder() { p.universe = var("univ"); }

VarId ProgramBuilder::var(const std::string& name) {
  if (auto v = p.find_var(name)) return *v;
  p.var_names.push_back(name);
  return static_cast<VarId>(p.var_names.size() - 1);
}

SymId ProgramBuilder::rel(const std::string& name, int arity) {
  if (auto s = p.find_sym(name)) {
    if (p.relations[*s].arity != arity)
      throw ValidationError("relation " + name + " used with conflicting arities");
    return *s;
  }
  p.relations.push_back({name, arity});
  SymId id = static_cast<SymId>(p.relations.size() - 1);
  if (name == "Ans") p.ans = id;
  return id;
}

ProgramBuilder& ProgramBuilder::rule(SymId head, std::vector<VarId> args, std::vector<Atom> body,
                                     SourceSpan span) {
  p.rules.push_back(Rule{head, std::move(args), std::move(body), span});
  return *this;
}

ProgramBuilder& ProgramBuilder::declare_alphabet(const std::string& sigma) {
  std::set<char> s(sigma.begin(), sigma.end());
  p.alphabet.assign(s.begin(), s.end());
  p.alphabet_declared = true;
  return *this;
}

Program ProgramBuilder::finish(bool validate) {
  if (!p.alphabet_declared) {
    std::set<char> s;
    for (auto& r : p.rules)
      for (auto& a : r.body) {
        if (const auto* eq = std::get_if<PatternEquation>(&a))
          for (auto& it : eq->rhs.items)
            if (!it.is_var) s.insert(it.sym);
        if (const auto* c = std::get_if<DrxConstraint>(&a)) {
          std::string t = drx_terminals(*c->regex);
          s.insert(t.begin(), t.end());
        }
      }
    p.alphabet.assign(s.begin(), s.end());
  }
  if (validate) {
    ValidationReport rep = validate_program(p);
    if (!rep.ok()) throw ValidationError(rep.issues.front().msg, rep.issues);
  }
  return p;
}

ValidationReport validate_program(const Program& p) {
  ValidationReport rep;
  auto issue = [&](SourceSpan sp, int rule, const std::string& m) {
    rep.issues.push_back({sp, rule, m});
  };

  if (p.ans < 0) issue({}, -1, "program has no Ans relation");
  if (p.universe < 0 || p.var_names[p.universe] != "univ")
    issue({}, -1, "program has no universe variable");

  std::set<char> sigma(p.alphabet.begin(), p.alphabet.end());

  for (size_t ri = 0; ri < p.rules.size(); ri++) {
    const Rule& r = p.rules[ri];
    int rule = static_cast<int>(ri);
    if (r.head < 0 || r.head >= static_cast<SymId>(p.relations.size())) {
      issue(r.span, rule, "undeclared head relation symbol");
      continue;
    }
    if (static_cast<int>(r.head_args.size()) != p.arity(r.head))
      issue(r.span, rule,
            "head arity mismatch for " + p.sym_name(r.head) + ": expected " +
                std::to_string(p.arity(r.head)) + ", got " + std::to_string(r.head_args.size()));
    if (r.body.empty()) issue(r.span, rule, "rule body must have at least one atom");

    std::set<VarId> body_vars;
    for (auto& a : r.body)
      for (VarId v : atom_vars(a)) body_vars.insert(v);
    for (VarId h : r.head_args)
      if (!body_vars.count(h))
        issue(r.span, rule, "head variable " + p.var_name(h) + " does not occur in the body");

    for (auto& a : r.body) {
      if (const auto* eq = std::get_if<PatternEquation>(&a)) {
        for (auto& it : eq->rhs.items) {
          if (it.is_var && it.var == eq->lhs)
            issue(eq->span, rule,
                  "equation " + p.var_name(eq->lhs) +
                      " = ... is not normalizable: left-hand variable occurs on the right");
          if (!it.is_var && !sigma.count(it.sym))
            issue(eq->span, rule,
                  std::string("terminal '") + it.sym + "' is outside the declared alphabet");
        }
      } else if (const auto* ra = std::get_if<RelationAtom>(&a)) {
        if (ra->sym < 0 || ra->sym >= static_cast<SymId>(p.relations.size()))
          issue(ra->span, rule, "undeclared relation symbol in body");
        else if (static_cast<int>(ra->args.size()) != p.arity(ra->sym))
          issue(ra->span, rule,
                "arity mismatch for " + p.sym_name(ra->sym) + ": expected " +
                    std::to_string(p.arity(ra->sym)) + ", got " + std::to_string(ra->args.size()));
      } else {
        const auto& c = std::get<DrxConstraint>(a);
        for (char t : drx_terminals(*c.regex))
          if (!sigma.count(t))
            issue(c.span, rule,
                  std::string("regex terminal '") + t + "' is outside the declared alphabet");
      }
    }
  }
  return rep;
}

}  // namespace fcdl
