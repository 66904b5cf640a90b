#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fcdl/base.hpp"
#include "fcdl/drx.hpp"

namespace fcdl {

using VarId = int32_t;
using SymId = int32_t;
using FactorId = int32_t;

// A pattern is a sequence of terminals and variables; empty means epsilon.
struct Pattern {
  struct Item {
    bool is_var = false;
    char sym = 0;   // terminal
    VarId var = -1;
  };
  std::vector<Item> items;

  static Pattern empty() { return {}; }
  Pattern& t(char c) {
    items.push_back({false, c, -1});
    return *this;
  }
  Pattern& v(VarId x) {
    items.push_back({true, 0, x});
    return *this;
  }
  size_t terminal_count() const {
    size_t n = 0;
    for (auto& it : items)
      if (!it.is_var) n++;
    return n;
  }
};

struct PatternEquation {
  VarId lhs = -1;
  Pattern rhs;
  SourceSpan span;
};

struct RelationAtom {
  SymId sym = -1;
  std::vector<VarId> args;
  SourceSpan span;
};

struct DrxConstraint {
  VarId var = -1;
  DrxPtr regex;
  SourceSpan span;
};

using Atom = std::variant<PatternEquation, RelationAtom, DrxConstraint>;

struct Rule {
  SymId head = -1;
  std::vector<VarId> head_args;
  std::vector<Atom> body;
  SourceSpan span;
};

struct Relation {
  std::string name;
  int arity = 0;
};

struct Program {
  std::vector<std::string> var_names;  // VarId -> name; ids are program-wide
  VarId universe = -1;                 // the reserved variable `univ`
  std::vector<Relation> relations;     // includes Ans
  SymId ans = -1;
  std::vector<Rule> rules;
  std::string alphabet;                // sorted, deduplicated terminals
  bool alphabet_declared = false;

  int arity(SymId s) const { return relations[s].arity; }
  const std::string& sym_name(SymId s) const { return relations[s].name; }
  const std::string& var_name(VarId v) const { return var_names[v]; }
  bool is_boolean() const { return ans >= 0 && relations[ans].arity == 0; }

  std::optional<SymId> find_sym(std::string_view name) const;
  std::optional<VarId> find_var(std::string_view name) const;

  // Rule indices sharing a head symbol (Phi_R).
  std::vector<int> rules_of(SymId s) const;

  // All variables occurring in a rule (head args, equations, atoms), deduped.
  std::vector<VarId> rule_vars(const Rule& r) const;

  bool has_drx_constraints() const;
};

bool operator==(const Pattern& a, const Pattern& b);
bool operator==(const Rule& a, const Rule& b);
bool operator==(const Program& a, const Program& b);

std::vector<VarId> atom_vars(const Atom& a);

// Incremental construction used by the parser, the compilers and tests.
struct ProgramBuilder {
  Program p;

  ProgramBuilder();
  VarId var(const std::string& name);           // interns; `univ` is the universe
  SymId rel(const std::string& name, int arity);
  ProgramBuilder& rule(SymId head, std::vector<VarId> args, std::vector<Atom> body,
                       SourceSpan span = {});
  ProgramBuilder& declare_alphabet(const std::string& sigma);
  // Infers the alphabet from terminals when not declared, checks invariants.
  Program finish(bool validate = true);
};

struct ValidationReport {
  std::vector<Diagnostic> issues;
  bool ok() const { return issues.empty(); }
};

// Checks the structural invariants: head variables occur in the body, arity
// agreement, declared symbols, lhs not occurring in rhs, terminals in the
// alphabet, exactly one universe variable and Ans present.
ValidationReport validate_program(const Program& p);

}  // namespace fcdl
