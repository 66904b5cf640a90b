#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fcdl/program.hpp"

namespace fcdl {

inline constexpr size_t kDefaultMaxFactors = 500000;

// The finite universe: all distinct factors of one word, densely numbered.
// Ids are assigned by (length, lexicographic) order, so id 0 is always the
// empty word and the last id is the word itself.
struct FactorTable {
  std::string word;
  std::vector<std::string> factors;
  std::unordered_map<std::string_view, FactorId> index;  // views into `factors`

  FactorId id_of(std::string_view s) const {
    auto it = index.find(s);
    return it == index.end() ? -1 : it->second;
  }
  bool contains(std::string_view s) const { return index.count(s) != 0; }
  const std::string& at(FactorId id) const { return factors[id]; }
  size_t size() const { return factors.size(); }
  FactorId word_id() const { return static_cast<FactorId>(factors.size()) - 1; }
};

// Interns every distinct factor of `word`. When `alphabet` is non-empty, a
// symbol of `word` outside it is an InputError. Exceeding `max_factors` is a
// BudgetError.
FactorTable intern_factors(std::string_view word, std::string_view alphabet = "",
                           size_t max_factors = kDefaultMaxFactors);

// Partial map from variables to factors of the table's word.
struct Substitution {
  std::vector<FactorId> vals;  // -1 = unbound

  explicit Substitution(size_t var_count = 0) : vals(var_count, -1) {}
  static Substitution for_program(const Program& p) { return Substitution(p.var_names.size()); }

  bool bound(VarId v) const { return v >= 0 && v < (VarId)vals.size() && vals[v] >= 0; }
  FactorId get(VarId v) const { return vals[v]; }
  void set(VarId v, FactorId f) { vals[v] = f; }
  void clear(VarId v) { vals[v] = -1; }
  bool operator==(const Substitution& o) const { return vals == o.vals; }
  bool operator<(const Substitution& o) const { return vals < o.vals; }
};

// Homomorphic image of a pattern; every variable must be bound.
std::string apply_substitution(const Pattern& p, const Substitution& theta,
                               const FactorTable& table);

// All extensions theta' of theta binding Var(eq) with theta'(lhs) = theta'(rhs)
// and all bound values factors of the word. Deduplicated; deterministic order.
std::vector<Substitution> match_equation(const PatternEquation& eq, const Substitution& theta,
                                         const FactorTable& table);

// True iff the equation holds under a substitution binding all its variables.
bool equation_holds(const PatternEquation& eq, const Substitution& theta,
                    const FactorTable& table);

}  // namespace fcdl
