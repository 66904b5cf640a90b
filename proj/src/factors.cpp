#include "fcdl/factors.hpp"

#include <algorithm>
#include <set>

namespace fcdl {

FactorTable intern_factors(std::string_view word, std::string_view alphabet, size_t max_factors) {
  if (!alphabet.empty()) {
    for (char c : word)
      if (alphabet.find(c) == std::string_view::npos)
        throw InputError(std::string("input symbol '") + c + "' is outside the alphabet");
  }
  FactorTable t;
  t.word.assign(word);
  // Distinct substrings, shortest first, lexicographic within a length.
  std::vector<std::string_view> bucket;
  std::vector<std::string> ordered;
  ordered.emplace_back();  // epsilon
  for (size_t len = 1; len <= word.size(); len++) {
    bucket.clear();
    for (size_t i = 0; i + len <= word.size(); i++) bucket.push_back(word.substr(i, len));
    std::sort(bucket.begin(), bucket.end());
    bucket.erase(std::unique(bucket.begin(), bucket.end()), bucket.end());
    for (auto sv : bucket) ordered.emplace_back(sv);
    if (ordered.size() > max_factors)
      throw BudgetError("factor table would exceed " + std::to_string(max_factors) + " entries");
  }
  t.factors = std::move(ordered);
  t.index.reserve(t.factors.size() * 2);
  for (size_t i = 0; i < t.factors.size(); i++)
    t.index.emplace(std::string_view(t.factors[i]), static_cast<FactorId>(i));
  return t;
}

std::string apply_substitution(const Pattern& p, const Substitution& theta,
                               const FactorTable& table) {
  std::string out;
  for (auto& it : p.items) {
    if (it.is_var) {
      if (!theta.bound(it.var))
        throw UsageError("apply_substitution: unbound variable in pattern");
      out += table.at(theta.get(it.var));
    } else {
      out += it.sym;
    }
  }
  return out;
}

namespace {

// Matches the rhs items against a known target (the lhs value), enumerating
// split points left to right; repeated variables must agree with the split
// that bound them.
struct SplitMatcher {
  const FactorTable& table;
  std::string_view target;
  const std::vector<Pattern::Item>& items;
  Substitution work;
  std::vector<VarId> locally_bound;
  std::set<Substitution>& out;
  // minimum target length the suffix items[i..] still requires
  std::vector<size_t> min_suffix;

  SplitMatcher(const FactorTable& tbl, std::string_view tgt,
               const std::vector<Pattern::Item>& its, const Substitution& theta,
               std::set<Substitution>& sink)
      : table(tbl), target(tgt), items(its), work(theta), out(sink) {
    min_suffix.assign(items.size() + 1, 0);
    for (size_t i = items.size(); i-- > 0;) {
      size_t need = 0;
      if (!items[i].is_var)
        need = 1;
      else if (work.bound(items[i].var))
        need = table.at(work.get(items[i].var)).size();
      min_suffix[i] = min_suffix[i + 1] + need;
    }
  }

  void run() { rec(0, 0); }

  void rec(size_t i, size_t pos) {
    if (i == items.size()) {
      if (pos == target.size()) out.insert(work);
      return;
    }
    if (target.size() - pos < min_suffix[i]) return;
    const auto& it = items[i];
    if (!it.is_var) {
      if (pos < target.size() && target[pos] == it.sym) rec(i + 1, pos + 1);
      return;
    }
    if (work.bound(it.var)) {
      const std::string& val = table.at(work.get(it.var));
      if (target.compare(pos, val.size(), val) == 0) rec(i + 1, pos + val.size());
      return;
    }
    // unbound: try every split length the remaining items permit
    size_t maxlen = target.size() - pos - min_suffix[i + 1];
    for (size_t len = 0; len <= maxlen; len++) {
      std::string_view cand = target.substr(pos, len);
      FactorId id = table.id_of(cand);
      // every substring of a factor is a factor, so the lookup always hits
      work.set(it.var, id);
      rec(i + 1, pos + len);
      work.clear(it.var);
    }
  }
};

}  // namespace

std::vector<Substitution> match_equation(const PatternEquation& eq, const Substitution& theta,
                                         const FactorTable& table) {
  std::set<Substitution> results;
  if (theta.bound(eq.lhs)) {
    SplitMatcher m(table, table.at(theta.get(eq.lhs)), eq.rhs.items, theta, results);
    m.run();
  } else {
    // Candidate lhs factors by total-length feasibility: the rhs image is at
    // least as long as its terminals plus its already-bound variables.
    size_t min_len = 0;
    bool all_ground = true;
    for (auto& it : eq.rhs.items) {
      if (!it.is_var)
        min_len += 1;
      else if (theta.bound(it.var))
        min_len += table.at(theta.get(it.var)).size();
      else
        all_ground = false;
    }
    if (all_ground) {
      std::string image = apply_substitution(eq.rhs, theta, table);
      FactorId id = table.id_of(image);
      if (id >= 0) {
        Substitution ext = theta;
        ext.set(eq.lhs, id);
        results.insert(ext);
      }
    } else {
      for (size_t cand = 0; cand < table.size(); cand++) {
        if (table.at(static_cast<FactorId>(cand)).size() < min_len) continue;
        Substitution seeded = theta;
        seeded.set(eq.lhs, static_cast<FactorId>(cand));
        SplitMatcher m(table, table.at(static_cast<FactorId>(cand)), eq.rhs.items, seeded,
                       results);
        m.run();
      }
    }
  }
  return std::vector<Substitution>(results.begin(), results.end());
}

bool equation_holds(const PatternEquation& eq, const Substitution& theta,
                    const FactorTable& table) {
  if (!theta.bound(eq.lhs)) throw UsageError("equation_holds: unbound lhs");
  return table.at(theta.get(eq.lhs)) == apply_substitution(eq.rhs, theta, table);
}

}  // namespace fcdl
