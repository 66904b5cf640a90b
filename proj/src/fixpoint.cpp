#include "fcdl/fixpoint.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>

#include "fcdl/glushkov.hpp"
#include "json.hpp"

namespace fcdl {

EvalBudget EvalBudget::from_env() {
  EvalBudget b;
  if (const char* env = std::getenv("FCDL_BUDGET")) {
    std::string s(env);
    size_t comma = s.find(',');
    try {
      b.max_tuples = std::stoull(s.substr(0, comma));
      if (comma != std::string::npos) b.max_ms = std::stoll(s.substr(comma + 1));
    } catch (...) {
      // malformed budget strings keep the defaults
    }
  }
  return b;
}

namespace {

using Clock = std::chrono::steady_clock;

struct BudgetGuard {
  const EvalBudget& budget;
  Clock::time_point start = Clock::now();
  uint64_t ticks = 0;

  explicit BudgetGuard(const EvalBudget& b) : budget(b) {}

  void tuples(uint64_t count) const {
    if (count > budget.max_tuples)
      throw BudgetError("tuple budget of " + std::to_string(budget.max_tuples) + " exceeded");
  }
  void tick() {
    if ((++ticks & 0x3ff) != 0) return;
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
    if (ms > budget.max_ms)
      throw BudgetError("time budget of " + std::to_string(budget.max_ms) + " ms exceeded");
  }
};

// Enumerates all substitutions satisfying a rule body against a store. The
// delta constraint, when set, restricts one relation atom to the given set.
struct BodyJoin {
  const Program& p;
  const RelationStore& store;
  BudgetGuard& guard;
  const Rule& rule;
  int delta_atom = -1;
  const std::set<Tuple>* delta = nullptr;

  std::vector<Substitution> run() {
    std::vector<Substitution> out;
    Substitution init = Substitution::for_program(p);
    init.set(p.universe, store.table.word_id());
    std::vector<int> todo(rule.body.size());
    for (size_t i = 0; i < todo.size(); i++) todo[i] = static_cast<int>(i);
    rec(init, todo, out);
    return out;
  }

  // pick the most-bound atom next; unbound pattern enumeration is the cost
  int choose(const Substitution& theta, const std::vector<int>& todo) {
    int best = -1;
    long best_score = -1;
    for (int ai : todo) {
      const Atom& a = rule.body[ai];
      long score = 0;
      if (const auto* eq = std::get_if<PatternEquation>(&a)) {
        long unbound = theta.bound(eq->lhs) ? 0 : 1;
        for (auto& it : eq->rhs.items)
          if (it.is_var && !theta.bound(it.var)) unbound++;
        score = 1000 - unbound * 10 - (theta.bound(eq->lhs) ? 0 : 5);
      } else if (const auto* ra = std::get_if<RelationAtom>(&a)) {
        long bound = 0;
        for (VarId v : ra->args)
          if (theta.bound(v)) bound++;
        score = 500 + bound * 10 - static_cast<long>(store.rels[ra->sym].size() / 64);
        if (bound == static_cast<long>(ra->args.size())) score = 2000;
      } else {
        const auto& c = std::get<DrxConstraint>(a);
        score = theta.bound(c.var) ? 3000 : 0;  // filter when bound, enumerate last
      }
      if (score > best_score) {
        best_score = score;
        best = ai;
      }
    }
    return best;
  }

  void rec(const Substitution& theta, std::vector<int> todo, std::vector<Substitution>& out) {
    guard.tick();
    if (todo.empty()) {
      out.push_back(theta);
      return;
    }
    int ai = choose(theta, todo);
    todo.erase(std::find(todo.begin(), todo.end(), ai));
    const Atom& a = rule.body[ai];

    if (const auto* eq = std::get_if<PatternEquation>(&a)) {
      for (auto& ext : match_equation(*eq, theta, store.table)) rec(ext, todo, out);
      return;
    }
    if (const auto* ra = std::get_if<RelationAtom>(&a)) {
      const std::set<Tuple>& rel = (ai == delta_atom) ? *delta : store.rels[ra->sym];
      for (const Tuple& t : rel) {
        guard.tick();
        Substitution ext = theta;
        bool ok = true;
        for (size_t i = 0; i < ra->args.size() && ok; i++) {
          VarId v = ra->args[i];
          if (ext.bound(v))
            ok = ext.get(v) == t[i];
          else
            ext.set(v, t[i]);
        }
        if (ok) rec(ext, todo, out);
      }
      return;
    }
    const auto& c = std::get<DrxConstraint>(a);
    if (theta.bound(c.var)) {
      if (drx_match(*c.regex, store.table.at(theta.get(c.var)))) rec(theta, todo, out);
      return;
    }
    for (size_t f = 0; f < store.table.size(); f++) {
      guard.tick();
      if (!drx_match(*c.regex, store.table.at(static_cast<FactorId>(f)))) continue;
      Substitution ext = theta;
      ext.set(c.var, static_cast<FactorId>(f));
      rec(ext, todo, out);
    }
  }
};

Tuple head_tuple(const Rule& r, const Substitution& theta) {
  Tuple t;
  t.reserve(r.head_args.size());
  for (VarId v : r.head_args) t.push_back(theta.get(v));
  return t;
}

uint64_t iteration_bound(const Program& p, const FactorTable& table) {
  size_t max_arity = 0;
  for (auto& r : p.relations) max_arity = std::max(max_arity, static_cast<size_t>(r.arity));
  double bound = std::pow(static_cast<double>(table.size()), static_cast<double>(max_arity)) *
                     static_cast<double>(p.relations.size()) +
                 2.0;
  return bound > 1e17 ? UINT64_MAX : static_cast<uint64_t>(bound);
}

RelationStore run_fixpoint(const Program& p, std::string_view w, const EvalBudget& budget,
                           bool semi_naive) {
  ValidationReport val = validate_program(p);
  if (!val.ok()) throw ValidationError("evaluate: invalid program", val.issues);

  RelationStore store;
  store.table = intern_factors(w, p.alphabet, budget.max_factors);
  store.rels.assign(p.relations.size(), {});
  BudgetGuard guard(budget);

  std::vector<std::set<Tuple>> delta(p.relations.size());
  const uint64_t max_iterations = iteration_bound(p, store.table);

  for (;;) {
    store.iterations++;
    if (static_cast<uint64_t>(store.iterations) > max_iterations)
      throw InternalError("fixpoint exceeded its theoretical iteration bound");
    std::vector<std::set<Tuple>> fresh(p.relations.size());
    uint64_t previous = store.tuple_count;

    for (auto& rule : p.rules) {
      std::vector<int> rel_atoms;
      for (size_t ai = 0; ai < rule.body.size(); ai++)
        if (std::holds_alternative<RelationAtom>(rule.body[ai]))
          rel_atoms.push_back(static_cast<int>(ai));

      auto fire = [&](int delta_atom, const std::set<Tuple>* d) {
        BodyJoin join{p, store, guard, rule, delta_atom, d};
        for (auto& theta : join.run()) {
          Tuple t = head_tuple(rule, theta);
          if (!store.rels[rule.head].count(t)) fresh[rule.head].insert(std::move(t));
        }
      };

      if (!semi_naive || store.iterations == 1) {
        fire(-1, nullptr);
      } else if (!rel_atoms.empty()) {
        // re-fire once per relation atom, that atom restricted to the delta
        for (int ai : rel_atoms) {
          const auto& ra = std::get<RelationAtom>(rule.body[ai]);
          if (delta[ra.sym].empty()) continue;
          fire(ai, &delta[ra.sym]);
        }
      }
    }

    for (size_t s = 0; s < fresh.size(); s++) delta[s] = std::move(fresh[s]);
    for (size_t s = 0; s < delta.size(); s++) {
      for (auto& t : delta[s]) {
        store.rels[s].insert(t);
        store.tuple_count++;
      }
    }
    guard.tuples(store.tuple_count);
    if (store.tuple_count == previous) break;  // stabilized: monotone by construction
  }
  return store;
}

}  // namespace

RelationStore evaluate(const Program& p, std::string_view w, const EvalBudget& budget) {
  return run_fixpoint(p, w, budget, false);
}

RelationStore evaluate_semi_naive(const Program& p, std::string_view w,
                                  const EvalBudget& budget) {
  return run_fixpoint(p, w, budget, true);
}

Verdict model_check(const Program& p, std::string_view w, const EvalBudget& budget,
                    bool semi_naive) {
  if (!p.is_boolean()) throw UsageError("model_check: Ans has arity > 0");
  RelationStore store = semi_naive ? evaluate_semi_naive(p, w, budget) : evaluate(p, w, budget);
  return store.rels[p.ans].count(Tuple{}) ? Verdict::Accept : Verdict::Reject;
}

std::string store_to_json(const Program& p, const RelationStore& store) {
  nlohmann::json rels = nlohmann::json::object();
  for (size_t s = 0; s < store.rels.size(); s++) {
    nlohmann::json arr = nlohmann::json::array();
    for (auto& t : store.rels[s]) {
      nlohmann::json tup = nlohmann::json::array();
      for (FactorId f : t) tup.push_back(store.table.at(f));
      arr.push_back(tup);
    }
    rels[p.sym_name(static_cast<SymId>(s))] = arr;
  }
  return nlohmann::json{{"relations", rels}}.dump(2);
}

}  // namespace fcdl
