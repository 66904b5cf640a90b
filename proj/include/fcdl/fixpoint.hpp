#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fcdl/factors.hpp"
#include "fcdl/program.hpp"

namespace fcdl {

struct EvalBudget {
  uint64_t max_tuples = 10'000'000;
  int64_t max_ms = 30'000;
  size_t max_factors = kDefaultMaxFactors;

  // FCDL_BUDGET="<tuples>[,<ms>]" overrides the defaults.
  static EvalBudget from_env();
};

using Tuple = std::vector<FactorId>;

struct RelationStore {
  FactorTable table;
  std::vector<std::set<Tuple>> rels;  // per relation symbol
  int iterations = 0;
  uint64_t tuple_count = 0;

  bool contains(SymId s, const Tuple& t) const { return rels[s].count(t) != 0; }
};

// Naive bottom-up least fixpoint: re-derives每 every rule until the store
// stabilizes. Asserts monotonicity and the iteration bound on every run.
RelationStore evaluate(const Program& p, std::string_view w, const EvalBudget& budget = {});

// Same fixpoint; rules re-fire only against the previous iteration's deltas.
RelationStore evaluate_semi_naive(const Program& p, std::string_view w,
                                  const EvalBudget& budget = {});

// Accept iff the empty tuple reached Ans; UsageError on non-Boolean programs.
Verdict model_check(const Program& p, std::string_view w, const EvalBudget& budget = {},
                    bool semi_naive = false);

// {"relations":{"R":[["ab","b"],...]}} with factors spelled out.
std::string store_to_json(const Program& p, const RelationStore& store);

}  // namespace fcdl
