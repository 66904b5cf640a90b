#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fcdl/analysis.hpp"
#include "fcdl/fixpoint.hpp"
#include "fcdl/program.hpp"

namespace fcdl {

// A factor value as an occurrence inside the input word; identity is content.
struct Span {
  uint32_t pos = 0;
  uint32_t len = 0;
  bool operator==(const Span&) const = default;
};

inline std::string_view span_view(std::string_view word, Span s) {
  return word.substr(s.pos, s.len);
}

struct EvalTrace {
  struct Step {
    int rule = -1;
    std::vector<std::pair<std::string, std::string>> bindings;  // var -> value
  };
  std::vector<Step> steps;            // main-chain steps (when recorded)
  uint64_t recursive_steps = 0;       // longest chain of rule applications
  std::vector<EvalTrace> subroutines;
  bool recorded = false;

  std::string to_json() const;
};

struct TopdownOptions {
  bool record_trace = false;
  EvalBudget budget;
};

struct TopdownResult {
  Verdict verdict = Verdict::Reject;
  EvalTrace trace;
  bool fell_back = false;       // deferred bindings forced the memoized path
  std::string warning;
  uint64_t lookup_entries = 0;  // preprocessing size when a lookup was built
};

struct UniqueSolve {
  VarId var = -1;
  Span value;
};

// Solves a pattern equation with exactly one unbound variable: the unknown's
// length is forced, the candidate is cut from its first occurrence slot and
// verified against every occurrence and factor membership. UsageError when
// zero or more than one variable is unbound.
std::optional<UniqueSolve> solve_unique_equation(std::string_view word, const Program& p,
                                                 const PatternEquation& eq,
                                                 const std::vector<std::optional<Span>>& bindings);

// Rule-dispatch table for globally deterministic OLLA programs: per head
// symbol, the observable letter constraints that select the unique applicable
// rule. UsageError when the program is not certified DOLLA.
struct RuleLookup {
  struct Observation {
    int top_pos = -1;
    enum Kind { First, Last, ExactLen, LookAfter, LookBefore, EqualsUniverse } kind = First;
    char letter = 0;
    size_t len = 0;
  };
  // per rule: observations that must hold for the rule to be applicable
  std::vector<std::vector<Observation>> per_rule;
  uint64_t entries = 0;
};

RuleLookup build_rule_lookup(const Program& p);

// Deterministic chain evaluation for DOLLA / DOLLA+ programs: the unique
// applicable rule is selected at every step, equations are solved in
// uniquely-defined order, pass-through variables are deferred as aliases and
// subroutine atoms run as their own chains. Cycle detection rejects revisits.
TopdownResult eval_deterministic(const Program& p, std::string_view w,
                                 const TopdownOptions& opts = {});

// The strictly-decreasing fast path: no visited set, just a step budget of
// |w| + |relations| + 1 per chain; exceeding it is an internal error.
TopdownResult eval_sd(const Program& p, std::string_view w, const TopdownOptions& opts = {});

// Goal-directed search over ground configurations with proven/failed memo
// states; sound for every linear program, nondeterminism included.
Verdict eval_memoized(const Program& p, std::string_view w, const EvalBudget& budget = {});

// Membership of a factor value in L(regex); UsageError for nondeterministic
// expressions.
bool eval_drx_constraint(std::string_view value, const DrxNode& regex);

}  // namespace fcdl
