#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fcdl/program.hpp"

namespace fcdl {

// Rule dependency structure over relation symbols: R -> R' iff some rule has
// head R and a body atom R'.
struct DependencyInfo {
  int nsyms = 0;
  std::vector<std::vector<int>> succ;   // adjacency (deduplicated)
  std::vector<int> scc;                 // symbol -> SCC id
  std::vector<bool> self_cycle;        // symbol lies on a cycle (incl. self-loop)
  std::vector<int> scc_size;           // per SCC id

  // R and R' are mutually recursive iff each reaches the other: same SCC and
  // the SCC is non-trivial, or R == R' with a self-loop.
  bool mutually_recursive(SymId a, SymId b) const;
};

DependencyInfo dependency_info(const Program& p);

struct LinearReport {
  bool linear = true;
  // per rule: body index of the unique mutually recursive atom, or -1
  std::vector<int> recursive_atom;
  std::vector<Diagnostic> issues;
};

LinearReport check_linear(const Program& p, const DependencyInfo& dep);

struct TopBottom {
  std::vector<VarId> top;     // head args then the universe variable
  std::vector<VarId> bottom;  // args of the mutually recursive body atom
  int rec_atom = -1;
};

// UsageError when the rule is not linear.
TopBottom top_bottom(const Program& p, int rule_idx, const DependencyInfo& dep);

enum class OllaForm { Eps, Right, Left, LookaheadAfter, LookaheadBefore };

struct OllaReport {
  bool olla = false;
  bool guarded = false;
  // per rule, per pattern-equation (body order): assigned form
  std::vector<std::vector<OllaForm>> forms;
  std::vector<Diagnostic> issues;
};

// Per-position summary of what a rule's equations force on a variable class.
// Everything here is a word-independent consequence of pe(rule).
struct CellConstraint {
  std::optional<char> first, last;       // forced first/last letter
  std::optional<size_t> exact_len;       // all-terminal right-hand side
  size_t min_len = 0;
  bool equals_universe = false;          // aliased to the universe variable
  std::optional<char> look_after, look_before;  // letter adjacent in the word
};

struct RuleProfile {
  bool inert = false;  // contradicting equations; the rule can never fire
  std::vector<CellConstraint> cells;  // indexed like top(rule)
};

struct GlobalDetReport {
  bool ok = false;
  std::vector<RuleProfile> profiles;  // per rule (empty cells for non-linear)
  std::vector<Diagnostic> issues;
};

struct LocalDetReport {
  bool ok = false;
  std::vector<bool> inert;  // per rule
  std::vector<Diagnostic> issues;
};

// Program-level OLLA shape check: every pattern equation fits one of the
// one-letter forms and left/right usage is consistent per head symbol.
OllaReport classify_olla(const Program& p, const DependencyInfo& dep, const LinearReport& lin);

// Coverage-style check that every W relation is a partial function. Inert
// rules are skipped. Variables determined through a functional subroutine
// count as covered.
LocalDetReport local_determinism_olla(const Program& p, const DependencyInfo& dep,
                                      const LinearReport& lin);

// Pairwise profile conflicts per head symbol certify that no top tuple is
// accepted by two distinct rules.
GlobalDetReport profiles_and_global_determinism(const Program& p, const DependencyInfo& dep,
                                                const LinearReport& lin);

struct UniquelyDefinedReport {
  bool all = false;                     // every variable of the rule defined
  std::vector<VarId> order;             // variables in definition order
  std::vector<VarId> undefined;
};

// Least fixpoint of Def-style unique definition: seeds are the universe
// variable and the rule's top variables; an equation with exactly one
// undefined variable defines it.
UniquelyDefinedReport uniquely_defined(const Program& p, int rule_idx, const DependencyInfo& dep);

struct SdReport {
  bool ok = false;
  std::map<SymId, int> decreasing_pos;  // head-arg position that strictly shrinks
  std::vector<Diagnostic> issues;
};

// Syntactic sufficient check for the strictly decreasing property; sound,
// conservative.
SdReport check_strictly_decreasing(const Program& p, const DependencyInfo& dep,
                                   const LinearReport& lin);

struct SemanticDetReport {
  struct RuleW {
    // explicit W relation: pairs of (top tuple, bottom tuple), as strings
    std::set<std::pair<std::vector<std::string>, std::vector<std::string>>> pairs;
    bool partial_function = true;
  };
  std::vector<RuleW> per_rule;
  bool local = true;
  bool global = true;
  std::vector<std::string> witnesses;  // human-readable overlap/violation notes
};

// Brute-forces W for every rule over the factors of w (pattern equations
// only, as in the paper's definition). Guarded by a word-length bound.
SemanticDetReport semantic_determinism_oracle(const Program& p, std::string_view w,
                                              size_t max_word_len = 8);

// Every DRX-constraint must sit in a rule whose head symbol has exactly one
// rule, and its regex must pass the deterministic check.
bool check_drx_constraints(const Program& p, std::vector<Diagnostic>* issues = nullptr);

struct FragmentReport {
  bool valid = false;
  bool linear = false;
  bool olla = false;
  bool guarded = false;
  bool locally_deterministic = false;
  bool globally_deterministic = false;
  bool dolla = false;
  bool uniquely_defined_all = false;
  bool dolla_plus = false;
  bool strictly_decreasing = false;
  bool drx_constraints_legal = true;
  std::string tier;  // sd-fast | deterministic-topdown | memoized-topdown | fixpoint
  std::vector<Diagnostic> diagnostics;
  std::map<SymId, int> decreasing_pos;

  std::string to_json() const;
};

FragmentReport classify(const Program& p);

}  // namespace fcdl
