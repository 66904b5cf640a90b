#pragma once

#include <set>
#include <string>
#include <vector>

#include "fcdl/drx.hpp"

namespace fcdl {

// Glushkov position automaton of a memory regex. Positions are the terminal
// and recall occurrences in reading order; memory open/close is static per
// position (the set of binds whose subtree contains it).
struct PositionAutomaton {
  struct Position {
    bool is_recall = false;
    char sym = 0;       // terminal label
    int memory = -1;    // recalled memory index
    std::vector<int> open;  // memory indices open while reading this position
  };

  // A follow edge records which open memories are (re-)entered through it and
  // must start from scratch; entering from the start position resets all.
  struct Edge {
    int to = -1;
    std::vector<int> reset;
  };

  std::vector<std::string> memories;  // index -> name, in first-bind order
  std::vector<Position> positions;
  bool nullable = false;
  std::vector<Edge> first;
  std::set<int> last;
  std::vector<std::vector<Edge>> follow;
  // some Bind sits under a Star/Plus, so a memory could be re-entered
  bool bind_under_iteration = false;

  int n() const { return static_cast<int>(positions.size()); }
  int k() const { return static_cast<int>(memories.size()); }

  std::vector<int> first_targets() const;
  std::vector<int> follow_targets(int pos) const;
};

PositionAutomaton drx_position_automaton(const DrxNode& e);

struct DrxDetReport {
  bool deterministic = false;
  std::string reason;
};

// Conservative determinism: within the first set and every follow set,
// terminal labels are pairwise distinct and a recall is the sole member.
DrxDetReport drx_check_deterministic(const DrxNode& e);

// Single-pass simulation over positions with memory state; UsageError when
// the expression is not deterministic. Unopened memories recall as epsilon.
bool drx_match(const DrxNode& e, std::string_view w);

// Exhaustive backtracking over parse choices with memory bindings; the
// ground truth oracle. Works for nondeterministic expressions too.
bool drx_match_bruteforce(const DrxNode& e, std::string_view w, size_t max_len = 16);

}  // namespace fcdl
