#pragma once

#include <string>
#include <utility>

#include "fcdl/drx.hpp"
#include "fcdl/machines.hpp"
#include "fcdl/program.hpp"

namespace fcdl {

struct CompileStats {
  int k = 0;        // memory count
  int n = 0;        // terminal occurrences + recall occurrences
  int rules = 0;
  int symbols = 0;
  int bound_rules = 0;
  int bound_symbols = 0;

  std::string to_json() const;
};

// Simulates the automaton's accepting paths top-down: one k-ary relation per
// (state, heads-on-left-endmarker) pair, head positions as prefixes of the
// word, lookahead equations reading the scanned letters. Adds
// Ans() <- univ = '' exactly when the automaton accepts the empty word.
Program compile_2nfa(const MultiHeadAutomaton& m);

// Same construction, restricted to deterministic automata; the output is
// certified DOLLA by the analysis.
Program compile_2dfa(const MultiHeadAutomaton& m);

// Glushkov-position chain with letter-by-letter memory subroutines
// (R_l families); bounds: rules <= k(|Sigma|+1) + n(n+3) + 1 and
// symbols <= k + n + 2.
std::pair<Program, CompileStats> compile_drx_dolla(const DrxNode& e,
                                                   const std::string& alphabet = "");

// Whole-memory recall equations instead of the subroutines; bounds:
// rules <= n(n+3) + 1 and symbols <= n + 2.
std::pair<Program, CompileStats> compile_drx_dollaplus(const DrxNode& e,
                                                       const std::string& alphabet = "");

struct PspaceInstance {
  Program program;
  std::string word;  // a^n with n = max(k, |tape alphabet|)
};

// Space-bounded acceptance of the empty input as a linear program over a
// unary word: configuration relations C_q(head, cell_1..cell_k) with unary
// encodings, one rule per (transition, head position).
PspaceInstance generate_pspace_instance(const TuringSpec& t, int k);

}  // namespace fcdl
