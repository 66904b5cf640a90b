#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fcdl/base.hpp"

namespace fcdl {

// Two-way finite automaton with k heads over a tape ¢w$. Heads start on the
// left endmarker. In transitions the endmarkers are spelled '<' and '>'.
struct MultiHeadAutomaton {
  static constexpr char kLeftEnd = '<';
  static constexpr char kRightEnd = '>';

  std::vector<std::string> states;
  int k = 1;
  std::string alphabet;
  std::vector<int> head_sel;  // per state, head index in 1..k
  struct Transition {
    int from = -1;
    char sym = 0;  // alphabet symbol, '<' or '>'
    int to = -1;
    int move = 0;  // -1, 0, +1
  };
  std::vector<Transition> transitions;
  int start = -1;
  int accept = -1;
  bool deterministic = false;  // computed: every (state, symbol) has <= 1 choice

  std::vector<const Transition*> delta(int state, char sym) const;
};

// {"states":[...], "k":n, "alphabet":[...], "headSelector":{state:int},
//  "transitions":[{"from":s,"symbol":c|"<"|">","to":s,"move":-1|0|1}],
//  "start":s, "accept":s}
MultiHeadAutomaton parse_automaton(std::string_view json_text);

// Configuration search with a visited set; the reference semantics for the
// compiled programs. Head positions range over the full tape ¢w$.
bool simulate_automaton(const MultiHeadAutomaton& m, std::string_view w);

// Deterministic single-tape machine with a distinguished halting state Omega;
// accepts iff it halts in Omega with a blank tape and the head leftmost.
struct TuringSpec {
  std::vector<std::string> states;
  std::string tape;  // tape alphabet, includes the blank
  char blank = '_';
  struct Step {
    int state = -1;
    char read = 0;
    int to = -1;
    char write = 0;
    int move = 0;  // -1 = L, +1 = R
  };
  std::vector<Step> delta;
  int start = -1;
  int omega = -1;

  const Step* find(int state, char read) const;
};

// {"states":[...], "tape":[...], "blank":c,
//  "delta":[{"state":s,"read":c,"to":s,"write":c,"move":"L"|"R"}],
//  "start":s, "omega":s}
TuringSpec parse_turing(std::string_view json_text);

// Runs the machine on the empty input within tape cells 1..k; detects
// configuration cycles and rejects runs that leave the allowed space.
bool simulate_turing_space(const TuringSpec& t, int k);

}  // namespace fcdl
