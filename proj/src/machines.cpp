#include "fcdl/machines.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "json.hpp"

namespace fcdl {

using nlohmann::json;

std::vector<const MultiHeadAutomaton::Transition*> MultiHeadAutomaton::delta(int state,
                                                                             char sym) const {
  std::vector<const Transition*> out;
  for (auto& t : transitions)
    if (t.from == state && t.sym == sym) out.push_back(&t);
  return out;
}

namespace {

json parse_json(std::string_view text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(std::string(what) + ": malformed JSON", SourceSpan{});
  return j;
}

int state_index(const std::vector<std::string>& states, const std::string& name,
                const char* what) {
  auto it = std::find(states.begin(), states.end(), name);
  if (it == states.end())
    throw ValidationError(std::string(what) + ": unknown state '" + name + "'");
  return static_cast<int>(it - states.begin());
}

char single_char(const json& j, const char* what) {
  std::string s = j.get<std::string>();
  if (s.size() != 1) throw ValidationError(std::string(what) + ": expected a single character");
  return s[0];
}

}  // namespace

MultiHeadAutomaton parse_automaton(std::string_view text) {
  json j = parse_json(text, "automaton");
  MultiHeadAutomaton m;
  for (auto& s : j.at("states")) m.states.push_back(s.get<std::string>());
  if (m.states.empty()) throw ValidationError("automaton: empty state set");
  m.k = j.at("k").get<int>();
  if (m.k < 1) throw ValidationError("automaton: k must be >= 1");
  for (auto& a : j.at("alphabet")) m.alphabet += single_char(a, "automaton alphabet");
  if (m.alphabet.find('<') != std::string::npos || m.alphabet.find('>') != std::string::npos)
    throw ValidationError("automaton: alphabet must not contain the endmarkers");
  m.head_sel.assign(m.states.size(), 1);
  for (auto& [name, h] : j.at("headSelector").items()) {
    int idx = state_index(m.states, name, "headSelector");
    int head = h.get<int>();
    if (head < 1 || head > m.k) throw ValidationError("automaton: head index out of range");
    m.head_sel[idx] = head;
  }
  for (auto& t : j.at("transitions")) {
    MultiHeadAutomaton::Transition tr;
    tr.from = state_index(m.states, t.at("from").get<std::string>(), "transition");
    tr.sym = single_char(t.at("symbol"), "transition symbol");
    if (tr.sym != MultiHeadAutomaton::kLeftEnd && tr.sym != MultiHeadAutomaton::kRightEnd &&
        m.alphabet.find(tr.sym) == std::string::npos)
      throw ValidationError(std::string("automaton: transition on unknown symbol '") + tr.sym +
                            "'");
    tr.to = state_index(m.states, t.at("to").get<std::string>(), "transition");
    tr.move = t.at("move").get<int>();
    if (tr.move < -1 || tr.move > 1) throw ValidationError("automaton: move must be -1, 0 or 1");
    if (tr.sym == MultiHeadAutomaton::kLeftEnd && tr.move < 0)
      throw ValidationError("automaton: transition moves left on the left endmarker");
    if (tr.sym == MultiHeadAutomaton::kRightEnd && tr.move > 0)
      throw ValidationError("automaton: transition moves right on the right endmarker");
    m.transitions.push_back(tr);
  }
  m.start = state_index(m.states, j.at("start").get<std::string>(), "start");
  m.accept = state_index(m.states, j.at("accept").get<std::string>(), "accept");
  std::map<std::pair<int, char>, int> fanout;
  m.deterministic = true;
  for (auto& t : m.transitions)
    if (++fanout[{t.from, t.sym}] > 1) m.deterministic = false;
  return m;
}

bool simulate_automaton(const MultiHeadAutomaton& m, std::string_view w) {
  // positions over the tape ¢ w $: 0 = ¢, 1..|w| = letters, |w|+1 = $
  const int right = static_cast<int>(w.size()) + 1;
  using Config = std::vector<int>;  // state followed by k head positions
  Config start(1 + m.k, 0);
  start[0] = m.start;
  std::set<Config> seen;
  std::vector<Config> stack{start};
  seen.insert(start);
  while (!stack.empty()) {
    Config c = stack.back();
    stack.pop_back();
    int q = c[0];
    if (q == m.accept) return true;
    int h = m.head_sel[q];
    int pos = c[h];
    char sym = pos == 0       ? MultiHeadAutomaton::kLeftEnd
               : pos == right ? MultiHeadAutomaton::kRightEnd
                              : w[pos - 1];
    for (auto* t : m.delta(q, sym)) {
      Config n = c;
      n[0] = t->to;
      n[h] = pos + t->move;
      if (n[h] < 0 || n[h] > right) continue;
      if (seen.insert(n).second) stack.push_back(n);
    }
  }
  return false;
}

const TuringSpec::Step* TuringSpec::find(int state, char read) const {
  for (auto& s : delta)
    if (s.state == state && s.read == read) return &s;
  return nullptr;
}

TuringSpec parse_turing(std::string_view text) {
  json j = parse_json(text, "turing");
  TuringSpec t;
  for (auto& s : j.at("states")) t.states.push_back(s.get<std::string>());
  for (auto& a : j.at("tape")) t.tape += single_char(a, "tape alphabet");
  t.blank = single_char(j.at("blank"), "blank");
  if (t.tape.find(t.blank) == std::string::npos)
    throw ValidationError("turing: blank symbol not in tape alphabet");
  std::set<std::pair<int, char>> seen;
  for (auto& d : j.at("delta")) {
    TuringSpec::Step s;
    s.state = state_index(t.states, d.at("state").get<std::string>(), "delta");
    s.read = single_char(d.at("read"), "delta read");
    s.to = state_index(t.states, d.at("to").get<std::string>(), "delta");
    s.write = single_char(d.at("write"), "delta write");
    std::string mv = d.at("move").get<std::string>();
    if (mv == "L")
      s.move = -1;
    else if (mv == "R")
      s.move = 1;
    else
      throw ValidationError("turing: move must be \"L\" or \"R\"");
    if (t.tape.find(s.read) == std::string::npos || t.tape.find(s.write) == std::string::npos)
      throw ValidationError("turing: delta uses a symbol outside the tape alphabet");
    if (!seen.insert({s.state, s.read}).second)
      throw ValidationError("turing: nondeterministic transition table");
    t.delta.push_back(s);
  }
  t.start = state_index(t.states, j.at("start").get<std::string>(), "start");
  if (!j.contains("omega")) throw ValidationError("turing: missing omega state");
  t.omega = state_index(t.states, j.at("omega").get<std::string>(), "omega");
  return t;
}

bool simulate_turing_space(const TuringSpec& t, int k) {
  if (k < 1) throw UsageError("simulate_turing_space: k must be >= 1");
  std::string tape(static_cast<size_t>(k), t.blank);
  int head = 1;  // cells are 1..k
  int state = t.start;
  std::set<std::tuple<int, int, std::string>> seen;
  for (;;) {
    if (state == t.omega)
      return head == 1 && tape == std::string(static_cast<size_t>(k), t.blank);
    if (!seen.insert({state, head, tape}).second) return false;  // configuration cycle
    const TuringSpec::Step* s = t.find(state, tape[head - 1]);
    if (!s) return false;  // stuck
    tape[head - 1] = s->write;
    head += s->move;
    state = s->to;
    if (head < 1 || head > k) return false;  // leaves the allowed space
  }
}

}  // namespace fcdl
