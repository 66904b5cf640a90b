#include "fcdl/glushkov.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "fcdl/base.hpp"

namespace fcdl {

std::vector<int> PositionAutomaton::first_targets() const {
  std::vector<int> out;
  for (auto& e : first) out.push_back(e.to);
  return out;
}

std::vector<int> PositionAutomaton::follow_targets(int pos) const {
  std::vector<int> out;
  for (auto& e : follow[pos]) out.push_back(e.to);
  return out;
}

namespace {

struct GlushkovBuilder {
  PositionAutomaton pa;
  std::vector<std::string> open_stack;
  int iter_depth = 0;

  int memory_index(const std::string& name) {
    for (size_t i = 0; i < pa.memories.size(); i++)
      if (pa.memories[i] == name) return static_cast<int>(i);
    pa.memories.push_back(name);
    return static_cast<int>(pa.memories.size() - 1);
  }

  struct Part {
    bool nullable = false;
    std::vector<int> first, last;
  };

  static void merge(std::vector<int>& v, const std::vector<int>& add) {
    for (int x : add)
      if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
  }

  // Memories open at `to` but not at the operator that creates the edge are
  // entered through it and restart from scratch.
  std::vector<int> reset_set(int to) {
    std::vector<int> here;
    for (auto& m : open_stack) here.push_back(memory_index(m));
    std::vector<int> reset;
    for (int m : pa.positions[to].open)
      if (std::find(here.begin(), here.end(), m) == here.end()) reset.push_back(m);
    return reset;
  }

  void add_edge(std::vector<PositionAutomaton::Edge>& edges, int to) {
    PositionAutomaton::Edge e{to, reset_set(to)};
    for (auto& ex : edges)
      if (ex.to == e.to && ex.reset == e.reset) return;
    edges.push_back(std::move(e));
  }

  void link(const std::vector<int>& lasts, const std::vector<int>& firsts) {
    for (int l : lasts)
      for (int f : firsts) add_edge(pa.follow[l], f);
  }

  Part build(const DrxNode& e) {
    switch (e.kind) {
      case DrxNode::Kind::Terminal:
      case DrxNode::Kind::Recall: {
        PositionAutomaton::Position pos;
        pos.is_recall = e.kind == DrxNode::Kind::Recall;
        if (pos.is_recall)
          pos.memory = memory_index(e.memory);
        else
          pos.sym = e.sym;
        for (auto& m : open_stack) pos.open.push_back(memory_index(m));
        std::sort(pos.open.begin(), pos.open.end());
        pa.positions.push_back(pos);
        pa.follow.emplace_back();
        int id = pa.n() - 1;
        return Part{false, {id}, {id}};
      }
      case DrxNode::Kind::Concat: {
        Part acc = build(*e.children[0]);
        for (size_t i = 1; i < e.children.size(); i++) {
          Part next = build(*e.children[i]);
          link(acc.last, next.first);
          Part merged;
          merged.nullable = acc.nullable && next.nullable;
          merged.first = acc.first;
          if (acc.nullable) merge(merged.first, next.first);
          merged.last = next.last;
          if (next.nullable) merge(merged.last, acc.last);
          acc = merged;
        }
        return acc;
      }
      case DrxNode::Kind::Union: {
        Part a = build(*e.children[0]);
        Part b = build(*e.children[1]);
        Part m;
        m.nullable = a.nullable || b.nullable;
        m.first = a.first;
        merge(m.first, b.first);
        m.last = a.last;
        merge(m.last, b.last);
        return m;
      }
      case DrxNode::Kind::Plus:
      case DrxNode::Kind::Star: {
        iter_depth++;
        Part c = build(*e.children[0]);
        iter_depth--;
        link(c.last, c.first);
        Part m = c;
        if (e.kind == DrxNode::Kind::Star) m.nullable = true;
        return m;
      }
      case DrxNode::Kind::Bind: {
        if (iter_depth > 0) pa.bind_under_iteration = true;
        open_stack.push_back(e.memory);
        Part c = build(*e.children[0]);
        open_stack.pop_back();
        return c;
      }
    }
    throw InternalError("glushkov: unreachable");
  }
};

std::string set_problem(const PositionAutomaton& pa,
                        const std::vector<PositionAutomaton::Edge>& edges,
                        const std::string& where) {
  std::map<char, int> letters;
  int recalls = 0;
  for (auto& e : edges) {
    if (pa.positions[e.to].is_recall)
      recalls++;
    else
      letters[pa.positions[e.to].sym]++;
  }
  for (auto& [c, cnt] : letters)
    if (cnt > 1)
      return std::string("letter '") + c + "' can be read " + std::to_string(cnt) +
             " ways in the " + where;
  if (recalls > 0 && edges.size() > 1)
    return "a recall shares the " + where + " with other positions";
  return "";
}

}  // namespace

PositionAutomaton drx_position_automaton(const DrxNode& e) {
  GlushkovBuilder b;
  // reserve: positions get created during build; open sets need positions
  auto part = b.build(e);
  b.pa.nullable = part.nullable;
  // start edges reset everything they enter
  {
    std::vector<std::string> saved = b.open_stack;
    b.open_stack.clear();
    for (int f : part.first) b.add_edge(b.pa.first, f);
    b.open_stack = saved;
  }
  b.pa.last.insert(part.last.begin(), part.last.end());
  return b.pa;
}

DrxDetReport drx_check_deterministic(const DrxNode& e) {
  PositionAutomaton pa = drx_position_automaton(e);
  std::string msg = set_problem(pa, pa.first, "first set");
  if (!msg.empty()) return {false, msg};
  for (int i = 0; i < pa.n(); i++) {
    msg = set_problem(pa, pa.follow[i], "follow set of position " + std::to_string(i));
    if (!msg.empty()) return {false, msg};
  }
  return {true, ""};
}

bool drx_match(const DrxNode& e, std::string_view w) {
  DrxDetReport det = drx_check_deterministic(e);
  if (!det.deterministic)
    throw UsageError("drx_match: expression is not deterministic: " + det.reason);
  PositionAutomaton pa = drx_position_automaton(e);

  std::vector<std::string> mem(pa.memories.size());
  int at = -1;  // -1 = start
  size_t i = 0;
  // epsilon recalls make zero-progress steps possible; bound the walk
  size_t step_limit = (w.size() + 2) * (pa.positions.size() + 2);
  for (size_t steps = 0; steps <= step_limit; steps++) {
    if (i == w.size() && (at < 0 ? pa.nullable : pa.last.count(at) > 0)) return true;
    const auto& succ = at < 0 ? pa.first : pa.follow[at];
    const PositionAutomaton::Edge* chosen = nullptr;
    std::string consumed;
    for (auto& edge : succ) {
      const auto& pos = pa.positions[edge.to];
      if (pos.is_recall) {
        const std::string& content = mem[pos.memory];
        if (w.compare(i, content.size(), content) == 0) {
          chosen = &edge;
          consumed = content;
        }
      } else if (i < w.size() && w[i] == pos.sym) {
        chosen = &edge;
        consumed = pos.sym;
      }
      if (chosen) break;  // determinism: at most one applies
    }
    if (!chosen) return false;
    const auto& pos = pa.positions[chosen->to];
    for (int m : chosen->reset) mem[m].clear();
    for (int m : pos.open) mem[m] += consumed;
    at = chosen->to;
    i += consumed.size();
  }
  return false;  // pathological epsilon-recall cycle
}

namespace {

struct BruteState {
  size_t pos;
  std::vector<std::string> mem;
  bool operator<(const BruteState& o) const {
    return pos != o.pos ? pos < o.pos : mem < o.mem;
  }
};

// Set-of-states semantics: all (input position, memory contents) reachable
// after matching `e` starting from each state in `in`.
std::set<BruteState> brute(const DrxNode& e, std::string_view w,
                           const std::vector<std::string>& memories,
                           const std::set<BruteState>& in) {
  std::set<BruteState> out;
  auto mem_index = [&](const std::string& name) {
    for (size_t i = 0; i < memories.size(); i++)
      if (memories[i] == name) return static_cast<int>(i);
    return -1;
  };
  switch (e.kind) {
    case DrxNode::Kind::Terminal:
      for (auto& s : in)
        if (s.pos < w.size() && w[s.pos] == e.sym) {
          BruteState n = s;
          n.pos++;
          out.insert(n);
        }
      break;
    case DrxNode::Kind::Recall:
      for (auto& s : in) {
        int m = mem_index(e.memory);
        const std::string content = m < 0 ? std::string() : s.mem[m];
        if (w.compare(s.pos, content.size(), content) == 0) {
          BruteState n = s;
          n.pos += content.size();
          out.insert(n);
        }
      }
      break;
    case DrxNode::Kind::Concat: {
      std::set<BruteState> cur = in;
      for (auto& c : e.children) cur = brute(*c, w, memories, cur);
      out = cur;
      break;
    }
    case DrxNode::Kind::Union: {
      out = brute(*e.children[0], w, memories, in);
      auto b = brute(*e.children[1], w, memories, in);
      out.insert(b.begin(), b.end());
      break;
    }
    case DrxNode::Kind::Plus:
    case DrxNode::Kind::Star: {
      if (e.kind == DrxNode::Kind::Star) out = in;
      std::set<BruteState> frontier = brute(*e.children[0], w, memories, in);
      out.insert(frontier.begin(), frontier.end());
      while (!frontier.empty()) {
        std::set<BruteState> next = brute(*e.children[0], w, memories, frontier);
        frontier.clear();
        for (auto& s : next)
          if (out.insert(s).second) frontier.insert(s);
      }
      break;
    }
    case DrxNode::Kind::Bind: {
      int m = mem_index(e.memory);
      // the saved content is exactly the region the body consumed
      for (auto& s : in) {
        std::set<BruteState> sub = brute(*e.children[0], w, memories, {s});
        for (auto r : sub) {
          r.mem[m] = std::string(w.substr(s.pos, r.pos - s.pos));
          out.insert(r);
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace

bool drx_match_bruteforce(const DrxNode& e, std::string_view w, size_t max_len) {
  if (w.size() > max_len)
    throw BudgetError("drx_match_bruteforce: word longer than the configured bound");
  std::vector<std::string> memories = drx_memory_names(e);
  BruteState init{0, std::vector<std::string>(memories.size())};
  auto states = brute(e, w, memories, {init});
  for (auto& s : states)
    if (s.pos == w.size()) return true;
  return false;
}

}  // namespace fcdl
