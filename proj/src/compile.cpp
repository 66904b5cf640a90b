#include "fcdl/compile.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "fcdl/glushkov.hpp"
#include "json.hpp"

namespace fcdl {

std::string CompileStats::to_json() const {
  return nlohmann::json{{"k", k},

                        {"n", n},
                        {"rules", rules},
                        {"symbols", symbols},
                        {"boundRules", bound_rules},
                        {"boundSymbols", bound_symbols}}
      .dump(2);
}

namespace {

// Mask of heads currently parked on the left endmarker; a head's position is
// otherwise the prefix of w strictly left of its scanned cell, so prefix
// epsilon doubles as "scanning the first letter" and prefix w as "scanning $".
struct StateMask {
  int state;
  uint32_t mask;
  bool operator<(const StateMask& o) const {
    return state != o.state ? state < o.state : mask < o.mask;
  }
};

std::string qm_name(int state, uint32_t mask) {
  std::string n = "Q" + std::to_string(state);
  if (mask) n += "C" + std::to_string(mask);
  return n;
}

}  // namespace

Program compile_2nfa(const MultiHeadAutomaton& m) {
  ProgramBuilder b;
  b.declare_alphabet(m.alphabet);
  SymId ans = b.rel("Ans", 0);
  (void)ans;
  const int k = m.k;
  const uint32_t full = (1u << k) - 1;

  // discover reachable (state, mask) configurations; F is a pure sink
  std::set<StateMask> reachable;
  std::vector<StateMask> queue;
  auto visit = [&](int q, uint32_t mask) {
    if (q == m.accept) return;
    if (reachable.insert({q, mask}).second) queue.push_back({q, mask});
  };
  visit(m.start, full);
  while (!queue.empty()) {
    StateMask sm = queue.back();
    queue.pop_back();
    int h = m.head_sel[sm.state];  // 1-based
    uint32_t hbit = 1u << (h - 1);
    if (sm.mask & hbit) {
      for (auto* t : m.delta(sm.state, MultiHeadAutomaton::kLeftEnd))
        visit(t->to, t->move > 0 ? sm.mask & ~hbit : sm.mask);
    } else {
      for (char a : m.alphabet)
        for (auto* t : m.delta(sm.state, a)) {
          if (t->move < 0) {
            visit(t->to, sm.mask);          // strip a letter off the prefix
            visit(t->to, sm.mask | hbit);   // or step from the first cell onto the marker
          } else {
            visit(t->to, sm.mask);
          }
        }
      for (auto* t : m.delta(sm.state, MultiHeadAutomaton::kRightEnd)) visit(t->to, sm.mask);
    }
  }

  std::map<StateMask, SymId> rel_of;
  for (auto& sm : reachable) rel_of[sm] = b.rel(qm_name(sm.state, sm.mask), k);

  std::vector<VarId> xs, ys;
  for (int i = 1; i <= k; i++) xs.push_back(b.var("x" + std::to_string(i)));
  for (int i = 1; i <= k; i++) ys.push_back(b.var("y" + std::to_string(i)));
  VarId z = b.var("z");
  VarId univ = b.p.universe;

  // emits one rule for a (state,mask) transition; accepting targets drop the
  // body atom but keep every equation
  auto emit = [&](StateMask from, int to_state, uint32_t to_mask, std::vector<Atom> eqs,
                  int moved_head, const std::optional<Atom>& move_eq) {
    std::vector<Atom> body;
    if (to_state != m.accept) {
      auto it = rel_of.find({to_state, to_mask});
      if (it == rel_of.end()) return;  // unreachable successor
      body.push_back(RelationAtom{it->second, ys, {}});
    }
    for (auto& e : eqs) body.push_back(e);
    if (move_eq) body.push_back(*move_eq);
    for (int j = 1; j <= k; j++) {
      if (j == moved_head) continue;
      body.push_back(PatternEquation{ys[j - 1], Pattern().v(xs[j - 1]), {}});
    }
    b.rule(rel_of.at(from), xs, std::move(body));
  };

  for (auto& sm : reachable) {
    int q = sm.state;
    int h = m.head_sel[q];
    uint32_t hbit = 1u << (h - 1);
    VarId xh = xs[h - 1], yh = ys[h - 1];

    if (sm.mask & hbit) {
      // scanning the left endmarker
      for (auto* t : m.delta(q, MultiHeadAutomaton::kLeftEnd)) {
        uint32_t to_mask = t->move > 0 ? sm.mask & ~hbit : sm.mask;
        std::vector<Atom> eqs{PatternEquation{xh, Pattern(), {}}};  // x_h = ''
        emit(sm, t->to, to_mask, eqs, h, Atom{PatternEquation{yh, Pattern().v(xh), {}}});
      }
      continue;
    }
    for (char a : m.alphabet) {
      for (auto* t : m.delta(q, a)) {
        std::vector<Atom> eqs{
            PatternEquation{univ, Pattern().v(xh).t(a).v(z), {}}};  // univ = x_h a z
        if (t->move > 0) {
          emit(sm, t->to, sm.mask, eqs, h,
               Atom{PatternEquation{yh, Pattern().v(xh).t(a), {}}});  // y_h = x_h a
        } else if (t->move == 0) {
          emit(sm, t->to, sm.mask, eqs, h, Atom{PatternEquation{yh, Pattern().v(xh), {}}});
        } else {
          // strip the letter left of the head, one rule per possibility
          for (char bch : m.alphabet)
            emit(sm, t->to, sm.mask, eqs, h,
                 Atom{PatternEquation{xh, Pattern().v(yh).t(bch), {}}});  // x_h = y_h b
          // or the head was on the first letter and steps onto the marker
          std::vector<Atom> eqs2 = eqs;
          eqs2.push_back(PatternEquation{xh, Pattern(), {}});
          emit(sm, t->to, sm.mask | hbit, eqs2, h,
               Atom{PatternEquation{yh, Pattern().v(xh), {}}});
        }
      }
    }
    for (auto* t : m.delta(q, MultiHeadAutomaton::kRightEnd)) {
      // scanning $ <=> the prefix is the whole word
      std::vector<Atom> eqs{PatternEquation{xh, Pattern().v(univ), {}}};  // x_h = univ
      if (t->move == 0) {
        emit(sm, t->to, sm.mask, eqs, h, Atom{PatternEquation{yh, Pattern().v(xh), {}}});
      } else {
        for (char bch : m.alphabet)
          emit(sm, t->to, sm.mask, eqs, h,
               Atom{PatternEquation{xh, Pattern().v(yh).t(bch), {}}});
        // moving from $ onto the marker only happens on the empty word, which
        // the direct epsilon rule below already covers
      }
    }
  }

  // Initialization: all heads on the left endmarker. The epsilon special
  // case is decided by direct simulation; when the extra Ans() <- univ = ''
  // rule is included, the initialization is split by first letter so the Ans
  // rules stay pairwise disjoint.
  bool accepts_epsilon = simulate_automaton(m, "");
  auto init_rule = [&](std::optional<char> first_letter) {
    std::vector<Atom> body;
    if (m.start != m.accept) {
      std::vector<VarId> es;
      for (int i = 1; i <= k; i++) es.push_back(b.var("e" + std::to_string(i)));
      body.push_back(RelationAtom{rel_of.at({m.start, full}), es, {}});
      for (VarId e : es) body.push_back(PatternEquation{e, Pattern(), {}});
    }
    if (first_letter)
      body.push_back(PatternEquation{univ, Pattern().t(*first_letter).v(z), {}});
    if (body.empty()) body.push_back(PatternEquation{b.var("e1"), Pattern(), {}});
    b.rule(b.rel("Ans", 0), {}, std::move(body));
  };
  if (accepts_epsilon) {
    for (char a : m.alphabet) init_rule(a);
    b.rule(b.rel("Ans", 0), {}, {PatternEquation{univ, Pattern(), {}}});
  } else {
    init_rule(std::nullopt);
  }

  return b.finish(true);
}

Program compile_2dfa(const MultiHeadAutomaton& m) {
  if (!m.deterministic) throw UsageError("compile_2dfa: automaton is nondeterministic");
  return compile_2nfa(m);
}

// ---- deterministic regex compilation -------------------------------------

namespace {

struct DrxCompileCommon {
  PositionAutomaton pa;
  std::string sigma;

  DrxCompileCommon(const DrxNode& e, const std::string& alphabet) {
    DrxDetReport det = drx_check_deterministic(e);
    if (!det.deterministic)
      throw UsageError("compile_drx: expression is not deterministic: " + det.reason);
    pa = drx_position_automaton(e);
    if (pa.bind_under_iteration)
      throw UsageError(
          "compile_drx: a memory is bound under iteration; such expressions re-save memories "
          "and are excluded by the usual normalization");
    for (auto& pos : pa.positions)
      if (pos.is_recall &&
          std::find(pos.open.begin(), pos.open.end(), pos.memory) != pos.open.end())
        throw UsageError("compile_drx: memory recalled while being saved");
    std::set<char> s;
    std::string terms = alphabet;
    for (char c : terms) s.insert(c);
    for (auto& pos : pa.positions)
      if (!pos.is_recall) s.insert(pos.sym);
    sigma.assign(s.begin(), s.end());
  }
};

CompileStats finish_stats(const Program& p, const DrxCompileCommon& c, bool dolla_plus) {
  CompileStats st;
  st.k = c.pa.k();
  st.n = c.pa.n();
  st.rules = static_cast<int>(p.rules.size());
  st.symbols = static_cast<int>(p.relations.size());
  int sig = static_cast<int>(c.sigma.size());
  st.bound_rules = dolla_plus ? st.n * (st.n + 3) + 1 : st.k * (sig + 1) + st.n * (st.n + 3) + 1;
  st.bound_symbols = dolla_plus ? st.n + 2 : st.k + st.n + 2;
  if (st.rules > st.bound_rules || st.symbols > st.bound_symbols)
    throw InternalError("compile_drx: construction exceeded its size bounds");
  return st;
}

}  // namespace

std::pair<Program, CompileStats> compile_drx_dollaplus(const DrxNode& e,
                                                       const std::string& alphabet) {
  DrxCompileCommon c(e, alphabet);
  const PositionAutomaton& pa = c.pa;
  const int k = pa.k();
  ProgramBuilder b;
  b.declare_alphabet(c.sigma);
  b.rel("Ans", 0);
  std::vector<SymId> Q(pa.n() + 1);
  for (int i = 0; i <= pa.n(); i++) Q[i] = b.rel("Q" + std::to_string(i), 1 + k);

  VarId u = b.var("u"), v = b.var("v");
  std::vector<VarId> mem, nmem;
  for (int i = 1; i <= k; i++) mem.push_back(b.var("m" + std::to_string(i)));
  for (int i = 1; i <= k; i++) nmem.push_back(b.var("n" + std::to_string(i)));

  std::vector<VarId> head_args{u};
  for (VarId m : mem) head_args.push_back(m);

  // one transition rule: reading position `dst` out of state `src` (src 0 is
  // the start); memories open at dst absorb what was consumed
  auto transition = [&](int src, int dst) {
    const auto& pos = pa.positions[dst];
    std::vector<VarId> body_args{v};
    std::vector<Atom> eqs;
    for (int i = 0; i < k; i++) {
      bool written = std::find(pos.open.begin(), pos.open.end(), i) != pos.open.end();
      body_args.push_back(written ? nmem[i] : mem[i]);
    }
    if (!pos.is_recall) {
      eqs.push_back(PatternEquation{u, Pattern().t(pos.sym).v(v), {}});  // u = a v
      for (int i : pos.open)
        eqs.push_back(PatternEquation{nmem[i], Pattern().v(mem[i]).t(pos.sym), {}});
    } else {
      VarId g = mem[pos.memory];
      eqs.push_back(PatternEquation{u, Pattern().v(g).v(v), {}});  // u = m_g v
      for (int i : pos.open)
        eqs.push_back(PatternEquation{nmem[i], Pattern().v(mem[i]).v(g), {}});
    }
    std::vector<Atom> body{RelationAtom{Q[dst + 1], body_args, {}}};
    for (auto& eq : eqs) body.push_back(eq);
    b.rule(Q[src], head_args, std::move(body));
  };

  for (auto& edge : pa.first) transition(0, edge.to);
  for (int p0 = 0; p0 < pa.n(); p0++)
    for (auto& edge : pa.follow[p0]) transition(p0 + 1, edge.to);

  // final rules: the remaining input is exhausted; memories are dead but
  // still need a body occurrence
  auto final_rule = [&](int state) {
    std::vector<Atom> body{PatternEquation{u, Pattern(), {}}};
    for (int i = 0; i < k; i++) {
      VarId ei = b.var("e" + std::to_string(i + 1));
      body.push_back(PatternEquation{ei, Pattern().v(mem[i]), {}});
    }
    b.rule(Q[state], head_args, std::move(body));
  };
  for (int lastpos : pa.last) final_rule(lastpos + 1);
  if (pa.nullable) final_rule(0);

  // initialization: the whole word remains, all memories empty
  {
    std::vector<VarId> args{u};
    for (VarId m : mem) args.push_back(m);
    std::vector<Atom> body{RelationAtom{Q[0], args, {}},
                           PatternEquation{u, Pattern().v(b.p.universe), {}}};
    for (VarId m : mem) body.push_back(PatternEquation{m, Pattern(), {}});
    b.rule(b.rel("Ans", 0), {}, std::move(body));
  }

  Program prog = b.finish(true);
  CompileStats st = finish_stats(prog, c, true);
  return {std::move(prog), st};
}

std::pair<Program, CompileStats> compile_drx_dolla(const DrxNode& e, const std::string& alphabet) {
  DrxCompileCommon c(e, alphabet);
  const PositionAutomaton& pa = c.pa;
  const int k = pa.k();
  ProgramBuilder b;
  b.declare_alphabet(c.sigma);
  b.rel("Ans", 0);
  std::vector<SymId> Q(pa.n() + 1);
  for (int i = 0; i <= pa.n(); i++) Q[i] = b.rel("Q" + std::to_string(i), 1 + k);

  VarId u = b.var("u"), v = b.var("v");
  std::vector<VarId> mem, nmem;
  for (int i = 1; i <= k; i++) mem.push_back(b.var("m" + std::to_string(i)));
  for (int i = 1; i <= k; i++) nmem.push_back(b.var("n" + std::to_string(i)));
  std::vector<VarId> head_args{u};
  for (VarId m : mem) head_args.push_back(m);

  // letter-by-letter memory copy subroutines, one family per open count
  std::set<int> used_l;
  auto subroutine = [&](int l) {
    used_l.insert(l);
    return b.rel("R" + std::to_string(l), 3 + 2 * l);
  };

  auto transition = [&](int src, int dst) {
    const auto& pos = pa.positions[dst];
    std::vector<VarId> body_args{v};
    std::vector<Atom> eqs;
    for (int i = 0; i < k; i++) {
      bool written = std::find(pos.open.begin(), pos.open.end(), i) != pos.open.end();
      body_args.push_back(written ? nmem[i] : mem[i]);
    }
    std::vector<Atom> body{RelationAtom{Q[dst + 1], body_args, {}}};
    if (!pos.is_recall) {
      body.push_back(PatternEquation{u, Pattern().t(pos.sym).v(v), {}});
      for (int i : pos.open)
        body.push_back(PatternEquation{nmem[i], Pattern().v(mem[i]).t(pos.sym), {}});
    } else {
      int l = static_cast<int>(pos.open.size());
      SymId R = subroutine(l);
      std::vector<VarId> sub_args{u, v, mem[pos.memory]};
      for (int i : pos.open) {
        sub_args.push_back(mem[i]);
        sub_args.push_back(nmem[i]);
      }
      body.push_back(RelationAtom{R, sub_args, {}});
    }
    b.rule(Q[src], head_args, std::move(body));
  };

  for (auto& edge : pa.first) transition(0, edge.to);
  for (int p0 = 0; p0 < pa.n(); p0++)
    for (auto& edge : pa.follow[p0]) transition(p0 + 1, edge.to);

  auto final_rule = [&](int state) {
    std::vector<Atom> body{PatternEquation{u, Pattern(), {}}};
    for (int i = 0; i < k; i++) {
      VarId ei = b.var("e" + std::to_string(i + 1));
      body.push_back(PatternEquation{ei, Pattern().v(mem[i]), {}});
    }
    b.rule(Q[state], head_args, std::move(body));
  };
  for (int lastpos : pa.last) final_rule(lastpos + 1);
  if (pa.nullable) final_rule(0);

  {
    std::vector<VarId> args{u};
    for (VarId m : mem) args.push_back(m);
    std::vector<Atom> body{RelationAtom{Q[0], args, {}},
                           PatternEquation{u, Pattern().v(b.p.universe), {}}};
    for (VarId m : mem) body.push_back(PatternEquation{m, Pattern(), {}});
    b.rule(b.rel("Ans", 0), {}, std::move(body));
  }

  // the R_l rule families: consume the recalled memory letter by letter,
  // appending to the l memories that are open across the recall
  for (int l : used_l) {
    SymId R = b.rel("R" + std::to_string(l), 3 + 2 * l);
    VarId su = b.var("u"), sv = b.var("v"), g = b.var("g");
    VarId su2 = b.var("u2"), g2 = b.var("g2");
    std::vector<VarId> ts, bs, t2s;
    for (int i = 1; i <= l; i++) {
      ts.push_back(b.var("t" + std::to_string(i)));
      bs.push_back(b.var("b" + std::to_string(i)));
      t2s.push_back(b.var("t" + std::to_string(i) + "n"));
    }
    std::vector<VarId> head{su, sv, g};
    for (int i = 0; i < l; i++) {
      head.push_back(ts[i]);
      head.push_back(bs[i]);
    }
    for (char a : c.sigma) {
      std::vector<VarId> rec{su2, sv, g2};
      for (int i = 0; i < l; i++) {
        rec.push_back(t2s[i]);
        rec.push_back(bs[i]);
      }
      std::vector<Atom> body{RelationAtom{R, rec, {}},
                             PatternEquation{g, Pattern().t(a).v(g2), {}},
                             PatternEquation{su, Pattern().t(a).v(su2), {}}};
      for (int i = 0; i < l; i++)
        body.push_back(PatternEquation{t2s[i], Pattern().v(ts[i]).t(a), {}});
      b.rule(R, head, std::move(body));
    }
    std::vector<Atom> base{PatternEquation{g, Pattern(), {}},
                           PatternEquation{su, Pattern().v(sv), {}}};
    for (int i = 0; i < l; i++)
      base.push_back(PatternEquation{ts[i], Pattern().v(bs[i]), {}});
    b.rule(R, head, std::move(base));
  }

  Program prog = b.finish(true);
  CompileStats st = finish_stats(prog, c, false);
  return {std::move(prog), st};
}

PspaceInstance generate_pspace_instance(const TuringSpec& t, int k) {
  if (k < 1) throw UsageError("generate_pspace_instance: k must be >= 1");
  int gamma = static_cast<int>(t.tape.size());
  int n = std::max(k, gamma);
  PspaceInstance out;
  out.word.assign(static_cast<size_t>(n), 'a');

  // unary codes: tape symbol i -> a^(i+1), head position p -> a^(p-1)
  auto code_of = [&](char sym) {
    return static_cast<int>(t.tape.find(sym)) + 1;
  };
  auto unary = [&](int len) {
    Pattern p;
    for (int i = 0; i < len; i++) p.t('a');
    return p;
  };

  ProgramBuilder b;
  b.declare_alphabet("a");
  b.rel("Ans", 0);
  std::vector<SymId> C(t.states.size());
  for (size_t q = 0; q < t.states.size(); q++)
    C[q] = b.rel("C" + std::to_string(q), 1 + k);

  VarId h = b.var("h"), h2 = b.var("h2");
  std::vector<VarId> cs, ds;
  for (int j = 1; j <= k; j++) cs.push_back(b.var("c" + std::to_string(j)));
  for (int j = 1; j <= k; j++) ds.push_back(b.var("d" + std::to_string(j)));
  std::vector<VarId> head_args{h};
  for (VarId cj : cs) head_args.push_back(cj);

  // initialization: blank tape, head leftmost
  {
    std::vector<VarId> args{h};
    for (VarId cj : cs) args.push_back(cj);
    std::vector<Atom> body{RelationAtom{C[t.start], args, {}},
                           PatternEquation{h, Pattern(), {}}};
    for (VarId cj : cs) body.push_back(PatternEquation{cj, unary(code_of(t.blank)), {}});
    b.rule(b.rel("Ans", 0), {}, std::move(body));
  }

  // one rule per (transition, head position) that stays inside the k cells
  for (auto& step : t.delta) {
    if (step.state == t.omega) continue;  // omega halts
    for (int i = 1; i <= k; i++) {
      int to = i + step.move;
      if (to < 1 || to > k) continue;
      std::vector<VarId> body_args{h2};
      for (VarId dj : ds) body_args.push_back(dj);
      std::vector<Atom> body{RelationAtom{C[step.to], body_args, {}},
                             PatternEquation{h, unary(i - 1), {}},
                             PatternEquation{h2, unary(to - 1), {}},
                             PatternEquation{cs[i - 1], unary(code_of(step.read)), {}},
                             PatternEquation{ds[i - 1], unary(code_of(step.write)), {}}};
      for (int j = 1; j <= k; j++) {
        if (j == i) continue;
        body.push_back(PatternEquation{cs[j - 1], Pattern().v(ds[j - 1]), {}});
      }
      b.rule(C[step.state], head_args, std::move(body));
    }
  }

  // accepting rule: halt state with a blank tape, head leftmost
  {
    std::vector<Atom> body{PatternEquation{h, Pattern(), {}}};
    for (VarId cj : cs) body.push_back(PatternEquation{cj, unary(code_of(t.blank)), {}});
    b.rule(C[t.omega], head_args, std::move(body));
  }

  out.program = b.finish(true);
  return out;
}

}  // namespace fcdl
