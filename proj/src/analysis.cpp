#include "fcdl/analysis.hpp"

#include <algorithm>
#include <functional>

#include "fcdl/factors.hpp"
#include "fcdl/glushkov.hpp"
#include "json.hpp"

namespace fcdl {

bool DependencyInfo::mutually_recursive(SymId a, SymId b) const {
  if (a == b) return self_cycle[a];
  return scc[a] == scc[b] && scc_size[scc[a]] > 1;
}

DependencyInfo dependency_info(const Program& p) {
  DependencyInfo d;
  d.nsyms = static_cast<int>(p.relations.size());
  d.succ.assign(d.nsyms, {});
  for (auto& r : p.rules)
    for (auto& a : r.body)
      if (const auto* ra = std::get_if<RelationAtom>(&a)) {
        auto& v = d.succ[r.head];
        if (std::find(v.begin(), v.end(), ra->sym) == v.end()) v.push_back(ra->sym);
      }

  // Tarjan
  d.scc.assign(d.nsyms, -1);
  std::vector<int> index(d.nsyms, -1), low(d.nsyms, 0), stack;
  std::vector<bool> on_stack(d.nsyms, false);
  int next_index = 0, next_scc = 0;
  std::function<void(int)> strongconnect = [&](int v) {
    index[v] = low[v] = next_index++;
    stack.push_back(v);
    on_stack[v] = true;
    for (int w : d.succ[v]) {
      if (index[w] < 0) {
        strongconnect(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      int id = next_scc++;
      for (;;) {
        int w = stack.back();
        stack.pop_back();
        on_stack[w] = false;
        d.scc[w] = id;
        if (w == v) break;
      }
    }
  };
  for (int v = 0; v < d.nsyms; v++)
    if (index[v] < 0) strongconnect(v);
  d.scc_size.assign(next_scc, 0);
  for (int v = 0; v < d.nsyms; v++) d.scc_size[d.scc[v]]++;
  d.self_cycle.assign(d.nsyms, false);
  for (int v = 0; v < d.nsyms; v++) {
    if (d.scc_size[d.scc[v]] > 1) d.self_cycle[v] = true;
    for (int w : d.succ[v])
      if (w == v) d.self_cycle[v] = true;
  }
  return d;
}

LinearReport check_linear(const Program& p, const DependencyInfo& dep) {
  LinearReport rep;
  rep.recursive_atom.assign(p.rules.size(), -1);
  for (size_t ri = 0; ri < p.rules.size(); ri++) {
    const Rule& r = p.rules[ri];
    int count = 0;
    for (size_t ai = 0; ai < r.body.size(); ai++) {
      const auto* ra = std::get_if<RelationAtom>(&r.body[ai]);
      if (ra && dep.mutually_recursive(r.head, ra->sym)) {
        count++;
        rep.recursive_atom[ri] = static_cast<int>(ai);
      }
    }
    if (count > 1) {
      rep.linear = false;
      rep.recursive_atom[ri] = -1;
      rep.issues.push_back({r.span, static_cast<int>(ri),
                            "rule has " + std::to_string(count) +
                                " body atoms mutually recursive with " + p.sym_name(r.head)});
    }
  }
  return rep;
}

TopBottom top_bottom(const Program& p, int rule_idx, const DependencyInfo& dep) {
  const Rule& r = p.rules[rule_idx];
  TopBottom tb;
  int count = 0;
  for (size_t ai = 0; ai < r.body.size(); ai++) {
    const auto* ra = std::get_if<RelationAtom>(&r.body[ai]);
    if (ra && dep.mutually_recursive(r.head, ra->sym)) {
      count++;
      tb.rec_atom = static_cast<int>(ai);
      tb.bottom = ra->args;
    }
  }
  if (count > 1) throw UsageError("top_bottom: rule is not linear");
  tb.top = r.head_args;
  tb.top.push_back(p.universe);
  return tb;
}

namespace {

// ---- per-rule constraint extraction -----------------------------------

struct ClassInfo {
  std::set<char> first, last;
  std::set<size_t> exact;
  size_t min_len = 0;
  bool has_universe = false;
  std::set<char> look_after, look_before;
};

struct RuleData {
  bool linear_rule = false;
  TopBottom tb;
  std::set<VarId> top_set, bottom_set;
  std::vector<const PatternEquation*> pes;
  bool inert = false;
  std::map<VarId, VarId> parent;  // union-find over rule variables
  std::map<VarId, ClassInfo> cls; // keyed by class root
  bool has_top_top_eq = false;
  RuleProfile profile;

  VarId find(VarId v) {
    auto it = parent.find(v);
    if (it == parent.end() || it->second == v) return v;
    VarId r = find(it->second);
    parent[v] = r;
    return r;
  }
  void unite(VarId a, VarId b) {
    parent[find(a)] = find(b);
  }
  ClassInfo& info(VarId v) { return cls[find(v)]; }
};

CellConstraint cell_from(const ClassInfo& c) {
  CellConstraint out;
  if (c.first.size() == 1) out.first = *c.first.begin();
  if (c.last.size() == 1) out.last = *c.last.begin();
  if (c.exact.size() == 1) out.exact_len = *c.exact.begin();
  out.min_len = c.min_len;
  out.equals_universe = c.has_universe;
  if (c.look_after.size() == 1) out.look_after = *c.look_after.begin();
  if (c.look_before.size() == 1) out.look_before = *c.look_before.begin();
  return out;
}

RuleData analyze_rule(const Program& p, int rule_idx, const DependencyInfo& dep,
                      const LinearReport&) {
  const Rule& r = p.rules[rule_idx];
  RuleData d;
  try {
    d.tb = top_bottom(p, rule_idx, dep);
    d.linear_rule = true;
  } catch (const UsageError&) {
    d.tb.top = r.head_args;
    d.tb.top.push_back(p.universe);
    d.linear_rule = false;
  }
  d.top_set.insert(d.tb.top.begin(), d.tb.top.end());
  d.bottom_set.insert(d.tb.bottom.begin(), d.tb.bottom.end());

  for (auto& a : r.body)
    if (const auto* eq = std::get_if<PatternEquation>(&a)) d.pes.push_back(eq);

  // alias classes from pure equality equations
  for (const auto* eq : d.pes)
    if (eq->rhs.items.size() == 1 && eq->rhs.items[0].is_var)
      d.unite(eq->lhs, eq->rhs.items[0].var);
  d.info(p.universe).has_universe = true;

  for (const auto* eq : d.pes) {
    const auto& items = eq->rhs.items;
    ClassInfo& cl = d.info(eq->lhs);
    if (items.empty()) {
      cl.exact.insert(0);
      continue;
    }
    if (items.size() == 1 && items[0].is_var) {
      bool lhs_top = d.top_set.count(eq->lhs), rhs_top = d.top_set.count(items[0].var);
      if (lhs_top && rhs_top) d.has_top_top_eq = true;
      continue;  // alias, no letter content
    }
    size_t terms = eq->rhs.terminal_count();
    if (terms == items.size()) cl.exact.insert(terms);
    cl.min_len = std::max(cl.min_len, terms);
    if (!items[0].is_var) cl.first.insert(items[0].sym);
    if (!items.back().is_var) cl.last.insert(items.back().sym);
    // the universe anchors adjacent-letter facts: w = ... v a ... pins the
    // letter after v's prefix occurrence (and symmetrically before)
    if (cl.has_universe) {
      if (items.size() >= 2 && items[0].is_var && !items[1].is_var)
        d.info(items[0].var).look_after.insert(items[1].sym);
      if (items.size() >= 2 && items.back().is_var && !items[items.size() - 2].is_var)
        d.info(items.back().var).look_before.insert(items[items.size() - 2].sym);
    }
  }

  // propagate exact lengths through the equations: when every variable on a
  // right-hand side has a pinned length, the left side is pinned too
  for (size_t round = 0; round < d.pes.size(); round++) {
    bool changed = false;
    for (const auto* eq : d.pes) {
      const auto& items = eq->rhs.items;
      if (items.empty() || (items.size() == 1 && items[0].is_var)) continue;
      size_t total = 0;
      bool all_pinned = true;
      for (auto& it : items) {
        if (!it.is_var) {
          total += 1;
        } else if (d.info(it.var).exact.size() == 1) {
          total += *d.info(it.var).exact.begin();
        } else {
          all_pinned = false;
        }
      }
      if (all_pinned && d.info(eq->lhs).exact.insert(total).second) changed = true;
    }
    if (!changed) break;
  }

  // contradiction scan: an unsatisfiable conjunction makes the rule inert
  for (VarId v : p.rule_vars(r)) {
    if (d.find(v) != v && !d.cls.count(v)) continue;
    const ClassInfo& c = d.info(v);
    bool bad = c.first.size() > 1 || c.last.size() > 1 || c.exact.size() > 1 ||
               c.look_after.size() > 1 || c.look_before.size() > 1;
    if (!c.exact.empty() && c.min_len > *c.exact.begin()) bad = true;
    if (c.has_universe && (!c.look_after.empty() || !c.look_before.empty())) bad = true;
    if (bad) d.inert = true;
  }

  d.profile.inert = d.inert;
  for (VarId t : d.tb.top) d.profile.cells.push_back(cell_from(d.info(t)));
  return d;
}

bool nontrivial(const CellConstraint& c) {
  return c.first || c.last || c.exact_len || c.min_len > 0 || c.equals_universe || c.look_after ||
         c.look_before;
}

// Each conflict rule is a word-independent reason the two rules cannot accept
// the same value at this top position.
bool cells_conflict(const CellConstraint& a, const CellConstraint& b) {
  if (a.first && b.first && *a.first != *b.first) return true;
  if (a.last && b.last && *a.last != *b.last) return true;
  if (a.exact_len && b.exact_len && *a.exact_len != *b.exact_len) return true;
  if (a.exact_len && b.min_len > *a.exact_len) return true;
  if (b.exact_len && a.min_len > *b.exact_len) return true;
  if (a.look_after && b.look_after && *a.look_after != *b.look_after) return true;
  if (a.look_before && b.look_before && *a.look_before != *b.look_before) return true;
  if (a.equals_universe && (b.look_after || b.look_before)) return true;
  if (b.equals_universe && (a.look_after || a.look_before)) return true;
  return false;
}

std::vector<RuleData> analyze_all(const Program& p, const DependencyInfo& dep,
                                  const LinearReport& lin) {
  std::vector<RuleData> out;
  out.reserve(p.rules.size());
  for (size_t i = 0; i < p.rules.size(); i++)
    out.push_back(analyze_rule(p, static_cast<int>(i), dep, lin));
  return out;
}

// ---- functional subroutine certification -------------------------------

// Greatest-fixpoint certification that a relation is a partial function from
// the argument positions in `mask` to the rest; used to treat subroutine
// atoms as deterministic value producers.
struct FunctionalCert {
  const Program& p;
  const DependencyInfo& dep;
  const std::vector<RuleData>& rd;
  std::map<std::pair<SymId, uint32_t>, bool> table;

  FunctionalCert(const Program& pp, const DependencyInfo& dd, const std::vector<RuleData>& r)
      : p(pp), dep(dd), rd(r) {}

  bool functional(SymId s, uint32_t mask) {
    auto key = std::make_pair(s, mask);
    if (!table.count(key)) {
      table[key] = true;  // optimistic; shrink to the greatest fixpoint
      for (int pass = 0; pass < 256; pass++) {
        bool changed = false;
        auto snapshot = table;  // eval may add entries
        for (auto& [k, v] : snapshot) {
          bool r = eval(k.first, k.second);
          if (table[k] != r) {
            table[k] = r;
            changed = true;
          }
        }
        if (!changed) break;
      }
    }
    return table[key];
  }

  bool lookup(SymId s, uint32_t mask) {
    auto key = std::make_pair(s, mask);
    auto it = table.find(key);
    if (it != table.end()) return it->second;
    table[key] = true;  // enqueue optimistically; outer loop revisits
    return true;
  }

  bool eval(SymId s, uint32_t mask) {
    int ar = p.arity(s);
    uint32_t full = ar >= 31 ? ~0u : ((1u << ar) - 1);
    if ((mask & full) == full) return true;  // no outputs left
    std::vector<int> rules = p.rules_of(s);
    std::vector<int> live;
    for (int ri : rules)
      if (!rd[ri].inert) live.push_back(ri);
    // distinct rules must be separable on the inputs
    for (size_t i = 0; i < live.size(); i++)
      for (size_t j = i + 1; j < live.size(); j++) {
        bool conflict = false;
        const auto& a = rd[live[i]].profile.cells;
        const auto& bcells = rd[live[j]].profile.cells;
        for (int pos = 0; pos <= ar; pos++) {  // head positions plus universe
          bool is_input = pos == ar || (mask >> pos) & 1;
          if (!is_input) continue;
          if (cells_conflict(a[pos], bcells[pos])) {
            conflict = true;
            break;
          }
        }
        if (!conflict) return false;
      }
    for (int ri : live) {
      const Rule& r = p.rules[ri];
      std::set<VarId> defined{p.universe};
      for (int pos = 0; pos < ar; pos++)
        if ((mask >> pos) & 1) defined.insert(r.head_args[pos]);
      closure(r, defined);
      for (VarId h : r.head_args)
        if (!defined.count(h)) return false;
    }
    return true;
  }

  // Adds every variable a rule's equations or functional atoms determine.
  void closure(const Rule& r, std::set<VarId>& defined) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto& a : r.body) {
        if (const auto* eq = std::get_if<PatternEquation>(&a)) {
          std::set<VarId> vars{eq->lhs};
          for (auto& it : eq->rhs.items)
            if (it.is_var) vars.insert(it.var);
          VarId missing = -1;
          int count = 0;
          for (VarId v : vars)
            if (!defined.count(v)) {
              missing = v;
              count++;
            }
          if (count == 1) {
            defined.insert(missing);
            changed = true;
          }
        } else if (const auto* ra = std::get_if<RelationAtom>(&a)) {
          uint32_t m = 0;
          bool all = true;
          for (size_t i = 0; i < ra->args.size(); i++) {
            if (defined.count(ra->args[i]))
              m |= (1u << i);
            else
              all = false;
          }
          if (all) continue;
          if (lookup(ra->sym, m)) {
            for (VarId v : ra->args)
              if (defined.insert(v).second) changed = true;
          }
        }
      }
    }
  }
};

bool is_fresh_in_rule(const Program& p, const Rule& r, VarId z) {
  int occurrences = 0;
  for (VarId h : r.head_args)
    if (h == z) occurrences++;
  for (auto& a : r.body)
    for (VarId v : atom_vars(a))
      if (v == z) occurrences++;
  return occurrences == 1;
}

}  // namespace

OllaReport classify_olla(const Program& p, const DependencyInfo& dep, const LinearReport& lin) {
  OllaReport rep;
  if (!lin.linear) {
    rep.issues.push_back({{}, -1, "program is not linear"});
    return rep;
  }
  std::vector<RuleData> rd = analyze_all(p, dep, lin);
  rep.olla = true;
  rep.forms.resize(p.rules.size());

  // side marks per (symbol, top position); the universe slot is position arity
  enum Side { kNone = 0, kLeft = 1, kRight = 2, kBoth = 3 };
  std::map<std::pair<SymId, int>, int> pos_marks;

  for (size_t ri = 0; ri < p.rules.size(); ri++) {
    const Rule& r = p.rules[ri];
    const RuleData& d = rd[ri];
    const auto& T = d.top_set;
    const auto& B = d.bottom_set;
    std::map<VarId, int> var_marks;

    auto reject = [&](SourceSpan sp, const std::string& m) {
      rep.olla = false;
      rep.issues.push_back({sp, static_cast<int>(ri), m});
    };

    for (auto& a : r.body) {
      const auto* eq = std::get_if<PatternEquation>(&a);
      if (!eq) continue;
      const auto& items = eq->rhs.items;
      VarId L = eq->lhs;
      std::optional<OllaForm> form;
      int side = kNone;

      if (items.empty()) {
        form = OllaForm::Eps;
      } else if (items.size() == 1 && items[0].is_var) {
        VarId v = items[0].var;
        if (!T.count(L) && !T.count(v))
          reject(eq->span, "equation between two non-top variables " + p.var_name(L) + " and " +
                               p.var_name(v));
        else
          form = OllaForm::Eps;
      } else if (items.size() == 2 && items[0].is_var != items[1].is_var) {
        bool letter_left = !items[0].is_var;
        char a_ = letter_left ? items[0].sym : items[1].sym;
        (void)a_;
        VarId v = letter_left ? items[1].var : items[0].var;
        bool ok = (T.count(L) && !T.count(v)) || (!T.count(L) && T.count(v));
        if (!ok) {
          reject(eq->span, "one-letter equation must relate a top variable with a non-top one");
        } else {
          form = letter_left ? OllaForm::Left : OllaForm::Right;
          side = letter_left ? kLeft : kRight;
        }
      } else if (items.size() == 2 && items[0].is_var && items[1].is_var && L == p.universe) {
        // epsilon lookahead: univ = x z with z fresh
        VarId v1 = items[0].var, v2 = items[1].var;
        bool ok = (T.count(v1) && is_fresh_in_rule(p, r, v2)) ||
                  (T.count(v2) && is_fresh_in_rule(p, r, v1));
        if (ok)
          form = OllaForm::Eps;
        else
          reject(eq->span, "universe split does not fit a lookahead form");
      } else if (items.size() == 3 && L == p.universe && items[0].is_var && !items[1].is_var &&
                 items[2].is_var) {
        VarId x = items[0].var, z = items[2].var;
        if (T.count(x) && is_fresh_in_rule(p, r, z)) {
          form = OllaForm::LookaheadAfter;
          side = kRight;
        } else if (T.count(z) && is_fresh_in_rule(p, r, x)) {
          form = OllaForm::LookaheadBefore;
          side = kLeft;
        } else {
          reject(eq->span, "lookahead equation needs one top variable and one fresh variable");
        }
      } else {
        reject(eq->span, "pattern equation does not fit any one-letter-lookahead form");
      }

      if (form) {
        rep.forms[ri].push_back(*form);
        if (side != kNone) {
          var_marks[L] |= side;
          for (auto& it : items)
            if (it.is_var) var_marks[it.var] |= side;
        }
      } else {
        rep.forms[ri].push_back(OllaForm::Eps);  // placeholder, program already rejected
      }
    }

    for (auto& [v, m] : var_marks)
      if (m == kBoth && (T.count(v) || B.count(v)))
        reject(r.span, "variable " + p.var_name(v) +
                           " is used in both left and right one-letter equations");

    // aggregate onto head-symbol positions, and through the recursive atom
    for (size_t i = 0; i < d.tb.top.size(); i++) {
      auto it = var_marks.find(d.tb.top[i]);
      if (it != var_marks.end()) pos_marks[{r.head, static_cast<int>(i)}] |= it->second;
    }
    if (d.tb.rec_atom >= 0) {
      const auto& ra = std::get<RelationAtom>(r.body[d.tb.rec_atom]);
      for (size_t i = 0; i < ra.args.size(); i++) {
        auto it = var_marks.find(ra.args[i]);
        if (it != var_marks.end()) pos_marks[{ra.sym, static_cast<int>(i)}] |= it->second;
      }
    }
  }

  for (auto& [key, m] : pos_marks)
    if (m == kBoth) {
      rep.olla = false;
      rep.issues.push_back({{}, -1,
                            "argument " + std::to_string(key.second) + " of " +
                                p.sym_name(key.first) +
                                " is consumed from both ends across rules"});
    }

  // guard: a rule using top-top equations must be alone for its symbol or
  // carry an anchored profile
  rep.guarded = true;
  for (size_t ri = 0; ri < p.rules.size(); ri++) {
    const RuleData& d = rd[ri];
    if (!d.has_top_top_eq || d.inert) continue;
    if (p.rules_of(p.rules[ri].head).size() == 1) continue;
    bool anchored = false;
    for (auto& c : d.profile.cells)
      if (nontrivial(c)) anchored = true;
    if (!anchored) {
      rep.guarded = false;
      rep.issues.push_back({p.rules[ri].span, static_cast<int>(ri),
                            "rule uses top-to-top equations without an anchoring constraint"});
    }
  }
  return rep;
}

LocalDetReport local_determinism_olla(const Program& p, const DependencyInfo& dep,
                                      const LinearReport& lin) {
  LocalDetReport rep;
  if (!lin.linear) {
    rep.issues.push_back({{}, -1, "program is not linear"});
    return rep;
  }
  std::vector<RuleData> rd = analyze_all(p, dep, lin);
  FunctionalCert cert(p, dep, rd);
  rep.ok = true;
  rep.inert.assign(p.rules.size(), false);
  for (size_t ri = 0; ri < p.rules.size(); ri++) {
    const Rule& r = p.rules[ri];
    const RuleData& d = rd[ri];
    if (d.inert) {
      rep.inert[ri] = true;  // contradicting equations: the rule never fires
      continue;
    }
    if (d.tb.bottom.empty()) continue;  // empty bottom tuple is trivially functional

    std::set<VarId> defined(d.top_set.begin(), d.top_set.end());
    defined.insert(p.universe);
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto& a : r.body) {
        if (const auto* eq = std::get_if<PatternEquation>(&a)) {
          std::set<VarId> vars{eq->lhs};
          for (auto& it : eq->rhs.items)
            if (it.is_var) vars.insert(it.var);
          VarId missing = -1;
          int count = 0;
          for (VarId v : vars)
            if (!defined.count(v)) {
              missing = v;
              count++;
            }
          if (count == 1) {
            defined.insert(missing);
            changed = true;
          }
        } else if (const auto* ra = std::get_if<RelationAtom>(&a)) {
          if (static_cast<int>(&a - r.body.data()) == d.tb.rec_atom) continue;
          uint32_t m = 0;
          bool all = true;
          for (size_t i = 0; i < ra->args.size(); i++) {
            if (defined.count(ra->args[i]))
              m |= (1u << i);
            else
              all = false;
          }
          if (!all && cert.functional(ra->sym, m)) {
            for (VarId v : ra->args)
              if (defined.insert(v).second) changed = true;
          }
        }
      }
    }

    for (VarId y : d.tb.bottom)
      if (!defined.count(y)) {
        rep.ok = false;
        rep.issues.push_back({r.span, static_cast<int>(ri),
                              "bottom variable " + p.var_name(y) +
                                  " is not determined by the top variables"});
      }
    for (VarId x : d.tb.top) {
      bool present = d.bottom_set.count(x) > 0;
      for (auto& a : r.body) {
        if (present) break;
        if (const auto* eq = std::get_if<PatternEquation>(&a)) {
          if (eq->lhs == x) present = true;
          for (auto& it : eq->rhs.items)
            if (it.is_var && it.var == x) present = true;
        } else if (const auto* ra = std::get_if<RelationAtom>(&a)) {
          if (static_cast<int>(&a - r.body.data()) == d.tb.rec_atom) continue;
          for (VarId v : ra->args)
            if (v == x) present = true;
        }
      }
      if (!present && x != p.universe) {
        rep.ok = false;
        rep.issues.push_back({r.span, static_cast<int>(ri),
                              "top variable " + p.var_name(x) +
                                  " appears in no pattern equation and is not passed down"});
      }
    }
  }
  return rep;
}

GlobalDetReport profiles_and_global_determinism(const Program& p, const DependencyInfo& dep,
                                                const LinearReport& lin) {
  GlobalDetReport rep;
  if (!lin.linear) {
    rep.issues.push_back({{}, -1, "program is not linear"});
    return rep;
  }
  std::vector<RuleData> rd = analyze_all(p, dep, lin);
  for (auto& d : rd) rep.profiles.push_back(d.profile);
  rep.ok = true;
  for (SymId s = 0; s < static_cast<SymId>(p.relations.size()); s++) {
    std::vector<int> rules;
    for (int ri : p.rules_of(s))
      if (!rd[ri].inert) rules.push_back(ri);
    for (size_t i = 0; i < rules.size(); i++)
      for (size_t j = i + 1; j < rules.size(); j++) {
        const auto& a = rd[rules[i]].profile.cells;
        const auto& b = rd[rules[j]].profile.cells;
        bool conflict = false;
        for (size_t pos = 0; pos < a.size() && pos < b.size(); pos++)
          if (cells_conflict(a[pos], b[pos])) conflict = true;
        if (!conflict) {
          rep.ok = false;
          rep.issues.push_back({p.rules[rules[j]].span, rules[j],
                                "rules " + std::to_string(rules[i]) + " and " +
                                    std::to_string(rules[j]) + " of " + p.sym_name(s) +
                                    " have non-conflicting profiles"});
        }
      }
  }
  return rep;
}

UniquelyDefinedReport uniquely_defined(const Program& p, int rule_idx,
                                       const DependencyInfo& dep) {
  const Rule& r = p.rules[rule_idx];
  TopBottom tb;
  try {
    tb = top_bottom(p, rule_idx, dep);
  } catch (const UsageError&) {
    tb.top = r.head_args;
    tb.top.push_back(p.universe);
  }
  UniquelyDefinedReport rep;
  std::set<VarId> defined(tb.top.begin(), tb.top.end());
  defined.insert(p.universe);
  bool changed = true;
  size_t rounds = 0;
  std::vector<VarId> all_vars = p.rule_vars(r);
  while (changed && rounds++ <= all_vars.size() + 1) {
    changed = false;
    for (auto& a : r.body) {
      const auto* eq = std::get_if<PatternEquation>(&a);
      if (!eq) continue;
      std::set<VarId> vars{eq->lhs};
      for (auto& it : eq->rhs.items)
        if (it.is_var) vars.insert(it.var);
      VarId missing = -1;
      int count = 0;
      for (VarId v : vars)
        if (!defined.count(v)) {
          missing = v;
          count++;
        }
      if (count == 1) {
        defined.insert(missing);
        rep.order.push_back(missing);
        changed = true;
      }
    }
  }
  rep.all = true;
  for (VarId v : all_vars)
    if (!defined.count(v)) {
      rep.all = false;
      rep.undefined.push_back(v);
    }
  return rep;
}

SdReport check_strictly_decreasing(const Program& p, const DependencyInfo& dep,
                                   const LinearReport& lin) {
  SdReport rep;
  if (!lin.linear) {
    rep.issues.push_back({{}, -1, "program is not linear"});
    return rep;
  }

  // recursive rules with no pattern equation are exempt from the decrease
  // conditions, but must not form cycles on their own
  std::vector<std::vector<int>> exempt_succ(p.relations.size());
  std::vector<int> phi_prime;  // rules with a recursive atom and >= 1 equation
  for (size_t ri = 0; ri < p.rules.size(); ri++) {
    if (lin.recursive_atom[ri] < 0) continue;
    const Rule& r = p.rules[ri];
    bool has_pe = false;
    for (auto& a : r.body)
      if (std::holds_alternative<PatternEquation>(a)) has_pe = true;
    const auto& ra = std::get<RelationAtom>(r.body[lin.recursive_atom[ri]]);
    if (has_pe)
      phi_prime.push_back(static_cast<int>(ri));
    else
      exempt_succ[r.head].push_back(ra.sym);
  }
  {  // cycle check over exempt edges
    std::vector<int> color(p.relations.size(), 0);
    std::function<bool(int)> dfs = [&](int v) {
      color[v] = 1;
      for (int w : exempt_succ[v]) {
        if (color[w] == 1) return true;
        if (color[w] == 0 && dfs(w)) return true;
      }
      color[v] = 2;
      return false;
    };
    for (size_t v = 0; v < p.relations.size(); v++)
      if (color[v] == 0 && dfs(static_cast<int>(v))) {
        rep.issues.push_back(
            {{}, -1, "equation-free recursive rules form a cycle through " + p.relations[v].name});
        return rep;
      }
  }

  // candidate decreasing pairs per rule: an equation x = ...y... with at
  // least one terminal drops length from head position px to callee position qy
  struct RulePairs {
    int rule;
    SymId head, callee;
    std::set<std::pair<int, int>> pairs;  // (px, qy)
  };
  std::vector<RulePairs> rps;
  std::set<SymId> constrained;
  for (int ri : phi_prime) {
    const Rule& r = p.rules[ri];
    const auto& ra = std::get<RelationAtom>(r.body[lin.recursive_atom[ri]]);
    RulePairs rp{ri, r.head, ra.sym, {}};
    for (auto& a : r.body) {
      const auto* eq = std::get_if<PatternEquation>(&a);
      if (!eq || eq->rhs.terminal_count() == 0) continue;
      for (size_t px = 0; px < r.head_args.size(); px++) {
        if (r.head_args[px] != eq->lhs) continue;
        for (auto& it : eq->rhs.items) {
          if (!it.is_var) continue;
          for (size_t qy = 0; qy < ra.args.size(); qy++)
            if (ra.args[qy] == it.var) rp.pairs.insert({static_cast<int>(px), static_cast<int>(qy)});
        }
      }
    }
    if (rp.pairs.empty()) {
      rep.issues.push_back({r.span, ri, "no pattern equation strictly shrinks a head argument"});
      return rep;
    }
    constrained.insert(r.head);
    constrained.insert(ra.sym);
    rps.push_back(std::move(rp));
  }

  // assign one decreasing position per constrained symbol (backtracking;
  // the instances are tiny)
  std::vector<SymId> syms(constrained.begin(), constrained.end());
  std::map<SymId, int> assign;
  std::function<bool(size_t)> solve = [&](size_t i) {
    if (i == syms.size()) {
      for (auto& rp : rps)
        if (!rp.pairs.count({assign[rp.head], assign[rp.callee]})) return false;
      return true;
    }
    for (int pos = 0; pos < p.arity(syms[i]); pos++) {
      assign[syms[i]] = pos;
      bool feasible = true;
      for (auto& rp : rps) {
        if (!assign.count(rp.head) || !assign.count(rp.callee)) continue;
        if (!rp.pairs.count({assign[rp.head], assign[rp.callee]})) feasible = false;
      }
      if (feasible && solve(i + 1)) return true;
    }
    assign.erase(syms[i]);
    return false;
  };
  if (!solve(0)) {
    rep.issues.push_back(
        {{}, -1, "no consistent decreasing argument position across the recursive rules"});
    return rep;
  }
  rep.ok = true;
  rep.decreasing_pos = assign;
  return rep;
}

SemanticDetReport semantic_determinism_oracle(const Program& p, std::string_view w,
                                              size_t max_word_len) {
  if (w.size() > max_word_len)
    throw UsageError("semantic_determinism_oracle: word longer than the brute-force bound " +
                     std::to_string(max_word_len) + "; raise the bound explicitly if intended");
  DependencyInfo dep = dependency_info(p);
  LinearReport lin = check_linear(p, dep);
  if (!lin.linear) throw UsageError("semantic_determinism_oracle: program is not linear");

  FactorTable table = intern_factors(w, p.alphabet);
  SemanticDetReport rep;
  rep.per_rule.resize(p.rules.size());

  std::map<SymId, std::vector<std::pair<int, std::set<std::vector<std::string>>>>> tops_by_sym;

  for (size_t ri = 0; ri < p.rules.size(); ri++) {
    const Rule& r = p.rules[ri];
    TopBottom tb = top_bottom(p, static_cast<int>(ri), dep);

    std::vector<const PatternEquation*> pes;
    for (auto& a : r.body)
      if (const auto* eq = std::get_if<PatternEquation>(&a)) pes.push_back(eq);

    Substitution init = Substitution::for_program(p);
    init.set(p.universe, table.word_id());
    std::vector<Substitution> frontier{init};
    // join equations, most-constrained first by a simple static order
    std::vector<const PatternEquation*> todo = pes;
    std::set<VarId> bound{p.universe};
    std::vector<const PatternEquation*> ordered;
    while (!todo.empty()) {
      size_t best = 0, best_unbound = SIZE_MAX;
      for (size_t i = 0; i < todo.size(); i++) {
        size_t unbound = bound.count(todo[i]->lhs) ? 0 : 1;
        for (auto& it : todo[i]->rhs.items)
          if (it.is_var && !bound.count(it.var)) unbound++;
        if (unbound < best_unbound) {
          best_unbound = unbound;
          best = i;
        }
      }
      ordered.push_back(todo[best]);
      bound.insert(todo[best]->lhs);
      for (auto& it : todo[best]->rhs.items)
        if (it.is_var) bound.insert(it.var);
      todo.erase(todo.begin() + best);
    }
    for (const auto* eq : ordered) {
      std::vector<Substitution> next;
      for (auto& th : frontier) {
        auto exts = match_equation(*eq, th, table);
        next.insert(next.end(), exts.begin(), exts.end());
      }
      frontier = std::move(next);
    }
    // enumerate any top/bottom variables the equations left unbound
    std::vector<VarId> loose;
    {
      std::set<VarId> seen;
      for (VarId v : tb.top)
        if (!bound.count(v) && seen.insert(v).second) loose.push_back(v);
      for (VarId v : tb.bottom)
        if (!bound.count(v) && seen.insert(v).second) loose.push_back(v);
    }
    for (VarId v : loose) {
      std::vector<Substitution> next;
      for (auto& th : frontier)
        for (size_t f = 0; f < table.size(); f++) {
          Substitution ext = th;
          ext.set(v, static_cast<FactorId>(f));
          next.push_back(std::move(ext));
        }
      frontier = std::move(next);
    }

    auto& rw = rep.per_rule[ri];
    std::map<std::vector<std::string>, std::set<std::vector<std::string>>> fn;
    for (auto& th : frontier) {
      std::vector<std::string> top, bottom;
      for (VarId v : tb.top) top.push_back(table.at(th.get(v)));
      for (VarId v : tb.bottom) bottom.push_back(table.at(th.get(v)));
      rw.pairs.insert({top, bottom});
      fn[top].insert(bottom);
    }
    for (auto& [t, bs] : fn)
      if (bs.size() > 1) {
        rw.partial_function = false;
        rep.local = false;
        std::string note = "rule " + std::to_string(ri) + " maps a top tuple to " +
                           std::to_string(bs.size()) + " bottom tuples";
        rep.witnesses.push_back(note);
        break;
      }
    std::set<std::vector<std::string>> tops;
    for (auto& [t, bs] : fn) tops.insert(t);
    tops_by_sym[r.head].push_back({static_cast<int>(ri), std::move(tops)});
  }

  for (auto& [sym, entries] : tops_by_sym)
    for (size_t i = 0; i < entries.size(); i++)
      for (size_t j = i + 1; j < entries.size(); j++)
        for (auto& t : entries[i].second)
          if (entries[j].second.count(t)) {
            rep.global = false;
            rep.witnesses.push_back("rules " + std::to_string(entries[i].first) + " and " +
                                    std::to_string(entries[j].first) + " of " + p.sym_name(sym) +
                                    " share a top tuple");
            break;
          }
  return rep;
}

bool check_drx_constraints(const Program& p, std::vector<Diagnostic>* issues) {
  bool ok = true;
  for (size_t ri = 0; ri < p.rules.size(); ri++) {
    const Rule& r = p.rules[ri];
    for (auto& a : r.body) {
      const auto* c = std::get_if<DrxConstraint>(&a);
      if (!c) continue;
      if (p.rules_of(r.head).size() != 1) {
        ok = false;
        if (issues)
          issues->push_back({c->span, static_cast<int>(ri),
                             "regex constraint in a rule of " + p.sym_name(r.head) +
                                 ", which has more than one rule"});
      }
      DrxDetReport det = drx_check_deterministic(*c->regex);
      if (!det.deterministic) {
        ok = false;
        if (issues)
          issues->push_back({c->span, static_cast<int>(ri),
                             "constraint regex is not deterministic: " + det.reason});
      }
    }
  }
  return ok;
}

FragmentReport classify(const Program& p) {
  FragmentReport rep;
  ValidationReport val = validate_program(p);
  rep.valid = val.ok();
  for (auto& d : val.issues) rep.diagnostics.push_back(d);
  if (!rep.valid) {
    rep.tier = "fixpoint";
    return rep;
  }

  DependencyInfo dep = dependency_info(p);
  LinearReport lin = check_linear(p, dep);
  rep.linear = lin.linear;
  for (auto& d : lin.issues) rep.diagnostics.push_back(d);

  rep.drx_constraints_legal = check_drx_constraints(p, &rep.diagnostics);

  if (rep.linear) {
    OllaReport olla = classify_olla(p, dep, lin);
    rep.olla = olla.olla;
    rep.guarded = olla.guarded;
    for (auto& d : olla.issues) rep.diagnostics.push_back(d);

    GlobalDetReport glob = profiles_and_global_determinism(p, dep, lin);
    rep.globally_deterministic = glob.ok;
    for (auto& d : glob.issues) rep.diagnostics.push_back(d);

    if (rep.olla) {
      LocalDetReport loc = local_determinism_olla(p, dep, lin);
      rep.locally_deterministic = loc.ok;
      for (auto& d : loc.issues) rep.diagnostics.push_back(d);
    }

    rep.uniquely_defined_all = true;
    for (size_t ri = 0; ri < p.rules.size(); ri++) {
      auto ud = uniquely_defined(p, static_cast<int>(ri), dep);
      if (!ud.all) {
        rep.uniquely_defined_all = false;
        for (VarId v : ud.undefined)
          rep.diagnostics.push_back({p.rules[ri].span, static_cast<int>(ri),
                                     "variable " + p.var_name(v) + " is not uniquely defined"});
      }
    }

    rep.dolla = rep.olla && rep.guarded && rep.locally_deterministic &&
                rep.globally_deterministic;
    rep.dolla_plus = rep.uniquely_defined_all && rep.globally_deterministic;

    if (rep.dolla || rep.dolla_plus) {
      SdReport sd = check_strictly_decreasing(p, dep, lin);
      rep.strictly_decreasing = sd.ok;
      rep.decreasing_pos = sd.decreasing_pos;
      for (auto& d : sd.issues) rep.diagnostics.push_back(d);
    }
  }

  if (rep.strictly_decreasing)
    rep.tier = "sd-fast";
  else if (rep.dolla || rep.dolla_plus)
    rep.tier = "deterministic-topdown";
  else if (rep.linear)
    rep.tier = "memoized-topdown";
  else
    rep.tier = "fixpoint";
  return rep;
}

std::string FragmentReport::to_json() const {
  nlohmann::json j;
  j["flags"] = {{"valid", valid},
                {"linear", linear},
                {"olla", olla},
                {"guarded", guarded},
                {"locally_deterministic", locally_deterministic},
                {"globally_deterministic", globally_deterministic},
                {"dolla", dolla},
                {"uniquely_defined_all", uniquely_defined_all},
                {"dolla_plus", dolla_plus},
                {"strictly_decreasing", strictly_decreasing},
                {"drx_constraints_legal", drx_constraints_legal}};
  j["tier"] = tier;
  j["diagnostics"] = nlohmann::json::array();
  for (auto& d : diagnostics)
    j["diagnostics"].push_back({{"rule", d.rule},
                                {"span", {{"start", d.span.start}, {"end", d.span.end}}},
                                {"msg", d.msg}});
  return j.dump(2);
}

}  // namespace fcdl
