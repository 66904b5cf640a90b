#include "fcdl/topdown.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <memory>
#include <set>

#include "fcdl/glushkov.hpp"
#include "json.hpp"

namespace fcdl {

namespace {

using Clock = std::chrono::steady_clock;

struct TimeGuard {
  const EvalBudget& budget;
  Clock::time_point start = Clock::now();
  uint64_t ticks = 0;
  void tick() {
    if ((++ticks & 0xfff) != 0) return;
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
    if (ms > budget.max_ms)
      throw BudgetError("time budget of " + std::to_string(budget.max_ms) + " ms exceeded");
  }
};

bool span_content_eq(std::string_view w, Span a, Span b) {
  if (a.pos == b.pos && a.len == b.len) return true;
  if (a.len != b.len) return false;
  return w.compare(a.pos, a.len, w, b.pos, b.len) == 0;
}

// Finds an occurrence of the concatenation of `parts` (ground spans and
// terminal chars) as a factor of w. Adjacent spans in order are the common
// case and cost nothing; otherwise falls back to a plain search.
struct Piece {
  bool is_char = false;
  char c = 0;
  Span s;
};

bool matches_at(std::string_view w, uint32_t at, const std::vector<Piece>& parts, size_t total) {
  if (static_cast<size_t>(at) + total > w.size()) return false;
  uint32_t off = 0;
  for (auto& p : parts) {
    if (p.is_char) {
      if (w[at + off] != p.c) return false;
      off += 1;
    } else {
      if (!span_content_eq(w, Span{at + off, p.s.len}, p.s)) return false;
      off += p.s.len;
    }
  }
  return true;
}

std::optional<Span> locate(std::string_view w, const std::vector<Piece>& parts) {
  size_t total = 0;
  for (auto& p : parts) total += p.is_char ? 1 : p.s.len;
  if (total > w.size()) return std::nullopt;
  // fast path: the parts usually sit adjacent in the word already; derive the
  // candidate start from the first non-empty span and verify in place
  size_t lead = 0;
  for (auto& p : parts) {
    if (!p.is_char && p.s.len > 0) {
      if (p.s.pos >= lead) {
        uint32_t at = p.s.pos - static_cast<uint32_t>(lead);
        if (matches_at(w, at, parts, total)) return Span{at, static_cast<uint32_t>(total)};
      }
      break;
    }
    lead += p.is_char ? 1 : 0;
  }
  std::string needle;
  needle.reserve(total);
  for (auto& p : parts) {
    if (p.is_char)
      needle += p.c;
    else
      needle += span_view(w, p.s);
  }
  size_t found = w.find(needle);
  if (found == std::string_view::npos) return std::nullopt;
  return Span{static_cast<uint32_t>(found), static_cast<uint32_t>(total)};
}

// ---- span-based equation matching (used by the memoized prover) ---------

using SpanSub = std::vector<std::optional<Span>>;

struct SpanMatcher {
  std::string_view w;
  const std::vector<Pattern::Item>& items;
  SpanSub& sub;
  std::vector<SpanSub>& out;
  Span target;

  void run() { rec(0, 0); }

  size_t min_needed(size_t from) const {
    size_t n = 0;
    for (size_t i = from; i < items.size(); i++) {
      if (!items[i].is_var)
        n += 1;
      else if (sub[items[i].var])
        n += sub[items[i].var]->len;
    }
    return n;
  }

  void rec(size_t i, uint32_t off) {
    if (i == items.size()) {
      if (off == target.len) out.push_back(sub);
      return;
    }
    if (target.len - off < min_needed(i)) return;
    const auto& it = items[i];
    if (!it.is_var) {
      if (off < target.len && w[target.pos + off] == it.sym) rec(i + 1, off + 1);
      return;
    }
    if (sub[it.var]) {
      Span v = *sub[it.var];
      if (off + v.len <= target.len &&
          span_content_eq(w, Span{target.pos + off, v.len}, v))
        rec(i + 1, off + v.len);
      return;
    }
    uint32_t maxlen = target.len - off - static_cast<uint32_t>(min_needed(i + 1));
    for (uint32_t len = 0; len <= maxlen; len++) {
      sub[it.var] = Span{target.pos + off, len};
      rec(i + 1, off + len);
      sub[it.var] = std::nullopt;
    }
  }
};

// Distinct factors of w as canonical spans, shortest first.
std::vector<Span> distinct_factor_spans(std::string_view w, size_t max_factors) {
  std::vector<Span> out;
  out.push_back({0, 0});
  std::vector<std::string_view> bucket;
  for (size_t len = 1; len <= w.size(); len++) {
    bucket.clear();
    std::set<std::string_view> seen;
    for (size_t i = 0; i + len <= w.size(); i++)
      if (seen.insert(w.substr(i, len)).second)
        out.push_back({static_cast<uint32_t>(i), static_cast<uint32_t>(len)});
    if (out.size() > max_factors)
      throw BudgetError("factor enumeration exceeds the configured budget");
  }
  return out;
}

std::vector<SpanSub> span_match_equation(std::string_view w, const PatternEquation& eq,
                                         const SpanSub& theta,
                                         const std::vector<Span>& all_factors) {
  std::vector<SpanSub> out;
  SpanSub work = theta;
  if (work[eq.lhs]) {
    SpanMatcher m{w, eq.rhs.items, work, out, *work[eq.lhs]};
    m.run();
  } else {
    bool all_ground = true;
    size_t min_len = 0;
    for (auto& it : eq.rhs.items) {
      if (!it.is_var)
        min_len += 1;
      else if (work[it.var])
        min_len += work[it.var]->len;
      else
        all_ground = false;
    }
    if (all_ground) {
      std::vector<Piece> parts;
      for (auto& it : eq.rhs.items) {
        if (it.is_var)
          parts.push_back({false, 0, *work[it.var]});
        else
          parts.push_back({true, it.sym, {}});
      }
      if (auto found = locate(w, parts)) {
        work[eq.lhs] = found;
        out.push_back(work);
      }
    } else {
      for (Span cand : all_factors) {
        if (cand.len < min_len) continue;
        work[eq.lhs] = cand;
        SpanMatcher m{w, eq.rhs.items, work, out, cand};
        m.run();
        work[eq.lhs] = std::nullopt;
      }
    }
  }
  // dedup by content
  std::vector<SpanSub> dedup;
  std::set<std::vector<std::string>> seen;
  for (auto& s : out) {
    std::vector<std::string> key;
    for (auto& v : s) key.push_back(v ? std::string(span_view(w, *v)) : std::string("\x01"));
    if (seen.insert(key).second) dedup.push_back(s);
  }
  return dedup;
}

}  // namespace

std::optional<UniqueSolve> solve_unique_equation(std::string_view word, const Program&,
                                                 const PatternEquation& eq,
                                                 const std::vector<std::optional<Span>>& bindings) {
  auto bound = [&](VarId v) { return bindings[v].has_value(); };
  std::set<VarId> unknowns;
  if (!bound(eq.lhs)) unknowns.insert(eq.lhs);
  for (auto& it : eq.rhs.items)
    if (it.is_var && !bound(it.var)) unknowns.insert(it.var);
  if (unknowns.size() != 1)
    throw UsageError("solve_unique_equation: expected exactly one unbound variable, found " +
                     std::to_string(unknowns.size()));
  VarId unknown = *unknowns.begin();

  if (unknown == eq.lhs) {
    std::vector<Piece> parts;
    for (auto& it : eq.rhs.items) {
      if (it.is_var)
        parts.push_back({false, 0, *bindings[it.var]});
      else
        parts.push_back({true, it.sym, {}});
    }
    auto found = locate(word, parts);
    if (!found) return std::nullopt;
    return UniqueSolve{eq.lhs, *found};
  }

  // unknown occurs on the right; its length is pinned by the ground lengths
  Span lhs = *bindings[eq.lhs];
  size_t ground_len = 0;
  size_t occurrences = 0;
  for (auto& it : eq.rhs.items) {
    if (!it.is_var)
      ground_len += 1;
    else if (it.var == unknown)
      occurrences++;
    else
      ground_len += bindings[it.var]->len;
  }
  if (lhs.len < ground_len) return std::nullopt;
  size_t remaining = lhs.len - ground_len;
  if (occurrences == 0) throw InternalError("solve_unique_equation: unknown vanished");
  if (remaining % occurrences != 0) return std::nullopt;
  uint32_t vlen = static_cast<uint32_t>(remaining / occurrences);

  // cut the candidate from the first occurrence slot, then verify all slots
  uint32_t off = 0;
  Span candidate{0, 0};
  bool have = false;
  for (auto& it : eq.rhs.items) {
    uint32_t l = !it.is_var                ? 1
                 : it.var == unknown       ? vlen
                                           : bindings[it.var]->len;
    if (it.is_var && it.var == unknown && !have) {
      candidate = Span{lhs.pos + off, vlen};
      have = true;
    }
    off += l;
  }
  if (off != lhs.len) return std::nullopt;
  off = 0;
  for (auto& it : eq.rhs.items) {
    if (!it.is_var) {
      if (word[lhs.pos + off] != it.sym) return std::nullopt;
      off += 1;
    } else {
      Span v = it.var == unknown ? candidate : *bindings[it.var];
      if (!span_content_eq(word, Span{lhs.pos + off, v.len}, v)) return std::nullopt;
      off += v.len;
    }
  }
  return UniqueSolve{unknown, candidate};
}

// ---- memoized goal-directed prover --------------------------------------

namespace {

struct MemoProver {
  const Program& p;
  std::string_view w;
  const EvalBudget& budget;
  DependencyInfo dep;
  TimeGuard guard;
  std::vector<Span> all_factors;
  // content-keyed verdicts; only final answers are stored
  std::map<std::pair<SymId, std::vector<std::string>>, bool> memo;
  uint64_t explored = 0;

  MemoProver(const Program& pp, std::string_view ww, const EvalBudget& b)
      : p(pp), w(ww), budget(b), dep(dependency_info(p)), guard{b} {
    all_factors = distinct_factor_spans(w, b.max_factors);
  }

  std::pair<SymId, std::vector<std::string>> key_of(SymId s, const std::vector<Span>& args) {
    std::vector<std::string> k;
    k.reserve(args.size());
    for (Span a : args) k.emplace_back(span_view(w, a));
    return {s, std::move(k)};
  }

  bool prove(SymId s, const std::vector<Span>& args) {
    auto key = key_of(s, args);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    std::set<std::pair<SymId, std::vector<std::string>>> visited;
    bool r = dfs(s, args, visited);
    if (!r) {
      // the whole reachable set was explored and нет accepting instance
      for (auto& v : visited) memo.emplace(v, false);
    }
    return r;
  }

  bool dfs(SymId s, const std::vector<Span>& args,
           std::set<std::pair<SymId, std::vector<std::string>>>& visited) {
    guard.tick();
    auto key = key_of(s, args);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    if (!visited.insert(key).second) return false;  // already being explored
    if (++explored > budget.max_tuples)
      throw BudgetError("memoized search exceeded the tuple budget");

    for (int ri : p.rules_of(s)) {
      const Rule& rule = p.rules[ri];
      SpanSub init(p.var_names.size());
      init[p.universe] = Span{0, static_cast<uint32_t>(w.size())};
      bool ok = true;
      for (size_t i = 0; i < rule.head_args.size() && ok; i++) {
        VarId v = rule.head_args[i];
        if (init[v])
          ok = span_content_eq(w, *init[v], args[i]);
        else
          init[v] = args[i];
      }
      if (!ok) continue;
      int rec_atom = -1;
      for (size_t ai = 0; ai < rule.body.size(); ai++)
        if (const auto* ra = std::get_if<RelationAtom>(&rule.body[ai]))
          if (dep.mutually_recursive(rule.head, ra->sym)) rec_atom = static_cast<int>(ai);
      if (instances(rule, rec_atom, init, 0, visited)) {
        memo[key] = true;
        return true;
      }
    }
    return false;
  }

  // enumerate satisfying substitutions atom by atom; recursive goals last
  bool instances(const Rule& rule, int rec_atom, SpanSub theta, size_t from_mask,
                 std::set<std::pair<SymId, std::vector<std::string>>>& visited) {
    guard.tick();
    // pick an unprocessed atom: ground subroutines and equations first, the
    // recursive atom strictly last
    int chosen = -1;
    long best = -1000000;
    for (size_t ai = 0; ai < rule.body.size(); ai++) {
      if (from_mask & (1ull << ai)) continue;
      const Atom& a = rule.body[ai];
      long score;
      if (static_cast<int>(ai) == rec_atom) {
        score = -999;  // last
      } else if (const auto* eq = std::get_if<PatternEquation>(&a)) {
        long unbound = theta[eq->lhs] ? 0 : 1;
        for (auto& it : eq->rhs.items)
          if (it.is_var && !theta[it.var]) unbound++;
        score = 100 - unbound * 10;
      } else if (const auto* ra = std::get_if<RelationAtom>(&a)) {
        long bound = 0;
        for (VarId v : ra->args)
          if (theta[v]) bound++;
        score = bound == static_cast<long>(ra->args.size()) ? 200 : -500 + bound;
      } else {
        const auto& c = std::get<DrxConstraint>(a);
        score = theta[c.var] ? 300 : -600;
      }
      if (score > best) {
        best = score;
        chosen = static_cast<int>(ai);
      }
    }
    if (chosen < 0) return false;  // no recursive atom and nothing left: accept
    size_t next_mask = from_mask | (1ull << chosen);
    bool last = next_mask == (1ull << rule.body.size()) - 1;
    const Atom& a = rule.body[chosen];

    auto proceed = [&](const SpanSub& ext) {
      if (last && chosen != rec_atom) return true;
      if (!last) return instances(rule, rec_atom, ext, next_mask, visited);
      return false;
    };

    if (chosen == rec_atom) {
      // everything else holds; recurse on the bottom tuple(s)
      const auto& ra = std::get<RelationAtom>(a);
      std::vector<std::vector<Span>> bottoms;
      enumerate_args(ra, theta, bottoms);
      for (auto& b : bottoms)
        if (dfs(ra.sym, b, visited)) return true;
      return false;
    }
    if (const auto* eq = std::get_if<PatternEquation>(&a)) {
      for (auto& ext : span_match_equation(w, *eq, theta, all_factors)) {
        if (last) return true;
        if (instances(rule, rec_atom, ext, next_mask, visited)) return true;
      }
      return false;
    }
    if (const auto* ra = std::get_if<RelationAtom>(&a)) {
      std::vector<std::vector<Span>> cands;
      enumerate_args(*ra, theta, cands);
      for (auto& cand : cands) {
        if (!prove(ra->sym, cand)) continue;  // lower stratum, own query
        SpanSub ext = theta;
        for (size_t i = 0; i < ra->args.size(); i++) ext[ra->args[i]] = cand[i];
        if (proceed(ext)) return true;
      }
      return false;
    }
    const auto& c = std::get<DrxConstraint>(a);
    if (theta[c.var]) {
      if (!eval_drx_constraint(span_view(w, *theta[c.var]), *c.regex)) return false;
      return proceed(theta);
    }
    for (Span cand : all_factors) {
      guard.tick();
      if (!eval_drx_constraint(span_view(w, cand), *c.regex)) continue;
      SpanSub ext = theta;
      ext[c.var] = cand;
      if (proceed(ext)) return true;
    }
    return false;
  }

  // all argument tuples consistent with theta (unbound args range over all
  // distinct factors)
  void enumerate_args(const RelationAtom& ra, const SpanSub& theta,
                      std::vector<std::vector<Span>>& out) {
    std::vector<Span> acc(ra.args.size());
    std::function<void(size_t, SpanSub&)> rec = [&](size_t i, SpanSub& th) {
      if (i == ra.args.size()) {
        out.push_back(acc);
        return;
      }
      VarId v = ra.args[i];
      if (th[v]) {
        acc[i] = *th[v];
        rec(i + 1, th);
        return;
      }
      for (Span cand : all_factors) {
        th[v] = cand;
        acc[i] = cand;
        rec(i + 1, th);
        th[v] = std::nullopt;
      }
    };
    SpanSub th = theta;
    rec(0, th);
  }
};

}  // namespace

Verdict eval_memoized(const Program& p, std::string_view w, const EvalBudget& budget) {
  if (!p.is_boolean()) throw UsageError("eval_memoized: Ans has arity > 0");
  for (char c : w)
    if (p.alphabet.find(c) == std::string::npos)
      throw InputError(std::string("input symbol '") + c + "' is outside the alphabet");
  DependencyInfo dep = dependency_info(p);
  LinearReport lin = check_linear(p, dep);
  if (!lin.linear) throw UsageError("eval_memoized: program is not linear");
  MemoProver prover(p, w, budget);
  return prover.prove(p.ans, {}) ? Verdict::Accept : Verdict::Reject;
}

bool eval_drx_constraint(std::string_view value, const DrxNode& regex) {
  return drx_match(regex, value);
}

// ---- deterministic chain evaluation --------------------------------------

namespace {

struct FallbackNeeded : Error {
  using Error::Error;
};

// Union-find over deferred placeholders; classes may carry a ground value.
struct AliasStore {
  struct Node {
    int parent;
    bool has = false;
    Span val;
  };
  std::vector<Node> nodes;

  int fresh() {
    nodes.push_back({static_cast<int>(nodes.size()), false, {}});
    return static_cast<int>(nodes.size()) - 1;
  }
  int find(int i) {
    while (nodes[i].parent != i) {
      nodes[i].parent = nodes[nodes[i].parent].parent;
      i = nodes[i].parent;
    }
    return i;
  }
  bool has_value(int i) { return nodes[find(i)].has; }
  Span value(int i) { return nodes[find(i)].val; }
  void assign(std::string_view w, int i, Span v) {
    int r = find(i);
    if (nodes[r].has) {
      if (!span_content_eq(w, nodes[r].val, v)) throw FallbackNeeded("alias value clash");
      return;
    }
    nodes[r].has = true;
    nodes[r].val = v;
  }
  // merge; both valued requires equal content (reported via return)
  bool unite(std::string_view w, int a, int b) {
    int ra = find(a), rb = find(b);
    if (ra == rb) return true;
    if (nodes[ra].has && nodes[rb].has) return span_content_eq(w, nodes[ra].val, nodes[rb].val);
    if (nodes[ra].has) std::swap(ra, rb);
    nodes[ra].parent = rb;  // rb keeps its value if any
    return true;
  }
};

struct Value {
  bool ground = false;
  Span s;
  int alias = -1;

  static Value of(Span sp) { return {true, sp, -1}; }
  static Value ref(int a) { return {false, {}, a}; }
};

struct ChainEvaluator {
  const Program& p;
  std::string_view w;
  const TopdownOptions& opts;
  bool sd_mode;
  DependencyInfo dep;
  LinearReport lin;
  const RuleLookup* lookup = nullptr;
  TimeGuard guard;
  AliasStore aliases;
  uint64_t max_chain = 0;

  // applied rule instances for the final soundness re-check
  struct Applied {
    int rule;
    std::vector<std::pair<VarId, Value>> bindings;
  };
  std::vector<Applied> applied;

  ChainEvaluator(const Program& pp, std::string_view ww, const TopdownOptions& o, bool sd)
      : p(pp), w(ww), opts(o), sd_mode(sd), dep(dependency_info(pp)),
        lin(check_linear(pp, dep)), guard{o.budget} {}

  Span resolve_or_throw(const Value& v) {
    if (v.ground) return v.s;
    if (aliases.has_value(v.alias)) return aliases.value(v.alias);
    throw FallbackNeeded("rule choice depends on an unresolved placeholder");
  }

  std::optional<Span> resolve(const Value& v) {
    if (v.ground) return v.s;
    if (aliases.has_value(v.alias)) return aliases.value(v.alias);
    return std::nullopt;
  }

  // one goal-directed chain inside a single recursive stratum
  Verdict run_chain(SymId sym, std::vector<Value> args, EvalTrace& trace, int depth) {
    if (depth > 64) throw BudgetError("subroutine nesting too deep");
    uint64_t steps = 0;
    const uint64_t step_budget = w.size() + p.relations.size() + 1;
    std::set<std::string> visited;

    for (;;) {
      guard.tick();
      steps++;
      max_chain = std::max(max_chain, steps);
      if (sd_mode) {
        if (steps > step_budget)
          throw InternalError(
              "strictly-decreasing step budget exceeded: program not actually SD");
      } else {
        std::string key = config_key(sym, args);
        if (!visited.insert(key).second) return Verdict::Reject;  // revisit = no proof
      }

      std::vector<int> candidates;
      for (int ri : p.rules_of(sym))
        if (!lookup || lookup_compatible(ri, args)) candidates.push_back(ri);

      int applicable = -1;
      TrialOutcome chosenOutcome;

      for (int ri : candidates) {
        auto outcome = try_rule(ri, args, depth);
        if (!outcome) continue;
        if (applicable >= 0)
          throw InternalError("two rules applicable at one step of a deterministic program: " +
                              std::to_string(applicable) + " and " + std::to_string(ri));
        applicable = ri;
        chosenOutcome = std::move(*outcome);
      }
      if (applicable < 0) return Verdict::Reject;

      aliases = std::move(chosenOutcome.store);
      applied.push_back({applicable, chosenOutcome.bindings});
      if (opts.record_trace) {
        EvalTrace::Step st;
        st.rule = applicable;
        for (auto& [v, val] : chosenOutcome.bindings)
          if (auto sp = resolve(val))
            st.bindings.push_back({p.var_name(v), std::string(span_view(w, *sp))});
        trace.steps.push_back(std::move(st));
        for (auto& s : chosenOutcome.subs) trace.subroutines.push_back(std::move(s));
      }
      if (chosenOutcome.rec_atom < 0) return Verdict::Accept;
      sym = chosenOutcome.next_sym;
      args = std::move(chosenOutcome.next_args);
    }
  }

  std::string config_key(SymId sym, const std::vector<Value>& args) {
    std::string key = std::to_string(sym);
    std::map<int, int> canon;
    for (auto& a : args) {
      key += '|';
      if (auto sp = resolve(a)) {
        key += span_view(w, *sp);
      } else {
        int root = aliases.find(a.alias);
        auto [it, fresh] = canon.emplace(root, static_cast<int>(canon.size()));
        key += '?';
        key += std::to_string(it->second);
      }
    }
    return key;
  }

  bool lookup_compatible(int rule, const std::vector<Value>& args) {
    for (auto& ob : lookup->per_rule[rule]) {
      std::optional<Span> sp;
      if (ob.top_pos < static_cast<int>(args.size()))
        sp = resolve(args[ob.top_pos]);
      else
        sp = Span{0, static_cast<uint32_t>(w.size())};  // the universe slot
      if (!sp) return true;  // cannot observe; let the trial decide
      std::string_view v = span_view(w, *sp);
      switch (ob.kind) {
        case RuleLookup::Observation::First:
          if (v.empty() || v[0] != ob.letter) return false;
          break;
        case RuleLookup::Observation::Last:
          if (v.empty() || v.back() != ob.letter) return false;
          break;
        case RuleLookup::Observation::ExactLen:
          if (v.size() != ob.len) return false;
          break;
        case RuleLookup::Observation::LookAfter: {
          // requires the value to be a prefix of w followed by the letter
          if (sp->len >= w.size()) return false;
          if (sp->pos != 0 && w.compare(0, sp->len, w, sp->pos, sp->len) != 0) return false;
          if (w[sp->len] != ob.letter) return false;
          break;
        }
        case RuleLookup::Observation::LookBefore: {
          if (sp->len >= w.size()) return false;
          size_t start = w.size() - sp->len;
          if (sp->pos != start && w.compare(start, sp->len, w, sp->pos, sp->len) != 0)
            return false;
          if (w[start - 1] != ob.letter) return false;
          break;
        }
        case RuleLookup::Observation::EqualsUniverse:
          if (sp->len != w.size()) return false;
          break;
      }
    }
    return true;
  }

  struct TrialOutcome {
    AliasStore store;
    std::vector<std::pair<VarId, Value>> bindings;
    int rec_atom = -1;
    SymId next_sym = -1;
    std::vector<Value> next_args;
    std::vector<EvalTrace> subs;
  };

  std::optional<TrialOutcome> try_rule(int ri, const std::vector<Value>& goal_args, int depth) {
    const Rule& rule = p.rules[ri];
    AliasStore saved = aliases;  // trial on a private copy
    std::map<VarId, Value> bind;
    bind[p.universe] = Value::of(Span{0, static_cast<uint32_t>(w.size())});
    auto fail = [&]() -> std::optional<TrialOutcome> {
      aliases = std::move(saved);
      return std::nullopt;
    };

    try {
      for (size_t i = 0; i < rule.head_args.size(); i++)
        if (!unify_var(bind, rule.head_args[i], goal_args[i])) return fail();

      int rec_atom = lin.recursive_atom[ri];
      std::vector<EvalTrace> subs;

      // equations to fixpoint, then subroutines, then re-run equations
      std::vector<bool> eq_done(rule.body.size(), false);
      std::vector<bool> atom_done(rule.body.size(), false);
      bool progress = true;
      while (progress) {
        progress = false;
        // pattern equations
        bool eq_progress = true;
        while (eq_progress) {
          eq_progress = false;
          for (size_t ai = 0; ai < rule.body.size(); ai++) {
            if (eq_done[ai]) continue;
            const auto* eq = std::get_if<PatternEquation>(&rule.body[ai]);
            if (!eq) continue;
            int state = step_equation(bind, *eq);
            if (state < 0) return fail();
            if (state > 0) {
              eq_done[ai] = true;
              eq_progress = true;
              progress = true;
            }
          }
        }
        // one subroutine or constraint; ground-argument atoms go first so
        // their outputs feed the rest before anything has to be deferred
        int pick = -1;
        for (size_t ai = 0; ai < rule.body.size(); ai++) {
          if (atom_done[ai] || static_cast<int>(ai) == rec_atom) continue;
          if (std::holds_alternative<PatternEquation>(rule.body[ai])) continue;
          bool ground = true;
          for (VarId v : atom_vars(rule.body[ai])) {
            auto it = bind.find(v);
            if (it == bind.end() || !resolve(it->second)) ground = false;
          }
          if (ground) {
            pick = static_cast<int>(ai);
            break;
          }
          if (pick < 0) pick = static_cast<int>(ai);
        }
        if (pick >= 0) {
          size_t ai = static_cast<size_t>(pick);
          if (const auto* ra = std::get_if<RelationAtom>(&rule.body[ai])) {
            // solved as a subroutine: its own goal-directed chain, grounding
            // any deferred arguments through its base rule
            std::vector<Value> sub_args;
            for (VarId v : ra->args) sub_args.push_back(value_of(bind, v));
            EvalTrace sub;
            sub.recorded = opts.record_trace;
            bool okAtom = run_chain(ra->sym, sub_args, sub, depth + 1) == Verdict::Accept;
            if (opts.record_trace) subs.push_back(std::move(sub));
            if (!okAtom) return fail();
          } else {
            const auto& c = std::get<DrxConstraint>(rule.body[ai]);
            Span sp = resolve_or_throw(value_of(bind, c.var));
            if (!eval_drx_constraint(span_view(w, sp), *c.regex)) return fail();
          }
          atom_done[ai] = true;
          progress = true;
        }
      }

      // a still-unresolved equation means this configuration cannot be
      // decided on ground values alone
      for (size_t ai = 0; ai < rule.body.size(); ai++) {
        if (eq_done[ai]) continue;
        if (std::holds_alternative<PatternEquation>(rule.body[ai]))
          throw FallbackNeeded("pattern equation with several unresolved variables");
      }

      TrialOutcome out;
      out.rec_atom = rec_atom;
      if (rec_atom >= 0) {
        const auto& ra = std::get<RelationAtom>(rule.body[rec_atom]);
        out.next_sym = ra.sym;
        for (VarId v : ra.args) out.next_args.push_back(value_of(bind, v));
      }
      for (auto& [v, val] : bind) out.bindings.push_back({v, val});
      out.subs = std::move(subs);
      out.store = std::move(aliases);
      aliases = std::move(saved);
      return out;
    } catch (const FallbackNeeded&) {
      aliases = std::move(saved);
      throw;
    }
  }

  Value value_of(std::map<VarId, Value>& bind, VarId v) {
    auto it = bind.find(v);
    if (it != bind.end()) return it->second;
    Value val = Value::ref(aliases.fresh());
    bind.emplace(v, val);
    return val;
  }

  bool unify_var(std::map<VarId, Value>& bind, VarId var, const Value& val) {
    auto it = bind.find(var);
    if (it == bind.end()) {
      bind.emplace(var, val);
      return true;
    }
    return unify_values(it->second, val);
  }

  bool unify_values(const Value& a, const Value& b) {
    auto sa = resolve(a), sb = resolve(b);
    if (sa && sb) return span_content_eq(w, *sa, *sb);
    if (sa && !sb) {
      aliases.assign(w, b.alias, *sa);
      return true;
    }
    if (!sa && sb) {
      aliases.assign(w, a.alias, *sb);
      return true;
    }
    return aliases.unite(w, a.alias, b.alias);
  }

  // 1 = solved or verified, 0 = not yet decidable, -1 = fails
  int step_equation(std::map<VarId, Value>& bind, const PatternEquation& eq) {
    std::vector<std::optional<Span>> grounded(p.var_names.size());
    std::set<VarId> vars{eq.lhs};
    for (auto& it : eq.rhs.items)
      if (it.is_var) vars.insert(it.var);
    std::vector<VarId> unknown;
    for (VarId v : vars) {
      auto it = bind.find(v);
      std::optional<Span> sp = it == bind.end() ? std::nullopt : resolve(it->second);
      if (sp)
        grounded[v] = sp;
      else
        unknown.push_back(v);
    }
    if (unknown.size() > 1) return 0;
    if (unknown.empty()) {
      // verify
      Span lhs = *grounded[eq.lhs];
      size_t total = 0;
      for (auto& it : eq.rhs.items) total += it.is_var ? grounded[it.var]->len : 1;
      if (total != lhs.len) return -1;
      uint32_t off = 0;
      for (auto& it : eq.rhs.items) {
        if (!it.is_var) {
          if (w[lhs.pos + off] != it.sym) return -1;
          off += 1;
        } else {
          Span v = *grounded[it.var];
          if (!span_content_eq(w, Span{lhs.pos + off, v.len}, v)) return -1;
          off += v.len;
        }
      }
      return 1;
    }
    auto solved = solve_unique_equation(w, p, eq, grounded);
    if (!solved) return -1;
    VarId v = solved->var;
    auto it = bind.find(v);
    if (it == bind.end()) {
      bind.emplace(v, Value::of(solved->value));
    } else if (!it->second.ground) {
      aliases.assign(w, it->second.alias, solved->value);
    } else if (!span_content_eq(w, it->second.s, solved->value)) {
      return -1;
    }
    return 1;
  }

  // every applied rule must verify under the final ground bindings
  void final_check() {
    for (auto& ap : applied) {
      const Rule& rule = p.rules[ap.rule];
      std::vector<std::optional<Span>> grounded(p.var_names.size());
      for (auto& [v, val] : ap.bindings) {
        auto sp = resolve(val);
        if (!sp) throw FallbackNeeded("alias never grounded");
        grounded[v] = sp;
      }
      for (auto& a : rule.body) {
        const auto* eq = std::get_if<PatternEquation>(&a);
        if (!eq) continue;
        Span lhs = *grounded[eq->lhs];
        size_t total = 0;
        for (auto& it : eq->rhs.items) total += it.is_var ? grounded[it.var]->len : 1;
        if (total != lhs.len)
          throw InternalError("deferred-binding soundness check failed (length)");
        uint32_t off = 0;
        for (auto& it : eq->rhs.items) {
          if (!it.is_var) {
            if (w[lhs.pos + off] != it.sym)
              throw InternalError("deferred-binding soundness check failed (terminal)");
            off += 1;
          } else {
            Span v = *grounded[it.var];
            if (!span_content_eq(w, Span{lhs.pos + off, v.len}, v))
              throw InternalError("deferred-binding soundness check failed (variable)");
            off += v.len;
          }
        }
      }
    }
  }
};

TopdownResult run_topdown(const Program& p, std::string_view w, const TopdownOptions& opts,
                          bool sd_mode) {
  if (!p.is_boolean()) throw UsageError("deterministic evaluation: Ans has arity > 0");
  FragmentReport rep = classify(p);
  for (char c : w)
    if (p.alphabet.find(c) == std::string::npos)
      throw InputError(std::string("input symbol '") + c + "' is outside the alphabet");
  if (sd_mode) {
    if (rep.tier != "sd-fast")
      throw UsageError("eval_sd: program is not certified strictly decreasing");
  } else {
    if (!(rep.dolla || rep.dolla_plus))
      throw UsageError("eval_deterministic: program is not certified deterministic");
  }

  TopdownResult result;
  ChainEvaluator ev(p, w, opts, sd_mode);
  RuleLookup lookup;
  if (rep.dolla) {
    lookup = build_rule_lookup(p);
    ev.lookup = &lookup;
    result.lookup_entries = lookup.entries;
  }
  result.trace.recorded = opts.record_trace;
  try {
    result.verdict = ev.run_chain(p.ans, {}, result.trace, 0);
    if (result.verdict == Verdict::Accept) ev.final_check();
    result.trace.recursive_steps = ev.max_chain;
  } catch (const FallbackNeeded& f) {
    result.fell_back = true;
    result.warning = std::string("deferred bindings unresolved (") + f.what() +
                     "); fell back to the memoized evaluator";
    result.verdict = eval_memoized(p, w, opts.budget);
  }
  return result;
}

}  // namespace

TopdownResult eval_deterministic(const Program& p, std::string_view w,
                                 const TopdownOptions& opts) {
  return run_topdown(p, w, opts, false);
}

TopdownResult eval_sd(const Program& p, std::string_view w, const TopdownOptions& opts) {
  return run_topdown(p, w, opts, true);
}

RuleLookup build_rule_lookup(const Program& p) {
  FragmentReport rep = classify(p);
  if (!rep.dolla) throw UsageError("build_rule_lookup: program is not certified DOLLA");
  DependencyInfo dep = dependency_info(p);
  LinearReport lin = check_linear(p, dep);
  GlobalDetReport glob = profiles_and_global_determinism(p, dep, lin);

  RuleLookup lookup;
  lookup.per_rule.resize(p.rules.size());
  for (size_t ri = 0; ri < p.rules.size(); ri++) {
    const RuleProfile& prof = glob.profiles[ri];
    lookup.entries++;  // per-rule slot
    if (prof.inert) continue;
    for (size_t pos = 0; pos < prof.cells.size(); pos++) {
      const CellConstraint& c = prof.cells[pos];
      auto add = [&](RuleLookup::Observation::Kind k, char letter, size_t len) {
        lookup.per_rule[ri].push_back({static_cast<int>(pos), k, letter, len});
        lookup.entries++;
      };
      if (c.first) add(RuleLookup::Observation::First, *c.first, 0);
      if (c.last) add(RuleLookup::Observation::Last, *c.last, 0);
      if (c.exact_len) add(RuleLookup::Observation::ExactLen, 0, *c.exact_len);
      if (c.look_after) add(RuleLookup::Observation::LookAfter, *c.look_after, 0);
      if (c.look_before) add(RuleLookup::Observation::LookBefore, *c.look_before, 0);
      if (c.equals_universe && pos + 1 != prof.cells.size())
        add(RuleLookup::Observation::EqualsUniverse, 0, 0);
    }
  }
  uint64_t bound = 4ull * std::max<uint64_t>(1, p.relations.size()) *
                   std::max<uint64_t>(1, p.alphabet.size());
  if (lookup.entries > bound)
    throw InternalError("rule lookup preprocessing exceeded its O(|R| x |Sigma|) bound: " +
                        std::to_string(lookup.entries) + " > " + std::to_string(bound));
  return lookup;
}

std::string EvalTrace::to_json() const {
  nlohmann::json j;
  j["recursive_steps"] = recursive_steps;
  j["steps"] = nlohmann::json::array();
  for (auto& s : steps) {
    nlohmann::json b = nlohmann::json::object();
    for (auto& [k, v] : s.bindings) b[k] = v;
    j["steps"].push_back({{"rule", s.rule}, {"bindings", b}});
  }
  j["subroutines"] = nlohmann::json::array();
  for (auto& sub : subroutines) j["subroutines"].push_back(nlohmann::json::parse(sub.to_json()));
  return j.dump(2);
}

}  // namespace fcdl
