#pragma once

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fcdl/corpus.hpp"
#include "fcdl/factors.hpp"
#include "fcdl/parser.hpp"

namespace fcdl::test {

inline std::string env_dir(const char* name, const char* fallback) {
  const char* v = std::getenv(name);
  return v ? v : fallback;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string data_file(const std::string& name) {
  return read_file(env_dir("FCDL_DATA_DIR", "tests/data") + "/" + name);
}

inline std::string corpus_dir() { return env_dir("FCDL_CORPUS_DIR", "corpus"); }

inline Program corpus_program(const std::string& name) {
  return parse_program(read_file(corpus_dir() + "/" + name));
}

// Independent oracle: enumerates every assignment of the equation's unbound
// variables over the factor table and keeps those whose sides coincide as
// strings. Quadratic and blind on purpose.
inline std::vector<Substitution> match_equation_bruteforce(const PatternEquation& eq,
                                                           const Substitution& theta,
                                                           const FactorTable& table) {
  std::vector<VarId> unbound;
  auto consider = [&](VarId v) {
    if (!theta.bound(v) && std::find(unbound.begin(), unbound.end(), v) == unbound.end())
      unbound.push_back(v);
  };
  consider(eq.lhs);
  for (auto& it : eq.rhs.items)
    if (it.is_var) consider(it.var);

  std::vector<Substitution> out;
  std::vector<size_t> idx(unbound.size(), 0);
  for (;;) {
    Substitution cand = theta;
    for (size_t i = 0; i < unbound.size(); i++)
      cand.set(unbound[i], static_cast<FactorId>(idx[i]));
    std::string lhs = table.at(cand.get(eq.lhs));
    std::string rhs;
    for (auto& it : eq.rhs.items) rhs += it.is_var ? table.at(cand.get(it.var)) : std::string(1, it.sym);
    if (lhs == rhs) out.push_back(cand);
    size_t d = 0;
    while (d < idx.size() && ++idx[d] == table.size()) idx[d++] = 0;
    if (d == idx.size()) break;
  }
  return out;
}

// ---- random guarded OLLA program generator ------------------------------

struct OllaGenOptions {
  int max_arity = 3;
  int max_rules = 6;
  bool bias_deterministic = true;
};

// A linear program over {a,b} with one or two mutually recursive symbols and
// only one-letter-lookahead equation shapes; orientation is fixed per
// argument position so the output is a well-formed OLLA program by design.
inline Program generate_olla_program(uint64_t seed, const OllaGenOptions& opts = {}) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int n) { return static_cast<int>(rng() % n); };
  auto letter = [&]() { return pick(2) ? 'b' : 'a'; };

  ProgramBuilder b;
  b.declare_alphabet("ab");
  int ar = 1 + pick(opts.max_arity);
  bool two_syms = pick(2) == 0;
  SymId Ans = b.rel("Ans", 0);
  SymId R = b.rel("R", ar);
  SymId S = two_syms ? b.rel("S", ar) : R;

  std::vector<bool> right_side(ar);  // per position: letters attach on this side
  for (int i = 0; i < ar; i++) right_side[i] = pick(2) == 0;

  std::vector<VarId> xs, ys, zs;
  for (int i = 0; i < ar; i++) xs.push_back(b.var("x" + std::to_string(i)));
  for (int i = 0; i < ar; i++) ys.push_back(b.var("y" + std::to_string(i)));
  for (int i = 0; i < ar; i++) zs.push_back(b.var("z" + std::to_string(i)));

  // Ans() <- R(univ, ..., univ)
  {
    std::vector<VarId> args(ar, b.p.universe);
    b.rule(Ans, {}, {RelationAtom{R, args, {}}});
  }

  // half the seeds are steered toward pairwise-conflicting rule sets:
  // position 0 carries epsilon on the base rule and alternating letters on
  // the recursive ones, per head symbol
  bool biased = opts.bias_deterministic && (seed % 2 == 0);
  std::map<SymId, int> letter_rules;
  int nrules = 2 + pick(biased ? 3 : opts.max_rules - 2);
  for (int r = 0; r < nrules; r++) {
    bool base = r == 0 || pick(3) == 0;  // ensure one base rule exists
    SymId head = (!two_syms || pick(2) == 0) ? R : S;
    SymId callee = head == R ? S : R;
    std::vector<Atom> body;
    std::vector<VarId> bottom_args;
    for (int i = 0; i < ar; i++) bottom_args.push_back(ys[i]);

    for (int i = 0; i < ar; i++) {
      int form = base ? pick(2) : pick(6);
      char a = letter();
      if (biased && i == 0) {
        if (base) {
          form = 0;  // epsilon, conflicts with any letter
        } else {
          form = 0;  // delete a letter from the decreasing side
          a = (letter_rules[head]++ % 2 == 0) ? 'a' : 'b';
        }
      }
      if (base) {
        // base rules pin every head variable
        if (form == 0)
          body.push_back(PatternEquation{xs[i], Pattern(), {}});
        else
          body.push_back(PatternEquation{
              b.p.universe,
              right_side[i] ? Pattern().v(xs[i]).t(a).v(zs[i]) : Pattern().v(zs[i]).t(a).v(xs[i]),
              {}});
        continue;
      }
      switch (form) {
        case 0:  // delete a letter
          body.push_back(PatternEquation{
              xs[i], right_side[i] ? Pattern().v(ys[i]).t(a) : Pattern().t(a).v(ys[i]), {}});
          break;
        case 1:  // add a letter
          body.push_back(PatternEquation{
              ys[i], right_side[i] ? Pattern().v(xs[i]).t(a) : Pattern().t(a).v(xs[i]), {}});
          break;
        case 2:  // epsilon, pass through
          body.push_back(PatternEquation{xs[i], Pattern(), {}});
          bottom_args[i] = xs[i];
          break;
        case 3:  // lookahead, pass through
          body.push_back(PatternEquation{
              b.p.universe,
              right_side[i] ? Pattern().v(xs[i]).t(a).v(zs[i]) : Pattern().v(zs[i]).t(a).v(xs[i]),
              {}});
          bottom_args[i] = xs[i];
          break;
        case 4:  // pure pass-through (unconstrained position)
          bottom_args[i] = xs[i];
          break;
        default:  // pin both ends to epsilon
          body.push_back(PatternEquation{xs[i], Pattern(), {}});
          body.push_back(PatternEquation{ys[i], Pattern(), {}});
          break;
      }
    }
    if (!base) body.push_back(RelationAtom{callee, bottom_args, {}});
    if (body.empty()) body.push_back(PatternEquation{xs[0], Pattern(), {}});
    b.rule(head, xs, std::move(body));
  }
  if (two_syms && b.p.rules_of(S).empty()) {
    // S needs at least one rule or the chain dies immediately; a base rule
    std::vector<Atom> body;
    for (int i = 0; i < ar; i++) body.push_back(PatternEquation{xs[i], Pattern(), {}});
    b.rule(S, xs, std::move(body));
  }
  return b.finish(true);
}

}  // namespace fcdl::test
