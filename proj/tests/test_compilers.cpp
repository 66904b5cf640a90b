#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fcdl/analysis.hpp"
#include "fcdl/compile.hpp"
#include "fcdl/fixpoint.hpp"
#include "fcdl/glushkov.hpp"
#include "fcdl/parser.hpp"
#include "fcdl/topdown.hpp"
#include "support.hpp"

using namespace fcdl;

TEST_CASE("a* DFA compiles to a program matching direct simulation") {
  MultiHeadAutomaton m = parse_automaton(test::data_file("astar_dfa.json"));
  Program p = compile_2dfa(m);
  for (const std::string& w : words_up_to("a", 8)) {
    bool sim = simulate_automaton(m, w);
    CHECK((model_check(p, w) == Verdict::Accept) == sim);
  }
  FragmentReport rep = classify(p);
  CHECK(rep.dolla);
}

TEST_CASE("two-head a^n b^n DFA compiles and agrees with simulation") {
  MultiHeadAutomaton m = parse_automaton(test::data_file("anbn_dfa.json"));
  Program p = compile_2dfa(m);
  FragmentReport rep = classify(p);
  CHECK(rep.dolla);
  for (const std::string& w : words_up_to("ab", 8)) {
    bool sim = simulate_automaton(m, w);
    bool expect = (*builtin_language("anbn"))(w);
    REQUIRE_MESSAGE(sim == expect, "simulator wrong on '", w, "'");
    REQUIRE_MESSAGE((model_check(p, w) == Verdict::Accept) == sim, "compiled wrong on '", w, "'");
    REQUIRE((eval_deterministic(p, w).verdict == Verdict::Accept) == sim);
  }
}

TEST_CASE("the epsilon rule is present exactly when the automaton accepts epsilon") {
  MultiHeadAutomaton m = parse_automaton(test::data_file("anbn_dfa.json"));
  REQUIRE(simulate_automaton(m, ""));
  Program p = compile_2dfa(m);
  bool has_eps_rule = false;
  for (auto& r : p.rules) {
    if (r.head != p.ans || r.body.size() != 1) continue;
    const auto* eq = std::get_if<PatternEquation>(&r.body[0]);
    if (eq && eq->lhs == p.universe && eq->rhs.items.empty()) has_eps_rule = true;
  }
  CHECK(has_eps_rule);

  MultiHeadAutomaton n = parse_automaton(test::data_file("nfa_contains_ab.json"));
  REQUIRE(!simulate_automaton(n, ""));
  Program q = compile_2nfa(n);
  for (auto& r : q.rules) {
    if (r.head != q.ans || r.body.size() != 1) continue;
    const auto* eq = std::get_if<PatternEquation>(&r.body[0]);
    CHECK(!(eq && eq->lhs == q.universe && eq->rhs.items.empty()));
  }
}

TEST_CASE("nondeterministic automata compile to linear programs for the memoized tier") {
  MultiHeadAutomaton m = parse_automaton(test::data_file("nfa_contains_ab.json"));
  CHECK_THROWS_AS(compile_2dfa(m), UsageError);
  Program p = compile_2nfa(m);
  DependencyInfo dep = dependency_info(p);
  CHECK(check_linear(p, dep).linear);
  for (const std::string& w : words_up_to("ab", 7)) {
    bool sim = simulate_automaton(m, w);
    CHECK((eval_memoized(p, w) == Verdict::Accept) == sim);
  }
}

TEST_CASE("DRX compilation bounds hold with the paper formulas") {
  DrxPtr g = parse_drx("<x:(a|b)+> d &x");
  auto [dolla, ds] = compile_drx_dolla(*g);
  CHECK(ds.k == 1);
  CHECK(ds.n == 4);
  CHECK(ds.bound_rules == 1 * (3 + 1) + 4 * (4 + 3) + 1);  // 33
  CHECK(ds.bound_symbols == 1 + 4 + 2);                    // 7
  CHECK(ds.rules <= ds.bound_rules);
  CHECK(ds.symbols <= ds.bound_symbols);

  auto [dplus, ps] = compile_drx_dollaplus(*g);
  CHECK(ps.bound_rules == 4 * (4 + 3) + 1);  // 29
  CHECK(ps.bound_symbols == 4 + 2);          // 6
  CHECK(ps.rules <= ps.bound_rules);
  CHECK(ps.symbols <= ps.bound_symbols);

  DrxPtr ab = parse_drx("a b");
  auto [chain, cs] = compile_drx_dollaplus(*ab);
  CHECK(cs.k == 0);
  CHECK(cs.n == 2);
  CHECK(model_check(chain, "ab") == Verdict::Accept);
  CHECK(model_check(chain, "a") == Verdict::Reject);
  CHECK(model_check(chain, "abb") == Verdict::Reject);
}

TEST_CASE("both compilations classify as strictly decreasing fragments") {
  for (auto* rx : {"<x:(a|b)+> d &x", "a+", "<m:a+> b &m"}) {
    DrxPtr e = parse_drx(rx);
    auto [dolla, _s1] = compile_drx_dolla(*e);
    FragmentReport r1 = classify(dolla);
    CHECK(r1.dolla);
    CHECK(r1.strictly_decreasing);
    auto [dplus, _s2] = compile_drx_dollaplus(*e);
    FragmentReport r2 = classify(dplus);
    CHECK(r2.dolla_plus);
    CHECK(r2.strictly_decreasing);
  }
}

TEST_CASE("three-way agreement: matcher, oracle, compiled programs") {
  for (auto* rx : {"<x:(a|b)+> d &x", "(a b)+", "<x:a> <y:b> &x &y"}) {
    DrxPtr e = parse_drx(rx);
    std::string sigma = drx_terminals(*e);
    auto [dolla, s1] = compile_drx_dolla(*e);
    auto [dplus, s2] = compile_drx_dollaplus(*e);
    for (const std::string& w : words_up_to(sigma, 6)) {
      bool oracle = drx_match_bruteforce(*e, w);
      REQUIRE(drx_match(*e, w) == oracle);
      REQUIRE((eval_sd(dolla, w).verdict == Verdict::Accept) == oracle);
      REQUIRE((eval_sd(dplus, w).verdict == Verdict::Accept) == oracle);
    }
  }
}

TEST_CASE("compile rejects nondeterministic regexes") {
  DrxPtr gprime = parse_drx("<x:(a|b)*> &x");
  CHECK_THROWS_AS(compile_drx_dolla(*gprime), UsageError);
  CHECK_THROWS_AS(compile_drx_dollaplus(*gprime), UsageError);
  DrxPtr rebind = parse_drx("(<x:a> b &x)+");
  CHECK_THROWS_AS(compile_drx_dollaplus(*rebind), UsageError);  // re-saved memory
}

TEST_CASE("trivially accepting machine yields an accepting instance") {
  TuringSpec t = parse_turing(test::data_file("turing_accept.json"));
  REQUIRE(simulate_turing_space(t, 2));
  PspaceInstance inst = generate_pspace_instance(t, 2);
  CHECK(inst.word == "aa");  // n = max(k, |tape|) = 2
  DependencyInfo dep = dependency_info(inst.program);
  CHECK(check_linear(inst.program, dep).linear);
  CHECK(model_check(inst.program, inst.word) == Verdict::Accept);
}

TEST_CASE("looping machine yields a rejecting instance") {
  TuringSpec t = parse_turing(test::data_file("turing_loop.json"));
  REQUIRE(!simulate_turing_space(t, 2));
  PspaceInstance inst = generate_pspace_instance(t, 2);
  DependencyInfo dep = dependency_info(inst.program);
  CHECK(check_linear(inst.program, dep).linear);
  CHECK(model_check(inst.program, inst.word) == Verdict::Reject);
}

TEST_CASE("unary encodings stay inside the generated word") {
  // k=1, |tape|=2 -> w = a^2, codes within {e, a, aa}
  TuringSpec t = parse_turing(test::data_file("turing_accept.json"));
  t.tape = "_x";
  PspaceInstance inst = generate_pspace_instance(t, 1);
  CHECK(inst.word == "aa");
  for (auto& r : inst.program.rules)
    for (auto& a : r.body)
      if (const auto* eq = std::get_if<PatternEquation>(&a))
        CHECK(eq->rhs.terminal_count() <= inst.word.size());
}

TEST_CASE("compiled programs round-trip through the printer") {
  // builder-made programs intern names in construction order, so the
  // comparison is textual: print, parse, print again
  MultiHeadAutomaton m = parse_automaton(test::data_file("anbn_dfa.json"));
  Program p = compile_2dfa(m);
  std::string text = print_program(p);
  CHECK(print_program(parse_program(text)) == text);

  auto [dolla, _] = compile_drx_dolla(*parse_drx("<x:(a|b)+> d &x"));
  std::string dtext = print_program(dolla);
  CHECK(print_program(parse_program(dtext)) == dtext);
}
