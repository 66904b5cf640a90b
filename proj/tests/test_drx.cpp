#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fcdl/glushkov.hpp"
#include "support.hpp"

using namespace fcdl;

TEST_CASE("position automaton of the paper regex, worked by hand") {
  DrxPtr g = parse_drx("<x:(a|b)+> d &x");
  PositionAutomaton pa = drx_position_automaton(*g);
  REQUIRE(pa.n() == 4);  // a, b, d, recall x
  CHECK(pa.k() == 1);
  CHECK(!pa.nullable);
  // first = {a, b}
  auto first = pa.first_targets();
  std::set<int> f(first.begin(), first.end());
  CHECK(f == std::set<int>{0, 1});
  CHECK(pa.positions[0].sym == 'a');
  CHECK(pa.positions[1].sym == 'b');
  // follow(d) = {recall}
  CHECK(pa.follow_targets(2) == std::vector<int>{3});
  CHECK(pa.positions[3].is_recall);
  // last = {recall}
  CHECK(pa.last == std::set<int>{3});
  // memory x open exactly at the bound letters
  CHECK(pa.positions[0].open == std::vector<int>{0});
  CHECK(pa.positions[1].open == std::vector<int>{0});
  CHECK(pa.positions[2].open.empty());
  CHECK(pa.positions[3].open.empty());
}

TEST_CASE("single-position and textbook star cases") {
  PositionAutomaton single = drx_position_automaton(*parse_drx("a"));
  CHECK(single.n() == 1);
  CHECK(single.first_targets() == std::vector<int>{0});
  CHECK(single.last == std::set<int>{0});
  CHECK(single.follow_targets(0).empty());
  CHECK(!single.nullable);

  PositionAutomaton star = drx_position_automaton(*parse_drx("(a|b)*"));
  CHECK(star.nullable);
  auto star_first = star.first_targets();
  std::set<int> f(star_first.begin(), star_first.end());
  CHECK(f == std::set<int>{0, 1});
  CHECK(star.last == std::set<int>{0, 1});
}

TEST_CASE("determinism check matches the paper examples") {
  CHECK(drx_check_deterministic(*parse_drx("<x:(a|b)+> d &x")).deterministic);
  DrxDetReport gprime = drx_check_deterministic(*parse_drx("<x:(a|b)*> &x"));
  CHECK(!gprime.deterministic);  // recall shares the first set with a, b
  CHECK(!drx_check_deterministic(*parse_drx("a|a")).deterministic);
  CHECK(drx_check_deterministic(*parse_drx("(a|b)* c")).deterministic);
  CHECK(drx_check_deterministic(*parse_drx("<y:<x:a> b &x> c &y")).deterministic);
}

TEST_CASE("drx_match agrees with the paper membership examples") {
  DrxPtr g = parse_drx("<x:(a|b)+> d &x");
  CHECK(drx_match(*g, "abdab"));
  CHECK(!drx_match(*g, "abdba"));
  CHECK(!drx_match(*g, "d"));  // the memory needs at least one letter
  CHECK(!drx_match(*g, ""));
  CHECK_THROWS_AS(drx_match(*parse_drx("<x:(a|b)*> &x"), "abab"), UsageError);
}

TEST_CASE("the backtracking oracle handles nondeterministic expressions") {
  DrxPtr gprime = parse_drx("<x:(a|b)*> &x");
  CHECK(drx_match_bruteforce(*gprime, "abab"));  // x = ab
  CHECK(!drx_match_bruteforce(*gprime, "aba"));
  CHECK(drx_match_bruteforce(*gprime, ""));
  CHECK_THROWS_AS(drx_match_bruteforce(*gprime, std::string(40, 'a')), BudgetError);
}

TEST_CASE("deterministic matcher equals the oracle on every small word") {
  std::vector<std::string> regexes{"<x:(a|b)+> d &x", "a b",      "a+",
                                   "(a|b)* c",        "<m:a+> b &m", "(a b)+",
                                   "<x:a> <y:b> &x &y", "(a b)*"};
  for (auto& rx : regexes) {
    DrxPtr e = parse_drx(rx);
    REQUIRE(drx_check_deterministic(*e).deterministic);
    std::string sigma = drx_terminals(*e);
    for (const std::string& w : words_up_to(sigma, 6)) {
      bool fast = drx_match(*e, w);
      bool slow = drx_match_bruteforce(*e, w);
      REQUIRE_MESSAGE(fast == slow, rx, " on '", w, "'");
    }
  }
}

TEST_CASE("memory re-entry under iteration resets the saved content") {
  // (<x:a|b> c &x)+ re-saves x on every round
  DrxPtr e = parse_drx("(<x:a|b> c &x)+");
  REQUIRE(drx_check_deterministic(*e).deterministic);
  for (const std::string& w : words_up_to("abc", 6)) {
    CHECK(drx_match(*e, w) == drx_match_bruteforce(*e, w));
  }
  CHECK(drx_match(*e, "aca"));
  CHECK(drx_match(*e, "acabcb"));
  CHECK(!drx_match(*e, "acab"));
}

TEST_CASE("epsilon-semantics: recalls of never-opened memories consume nothing") {
  // the right branch recalls x though only the left branch binds it
  DrxPtr e = parse_drx("(<x:a> b &x)|(c &x)");
  CHECK(drx_match_bruteforce(*e, "aba"));
  CHECK(drx_match_bruteforce(*e, "c"));   // x recalls as epsilon
  CHECK(!drx_match_bruteforce(*e, "ca"));
  REQUIRE(drx_check_deterministic(*e).deterministic);
  CHECK(drx_match(*e, "c"));
  CHECK(!drx_match(*e, "ca"));
}
