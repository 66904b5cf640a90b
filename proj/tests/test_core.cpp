#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>

#include "fcdl/factors.hpp"
#include "fcdl/parser.hpp"
#include "support.hpp"

using namespace fcdl;

TEST_CASE("intern_factors enumerates exactly the distinct factors") {
  FactorTable t = intern_factors("ab");
  std::set<std::string> got(t.factors.begin(), t.factors.end());
  CHECK(got == std::set<std::string>{"", "a", "b", "ab"});

  FactorTable u = intern_factors("aaa");
  CHECK(u.size() == 4);  // unary word has |w|+1 factors
  CHECK(u.factors == std::vector<std::string>{"", "a", "aa", "aaa"});

  FactorTable v = intern_factors("aba");
  std::set<std::string> got3(v.factors.begin(), v.factors.end());
  CHECK(got3 == std::set<std::string>{"", "a", "b", "ab", "ba", "aba"});
  CHECK(v.size() == 6);
}

TEST_CASE("intern_factors id assignment is by length then lexicographic") {
  FactorTable t = intern_factors("ba");
  CHECK(t.factors == std::vector<std::string>{"", "a", "b", "ba"});
  CHECK(t.id_of("") == 0);
  CHECK(t.word_id() == 3);
}

TEST_CASE("intern_factors size properties") {
  for (size_t n = 0; n <= 12; n++) {
    FactorTable t = intern_factors(std::string(n, 'a'));
    CHECK(t.size() == n + 1);
  }
  for (const std::string& w : words_up_to("ab", 12)) {
    FactorTable t = intern_factors(w);
    CHECK(t.size() <= w.size() * (w.size() + 1) / 2 + 1);
  }
}

TEST_CASE("intern_factors rejects symbols outside the alphabet") {
  CHECK_THROWS_AS(intern_factors("abc", "ab"), InputError);
  CHECK_NOTHROW(intern_factors("", "ab"));
}

TEST_CASE("apply_substitution is homomorphic") {
  ProgramBuilder b;
  b.declare_alphabet("ab");
  VarId x = b.var("x");
  FactorTable t = intern_factors("abaab");
  Substitution theta(b.p.var_names.size());
  theta.set(x, t.id_of("ab"));

  Pattern p1 = Pattern().v(x).t('a').v(x);
  CHECK(apply_substitution(p1, theta, t) == "abaab");
  Pattern p2 = Pattern().t('a').t('b');
  CHECK(apply_substitution(p2, theta, t) == "ab");

  Substitution erasing(b.p.var_names.size());
  erasing.set(x, t.id_of(""));
  CHECK(apply_substitution(Pattern().v(x), erasing, t) == "");

  // concatenation of patterns maps to concatenation of images
  for (const std::string& w : words_up_to("ab", 4)) {
    FactorTable tab = intern_factors(w);
    for (size_t f = 0; f < tab.size(); f++) {
      Substitution th(b.p.var_names.size());
      th.set(x, static_cast<FactorId>(f));
      Pattern pa = Pattern().v(x).t('a');
      Pattern pb = Pattern().t('b').v(x);
      Pattern pab = Pattern().v(x).t('a').t('b').v(x);
      CHECK(apply_substitution(pa, th, tab) + apply_substitution(pb, th, tab) ==
            apply_substitution(pab, th, tab));
    }
  }
  CHECK_THROWS_AS(apply_substitution(Pattern().v(b.var("fresh")), theta, t), UsageError);
}

TEST_CASE("match_equation solves the squares split from the worked example") {
  ProgramBuilder b;
  b.declare_alphabet("ab");
  VarId y = b.var("y");
  FactorTable t = intern_factors("abab");
  PatternEquation eq{b.p.universe, Pattern().v(y).v(y), {}};
  Substitution theta(b.p.var_names.size());
  theta.set(b.p.universe, t.word_id());

  auto sols = match_equation(eq, theta, t);
  REQUIRE(sols.size() == 1);
  CHECK(t.at(sols[0].get(y)) == "ab");

  FactorTable odd = intern_factors("aba");
  Substitution theta2(b.p.var_names.size());
  theta2.set(b.p.universe, odd.word_id());
  CHECK(match_equation(eq, theta2, odd).empty());
}

TEST_CASE("match_equation with unbound left side") {
  ProgramBuilder b;
  b.declare_alphabet("ab");
  VarId x = b.var("x");
  FactorTable t = intern_factors("ab");
  PatternEquation eq{x, Pattern(), {}};
  Substitution theta(b.p.var_names.size());
  auto sols = match_equation(eq, theta, t);
  REQUIRE(sols.size() == 1);
  CHECK(t.at(sols[0].get(x)) == "");
}

TEST_CASE("match_equation agrees with the blind enumeration oracle") {
  ProgramBuilder b;
  b.declare_alphabet("ab");
  VarId x = b.var("x"), y = b.var("y"), z = b.var("z");
  std::vector<PatternEquation> eqs{
      {x, Pattern().v(y).v(z), {}},
      {x, Pattern().t('a').v(y), {}},
      {x, Pattern().v(y).t('b').v(z), {}},
      {b.p.universe, Pattern().v(y).v(y), {}},
      {b.p.universe, Pattern().v(x).t('a').v(z), {}},
      {x, Pattern().v(y).v(y).t('a'), {}},
  };
  for (const std::string& w : words_up_to("ab", 6)) {
    FactorTable t = intern_factors(w);
    for (auto& eq : eqs) {
      Substitution theta(b.p.var_names.size());
      theta.set(b.p.universe, t.word_id());
      auto fast = match_equation(eq, theta, t);
      auto slow = test::match_equation_bruteforce(eq, theta, t);
      std::set<Substitution> a(fast.begin(), fast.end()), c(slow.begin(), slow.end());
      REQUIRE(a == c);
    }
  }
}

TEST_CASE("match_equation results only bind factors present in the table") {
  ProgramBuilder b;
  b.declare_alphabet("ab");
  VarId x = b.var("x"), y = b.var("y");
  for (const std::string& w : words_up_to("ab", 5)) {
    FactorTable t = intern_factors(w);
    PatternEquation eq{x, Pattern().v(y).t('a'), {}};
    Substitution theta(b.p.var_names.size());
    for (auto& sol : match_equation(eq, theta, t)) {
      for (VarId v : {x, y})
        if (sol.bound(v)) CHECK(sol.get(v) < static_cast<FactorId>(t.size()));
    }
  }
}

TEST_CASE("validate_program accepts the intro example and rejects defects") {
  Program good = parse_program(
      "Ans() <- univ = y z, E(y, z)."
      "E(x, y) <- x = '', y = ''."
      "E(x, y) <- x = 'a' u, y = 'b' v, E(u, v).");
  CHECK(validate_program(good).ok());

  CHECK_THROWS_AS(parse_program("R(x) <- y = ''."), ValidationError);  // x not in body

  CHECK_THROWS_AS(parse_program("Ans() <- R(univ). R(x) <- x = x 'a'."), ValidationError);
}

TEST_CASE("validate_program reports arity clashes") {
  ProgramBuilder b;
  b.declare_alphabet("a");
  SymId ans = b.rel("Ans", 0);
  VarId x = b.var("x");
  b.rule(ans, {}, {PatternEquation{x, Pattern(), {}}});
  // a relation atom with the wrong arity, constructed by hand
  SymId r = b.rel("R", 2);
  b.rule(r, {x, x}, {RelationAtom{r, {x}, {}}});
  Program p = b.finish(false);
  ValidationReport rep = validate_program(p);
  CHECK(!rep.ok());
}
