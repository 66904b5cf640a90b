// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Run via ctest or directly with the corpus directory as argv[1].

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "fcdl/analysis.hpp"
#include "fcdl/compile.hpp"
#include "fcdl/corpus.hpp"
#include "fcdl/fixpoint.hpp"
#include "fcdl/glushkov.hpp"
#include "fcdl/parser.hpp"
#include "fcdl/topdown.hpp"
#include "support.hpp"

using namespace fcdl;
using Clock = std::chrono::steady_clock;

namespace {

std::string g_corpus_dir;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Criterion {
  std::string name;
  std::function<void(std::ostringstream&)> run;  // throws / CHECK-fails on violation
};

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
  if (!cond) throw CheckFailure(msg);
}

Program corpus_program(const std::string& name) {
  return parse_program(test::read_file(g_corpus_dir + "/" + name));
}

// ---- criterion 1: evaluator agreement over the corpus --------------------

void criterion_evaluator_agreement(std::ostringstream& note) {
  auto t0 = Clock::now();
  std::vector<CorpusCase> cases = load_corpus_dir(g_corpus_dir);
  require(cases.size() >= 10, "corpus must hold at least 10 programs");
  for (auto* needed : {"anbn.fcd", "squares.fcd", "evenlen.fcd", "palindrome.fcd",
                       "anbn_plus.fcd", "drx_constraint.fcd"}) {
    bool found = false;
    for (auto& c : cases)
      if (c.name == needed) found = true;
    require(found, std::string("missing required corpus program ") + needed);
  }
  CorpusOptions opts;
  opts.max_len = 8;
  CorpusResult res = run_corpus(cases, opts);
  for (auto& d : res.disagreements)
    note << "\n    " << d.program << " '" << d.word << "': " << d.detail;
  require(res.disagreements.empty(), "evaluators disagreed");

  // the regex-constraint program additionally over its own alphabet
  std::vector<CorpusCase> drx;
  for (auto& c : cases)
    if (c.name == "drx_constraint.fcd") drx.push_back(c);
  CorpusOptions native;
  native.max_len = 7;
  native.alphabet = "abcd";
  CorpusResult res2 = run_corpus(drx, native);
  require(res2.disagreements.empty(), "regex-constraint program disagreed on its own alphabet");

  double secs = seconds_since(t0);
  note << res.programs << " programs x " << res.words_checked << " words, "
       << res.evaluator_runs + res2.evaluator_runs << " runs, " << secs << "s";
  require(secs < 120.0, "agreement sweep must finish under 2 minutes");
}

// ---- criterion 2: fragment classification of the worked examples ---------

void criterion_worked_examples(std::ostringstream& note) {
  FragmentReport anbn = classify(corpus_program("anbn.fcd"));
  require(anbn.linear, "the intro program must be linear");

  FragmentReport squares = classify(corpus_program("squares.fcd"));
  require(squares.linear, "the squares program must be linear");
  require(!squares.olla, "the squares program must not be OLLA");
  require(squares.dolla_plus, "the squares program must be DOLLA+");

  FragmentReport evenlen = classify(corpus_program("evenlen.fcd"));
  require(!evenlen.linear, "the even-length program must not be linear");

  FragmentReport pal = classify(corpus_program("palindrome.fcd"));
  require(pal.dolla_plus, "the palindrome program must be DOLLA+");
  require(pal.strictly_decreasing, "the palindrome program must be strictly decreasing");
  note << "0 mismatches on the worked examples";
}

// ---- criterion 3: profile-conflict soundness at desk scale ---------------

void criterion_profile_soundness(std::ostringstream& note) {
  auto t0 = Clock::now();
  int total = 0, syntactic_passes = 0;
  uint64_t oracle_words = 0;
  for (uint64_t seed = 0; total < 200; seed++) {
    require(seed < 4000, "generator failed to produce 200 usable programs");
    Program p;
    try {
      p = test::generate_olla_program(seed);
    } catch (const Error&) {
      continue;
    }
    DependencyInfo dep = dependency_info(p);
    LinearReport lin = check_linear(p, dep);
    OllaReport olla = classify_olla(p, dep, lin);
    if (!olla.olla || !olla.guarded) continue;
    total++;
    GlobalDetReport glob = profiles_and_global_determinism(p, dep, lin);
    LocalDetReport loc = local_determinism_olla(p, dep, lin);
    if (!glob.ok) continue;
    syntactic_passes++;
    for (const std::string& w : words_up_to("ab", 6)) {
      SemanticDetReport sem = semantic_determinism_oracle(p, w);
      oracle_words++;
      require(sem.global, "syntactic global determinism unsound for seed " +
                              std::to_string(seed) + " on '" + w + "'");
      if (loc.ok)
        require(sem.local, "syntactic local determinism unsound for seed " +
                               std::to_string(seed) + " on '" + w + "'");
    }
  }
  double secs = seconds_since(t0);
  note << total << " guarded OLLA programs, " << syntactic_passes
       << " certified deterministic, " << oracle_words << " oracle words, 0 violations, " << secs
       << "s";
  require(syntactic_passes >= 20, "too few certified programs to be meaningful");
  require(secs < 300.0, "soundness sweep must finish under 5 minutes");
}

// ---- criterion 4: the regex pipeline --------------------------------------

void criterion_drx_pipeline(std::ostringstream& note) {
  DrxPtr gamma = parse_drx("<x:(a|b)+> d &x");
  DrxPtr gamma_prime = parse_drx("<x:(a|b)*> &x");
  require(drx_check_deterministic(*gamma).deterministic, "the paper regex must be accepted");
  require(!drx_check_deterministic(*gamma_prime).deterministic,
          "the starred variant must be rejected");

  std::vector<std::string> regexes{
      "<x:(a|b)+> d &x", "a b",           "a+",
      "(a|b)* c",        "<m:a+> b &m",   "<x:a> <y:b> &x &y",
      "<y:<x:a> b &x> c &y",              "(a b)+",
      "(a|b)+ d (a|b)",  "(a b)*"};
  require(regexes.size() >= 8, "need at least 8 corpus regexes");

  uint64_t words = 0;
  for (auto& rx : regexes) {
    DrxPtr e = parse_drx(rx);
    require(drx_check_deterministic(*e).deterministic, rx + " must be deterministic");
    std::string sigma = drx_terminals(*e);
    int sig = static_cast<int>(sigma.size());

    auto [dolla, ds] = compile_drx_dolla(*e);
    auto [dplus, ps] = compile_drx_dollaplus(*e);
    require(ds.rules <= ds.k * (sig + 1) + ds.n * (ds.n + 3) + 1, rx + ": DOLLA rule bound");
    require(ds.symbols <= ds.k + ds.n + 2, rx + ": DOLLA symbol bound");
    require(ps.rules <= ps.n * (ps.n + 3) + 1, rx + ": DOLLA+ rule bound");
    require(ps.symbols <= ps.n + 2, rx + ": DOLLA+ symbol bound");

    FragmentReport rd = classify(dolla);
    require(rd.dolla && rd.strictly_decreasing, rx + " must compile to SD-DOLLA");
    FragmentReport rp = classify(dplus);
    require(rp.dolla_plus && rp.strictly_decreasing, rx + " must compile to SD-DOLLA+");

    for (const std::string& w : words_up_to(sigma, 8)) {
      bool oracle = drx_match_bruteforce(*e, w);
      bool fast = drx_match(*e, w);
      bool cd = eval_sd(dolla, w).verdict == Verdict::Accept;
      bool cp = eval_sd(dplus, w).verdict == Verdict::Accept;
      words++;
      require(fast == oracle, rx + ": matcher disagrees on '" + w + "'");
      require(cd == oracle, rx + ": DOLLA compilation disagrees on '" + w + "'");
      require(cp == oracle, rx + ": DOLLA+ compilation disagrees on '" + w + "'");
    }
  }
  note << regexes.size() << " regexes, " << words << " three-way words, 0 violations";
}

// ---- criterion 5: SD step bound and scaling -------------------------------

void criterion_sd_bounds(std::ostringstream& note) {
  Program pal = corpus_program("palindrome.fcd");

  // exact step formula on every accepted word: all palindromes to length 11,
  // then structured and sampled palindromes for every length up to 64
  uint64_t checked = 0;
  auto check_pal = [&](const std::string& w) {
    TopdownResult r = eval_sd(pal, w);
    require(r.verdict == Verdict::Accept, "palindrome rejected: " + w);
    uint64_t expect = (w.size() + 1) / 2 + 1;  // ceil(|w|/2) + 1
    require(r.trace.recursive_steps == expect,
            "step count " + std::to_string(r.trace.recursive_steps) + " != " +
                std::to_string(expect) + " on " + w);
    checked++;
  };
  for (const std::string& half : words_up_to("ab", 5)) {
    std::string rev(half.rbegin(), half.rend());
    check_pal(half + rev);              // even length
    check_pal(half + "a" + rev);        // odd length
    check_pal(half + "b" + rev);
  }
  std::mt19937_64 rng(7);
  for (size_t len = 12; len <= 64; len++) {
    std::string half;
    for (size_t i = 0; i < len / 2; i++) half += (rng() & 1) ? 'b' : 'a';
    std::string rev(half.rbegin(), half.rend());
    std::string w = len % 2 ? half + "a" + rev : half + rev;
    require(w.size() == len, "generator bug");
    check_pal(w);
    check_pal(std::string(len, 'a'));
  }

  // wall-clock scaling from 10^4 to 2*10^4 letters
  auto time_eval = [&](const std::string& w) {
    std::vector<double> times;
    for (int i = 0; i < 7; i++) {
      auto t0 = Clock::now();
      TopdownResult r = eval_sd(pal, w);
      times.push_back(seconds_since(t0));
      require(r.verdict == Verdict::Accept, "scaling word rejected");
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
  };
  std::string w1(10000, 'a'), w2(20000, 'a');
  time_eval(w1);  // warm up
  double t1 = time_eval(w1), t2 = time_eval(w2);
  double ratio = t2 / t1;
  require(ratio <= 2.5, "scaling ratio " + std::to_string(ratio) + " exceeds 2.5");

  // lookup preprocessing stays within c * |R| * |Sigma| entries (c = 4)
  uint64_t entries_total = 0;
  for (auto* name : {"astar.fcd", "evenword.fcd", "evena.fcd", "endsb.fcd", "abstar.fcd"}) {
    Program p = corpus_program(name);
    RuleLookup lookup = build_rule_lookup(p);
    entries_total += lookup.entries;
    require(lookup.entries <= 4ull * p.relations.size() * p.alphabet.size(),
            std::string(name) + ": lookup entry bound");
  }
  auto [dolla, _] = compile_drx_dolla(*parse_drx("<x:(a|b)+> d &x"));
  RuleLookup dl = build_rule_lookup(dolla);
  require(dl.entries <= 4ull * dolla.relations.size() * dolla.alphabet.size(),
          "compiled DOLLA lookup entry bound");

  note << checked << " step-exact palindromes, scaling " << t1 * 1e3 << "ms -> " << t2 * 1e3
       << "ms (x" << ratio << "), " << entries_total + dl.entries << " lookup entries";
}

// ---- criterion 6: automaton compilation -----------------------------------

void criterion_automata(std::ostringstream& note) {
  uint64_t words = 0;
  {
    MultiHeadAutomaton m = parse_automaton(test::data_file("astar_dfa.json"));
    Program p = compile_2dfa(m);
    require(classify(p).dolla, "compiled a* program must be DOLLA");
    for (const std::string& w : words_up_to("a", 8)) {
      bool sim = simulate_automaton(m, w);
      require((model_check(p, w) == Verdict::Accept) == sim, "a* fixpoint mismatch on " + w);
      require((eval_deterministic(p, w).verdict == Verdict::Accept) == sim,
              "a* deterministic mismatch on " + w);
      words++;
    }
  }
  {
    MultiHeadAutomaton m = parse_automaton(test::data_file("anbn_dfa.json"));
    require(simulate_automaton(m, ""), "the two-head machine accepts epsilon");
    Program p = compile_2dfa(m);
    require(classify(p).dolla, "compiled two-head program must be DOLLA");
    bool has_eps_rule = false;
    for (auto& r : p.rules) {
      if (r.head != p.ans || r.body.size() != 1) continue;
      const auto* eq = std::get_if<PatternEquation>(&r.body[0]);
      if (eq && eq->lhs == p.universe && eq->rhs.items.empty()) has_eps_rule = true;
    }
    require(has_eps_rule, "the epsilon special rule must be included");
    for (const std::string& w : words_up_to("ab", 8)) {
      bool sim = simulate_automaton(m, w);
      require((model_check(p, w) == Verdict::Accept) == sim,
              "two-head fixpoint mismatch on '" + w + "'");
      require((eval_deterministic(p, w).verdict == Verdict::Accept) == sim,
              "two-head deterministic mismatch on '" + w + "'");
      words++;
    }
  }
  {
    MultiHeadAutomaton m = parse_automaton(test::data_file("nfa_contains_ab.json"));
    Program p = compile_2nfa(m);
    DependencyInfo dep = dependency_info(p);
    require(check_linear(p, dep).linear, "compiled NFA program must be linear");
    for (const std::string& w : words_up_to("ab", 8)) {
      bool sim = simulate_automaton(m, w);
      require((eval_memoized(p, w) == Verdict::Accept) == sim,
              "NFA memoized mismatch on '" + w + "'");
      words++;
    }
  }
  note << words << " simulation words, 0 disagreements";
}

// ---- criterion 7: hardness instance generator -----------------------------

void criterion_pspace(std::ostringstream& note) {
  auto t0 = Clock::now();
  TuringSpec acc = parse_turing(test::data_file("turing_accept.json"));
  require(simulate_turing_space(acc, 2), "the trivial accepter must accept");
  PspaceInstance ia = generate_pspace_instance(acc, 2);
  DependencyInfo da = dependency_info(ia.program);
  require(check_linear(ia.program, da).linear, "generated program must be linear");
  require(model_check(ia.program, ia.word) == Verdict::Accept,
          "accepting machine must yield an accepting instance");

  TuringSpec loop = parse_turing(test::data_file("turing_loop.json"));
  require(!simulate_turing_space(loop, 2), "the looping machine must reject");
  PspaceInstance il = generate_pspace_instance(loop, 2);
  DependencyInfo dl = dependency_info(il.program);
  require(check_linear(il.program, dl).linear, "generated program must be linear");
  require(model_check(il.program, il.word) == Verdict::Reject,
          "looping machine must yield a rejecting instance");

  // a wider space bound keeps both verdicts
  require(model_check(generate_pspace_instance(acc, 4).program,
                      generate_pspace_instance(acc, 4).word) == Verdict::Accept,
          "accepting instance at k=4");
  double secs = seconds_since(t0);
  note << "both instances cross-checked, " << secs << "s";
  require(secs < 10.0, "generator sanity must finish under 10 seconds");
}

// ---- criterion 8: fixpoint bookkeeping ------------------------------------

void criterion_fixpoint_bookkeeping(std::ostringstream& note) {
  std::vector<CorpusCase> cases = load_corpus_dir(g_corpus_dir);
  uint64_t runs = 0;
  for (auto& c : cases) {
    for (const std::string& w : words_up_to("ab", 5)) {
      RelationStore base;
      try {
        base = evaluate(c.program, w);
      } catch (const InputError&) {
        continue;
      }
      runs++;
      // every stored component is a factor of w
      for (auto& rel : base.rels)
        for (auto& t : rel)
          for (FactorId f : t) {
            require(f >= 0 && f < static_cast<FactorId>(base.table.size()),
                    c.name + ": tuple component out of table range");
            require(w.find(base.table.at(f)) != std::string::npos,
                    c.name + ": stored value is not a factor of the word");
          }
      // rule order independence, five seeds
      for (uint64_t seed = 1; seed <= 5; seed++) {
        Program shuffled = shuffle_rules(c.program, seed * 977);
        RelationStore s = evaluate(shuffled, w);
        require(s.rels == base.rels,
                c.name + ": rule order changed the fixpoint on '" + w + "'");
      }
    }
  }
  note << runs << " evaluations x 5 shuffles, stores stable";
}

}  // namespace

int main(int argc, char** argv) {
  g_corpus_dir = argc > 1 ? argv[1] : test::corpus_dir();

  std::vector<Criterion> criteria{
      {"criterion-1 evaluator-agreement", criterion_evaluator_agreement},
      {"criterion-2 worked-example-classification", criterion_worked_examples},
      {"criterion-3 profile-conflict-soundness", criterion_profile_soundness},
      {"criterion-4 drx-pipeline", criterion_drx_pipeline},
      {"criterion-5 sd-step-bound-and-scaling", criterion_sd_bounds},
      {"criterion-6 automaton-compilation", criterion_automata},
      {"criterion-7 pspace-generator", criterion_pspace},
      {"criterion-8 fixpoint-bookkeeping", criterion_fixpoint_bookkeeping},
  };

  int failures = 0;
  for (auto& c : criteria) {
    std::ostringstream note;
    try {
      c.run(note);
      std::cout << "[PASS] " << c.name << " (" << note.str() << ")\n";
    } catch (const std::exception& e) {
      failures++;
      std::cout << "[FAIL] " << c.name << ": " << e.what() << note.str() << "\n";
    }
    std::cout.flush();
  }
  if (failures) std::cout << failures << " criterion(s) failed\n";
  return failures;
}
