#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fcdl/fixpoint.hpp"
#include "fcdl/program.hpp"

namespace fcdl {

// Words over `alphabet` with length <= max_len, shortest first, lexicographic
// within a length.
std::vector<std::string> words_up_to(const std::string& alphabet, size_t max_len);

// Rules permuted by a deterministic seed; everything else unchanged.
Program shuffle_rules(const Program& p, uint64_t seed);

// Language predicates the corpus programs are annotated with (# lang: name).
std::optional<std::function<bool(std::string_view)>> builtin_language(const std::string& name);

// Expected Ans relation for the non-Boolean corpus entries.
std::optional<std::set<std::string>> expected_unary_ans(const std::string& lang,
                                                        std::string_view w);

struct CorpusCase {
  std::string name;
  Program program;
  std::string lang;  // optional builtin oracle name
};

struct CorpusOptions {
  size_t max_len = 8;
  std::string alphabet = "ab";  // words fed to every program
  EvalBudget budget;
  int shuffle_seeds = 0;  // additionally re-run with shuffled rule orders
};

struct CorpusResult {
  int programs = 0;
  uint64_t words_checked = 0;
  uint64_t evaluator_runs = 0;
  struct Disagreement {
    std::string program;
    std::string word;
    std::string detail;
  };
  std::vector<Disagreement> disagreements;  // first entry per program is minimal

  bool ok() const { return disagreements.empty(); }
};

// Runs every applicable evaluator on every word and cross-checks the results;
// non-Boolean programs compare the full naive and semi-naive stores instead.
CorpusResult run_corpus(const std::vector<CorpusCase>& cases, const CorpusOptions& opts);

// Loads *.fcd files from a directory; a leading `# lang: name` comment names
// the oracle.
std::vector<CorpusCase> load_corpus_dir(const std::string& dir);

}  // namespace fcdl
