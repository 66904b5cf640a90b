#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fcdl/cli.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace fcdl;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string corpus_path(const std::string& name) { return test::corpus_dir() + "/" + name; }

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("fcdl_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("check: classification succeeds regardless of flags") {
  CliRun r = cli({"check", corpus_path("palindrome.fcd")});
  CHECK(r.code == 0);
  CHECK(r.out.find("sd-fast") != std::string::npos);

  CliRun e = cli({"check", corpus_path("evenlen.fcd")});
  CHECK(e.code == 0);
  CHECK(e.out.find("fixpoint") != std::string::npos);
}

TEST_CASE("check --json emits a schema-complete report") {
  CliRun r = cli({"--json", "check", corpus_path("palindrome.fcd")});
  CHECK(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  REQUIRE(j.contains("flags"));
  for (auto* key : {"valid", "linear", "olla", "guarded", "locally_deterministic",
                    "globally_deterministic", "dolla", "dolla_plus", "strictly_decreasing",
                    "drx_constraints_legal"})
    REQUIRE(j["flags"].contains(key));
  CHECK(j["flags"]["dolla_plus"] == true);
  CHECK(j["flags"]["strictly_decreasing"] == true);
  CHECK(j["tier"] == "sd-fast");
  CHECK(j["diagnostics"].is_array());
}

TEST_CASE("malformed input exits 2 with a span diagnostic") {
  TempDir tmp;
  std::ofstream(tmp.path / "bad.fcd") << "Ans() <- univ = \nR(";
  CliRun r = cli({"check", (tmp.path / "bad.fcd").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("parse error at") != std::string::npos);
}

TEST_CASE("eval: verdicts and tiers") {
  CHECK(cli({"eval", corpus_path("anbn.fcd"), "aabb"}).out == "Accept\n");
  CHECK(cli({"eval", corpus_path("palindrome.fcd"), "ab"}).out == "Reject\n");
  CliRun t = cli({"eval", corpus_path("squares.fcd"), "abab", "--trace"});
  CHECK(t.code == 0);
  CHECK(t.out.find("Accept") != std::string::npos);
}

TEST_CASE("eval: tier preconditions exit 3") {
  CliRun r = cli({"eval", corpus_path("anbn.fcd"), "ab", "--tier", "sd"});
  CHECK(r.code == 3);
  CHECK(r.err.find("precondition") != std::string::npos);
}

TEST_CASE("eval: --verify cross-checks without changing the verdict") {
  for (auto* w : {"abba", "ab", ""}) {
    CliRun plain = cli({"eval", corpus_path("palindrome.fcd"), w});
    CliRun verified = cli({"eval", corpus_path("palindrome.fcd"), w, "--verify"});
    CHECK(plain.code == 0);
    CHECK(verified.code == 0);
    CHECK(plain.out == verified.out);
  }
}

TEST_CASE("eval: batch words from a file, json report") {
  TempDir tmp;
  std::ofstream(tmp.path / "words.txt") << "aabb\naab\n\n";
  CliRun r = cli({"--json", "eval", corpus_path("anbn.fcd"), "@" + (tmp.path / "words.txt").string()});
  CHECK(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  REQUIRE(j["verdicts"].size() == 3);
  CHECK(j["verdicts"][0]["verdict"] == "Accept");
  CHECK(j["verdicts"][1]["verdict"] == "Reject");
  CHECK(j["verdicts"][2]["verdict"] == "Accept");
  for (auto& v : j["verdicts"]) REQUIRE(v.contains("timing"));
}

TEST_CASE("eval: non-Boolean programs emit the Ans relation") {
  CliRun r = cli({"--json", "eval", corpus_path("evenlen.fcd"), "ab"});
  CHECK(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["verdicts"][0]["verdict"] == "relation");
  CHECK(j["verdicts"][0]["ans"].size() == 1);  // just "ab"
}

TEST_CASE("compile: deterministic regex targets and failure modes") {
  TempDir tmp;
  std::string out = (tmp.path / "c.fcd").string();
  CliRun r = cli({"--json", "compile", "--drx", "<x:(a|b)+> d &x", "--target", "dollaplus",
                  "-o", out});
  CHECK(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["stats"]["n"] == 4);
  CHECK(j["stats"]["rules"] <= j["stats"]["boundRules"]);
  CHECK(j["fragment"]["flags"]["strictly_decreasing"] == true);
  CHECK(fs::exists(out));

  CliRun bad = cli({"compile", "--drx", "<x:(a|b)*> &x", "--target", "dollaplus"});
  CHECK(bad.code == 3);
  CHECK(bad.err.find("not deterministic") != std::string::npos);
}

TEST_CASE("gen-pspace emits the program and word") {
  TempDir tmp;
  std::string data = test::env_dir("FCDL_DATA_DIR", "tests/data");
  CliRun r = cli({"--json", "gen-pspace", "--turing", data + "/turing_accept.json", "-k", "2"});
  CHECK(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["word"] == "aa");
  CHECK(j["program"].get<std::string>().find("C0") != std::string::npos);
}

TEST_CASE("corpus: clean run exits 0, empty dir warns") {
  CliRun r = cli({"corpus", "--dir", test::corpus_dir(), "--max-len", "4"});
  CHECK(r.code == 0);
  CHECK(r.out.find("all evaluators agree") != std::string::npos);

  TempDir tmp;
  CliRun empty = cli({"corpus", "--dir", tmp.path.string()});
  CHECK(empty.code == 0);
  CHECK(empty.err.find("warning") != std::string::npos);
}

TEST_CASE("corpus: a broken program is reported with a minimal counterexample") {
  TempDir tmp;
  // squares mislabeled as palindromes: 'a' is the shortest disagreement
  std::ofstream(tmp.path / "broken.fcd")
      << "# lang: palindrome\n" << test::read_file(corpus_path("squares.fcd")).substr(15);
  CliRun r = cli({"corpus", "--dir", tmp.path.string(), "--max-len", "4"});
  CHECK(r.code == 4);
  CHECK(r.out.find("DISAGREEMENT") != std::string::npos);
  CHECK(r.out.find("'a'") != std::string::npos);
}

TEST_CASE("unknown flags and missing files are clean failures") {
  CHECK(cli({"nonsense"}).code == 2);
  CHECK(cli({"check", "/no/such/file.fcd"}).code == 2);
  CHECK(cli({"eval", corpus_path("anbn.fcd"), "ab", "--tier", "bogus"}).code == 3);
}

TEST_CASE("FCDL_BUDGET caps evaluation with exit 5") {
  setenv("FCDL_BUDGET", "2", 1);
  CliRun r = cli({"eval", corpus_path("squares.fcd"), "abab", "--tier", "fixpoint"});
  unsetenv("FCDL_BUDGET");
  CHECK(r.code == 5);
  CHECK(r.err.find("budget") != std::string::npos);
}

TEST_CASE("eval --bench reports median timing and rule applications") {
  CliRun r = cli({"--json", "eval", corpus_path("palindrome.fcd"), "abba", "--bench", "3"});
  CHECK(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["verdicts"][0]["timing"]["rule_applications"] == 3);
}
