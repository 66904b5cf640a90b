#include "fcdl/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fcdl/analysis.hpp"
#include "fcdl/compile.hpp"
#include "fcdl/corpus.hpp"
#include "fcdl/fixpoint.hpp"
#include "fcdl/parser.hpp"
#include "fcdl/topdown.hpp"
#include "json.hpp"

namespace fcdl {

namespace {

constexpr int kOk = 0;
constexpr int kParseError = 2;
constexpr int kPreconditionError = 3;
constexpr int kDisagreement = 4;
constexpr int kBudgetError = 5;

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> load_words(const std::string& arg) {
  if (arg.empty() || arg[0] != '@') return {arg};
  std::istringstream in(read_file(arg.substr(1)));
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    words.push_back(line);
  }
  return words;
}

struct EvalOutcome {
  std::string word;
  std::string verdict;  // Accept/Reject or "relation"
  json ans_relation;    // for non-Boolean programs
  double wall_ms = 0;
  uint64_t rule_applications = 0;
  std::string tier;
  json trace;
  std::string warning;
};

std::string resolve_tier(const FragmentReport& rep, const std::string& requested) {
  if (requested == "auto") return rep.tier;
  if (requested == "fixpoint") return "fixpoint";
  if (requested == "memo") return "memoized-topdown";
  if (requested == "det") return "deterministic-topdown";
  if (requested == "sd") return "sd-fast";
  throw UsageError("unknown tier: " + requested);
}

EvalOutcome eval_one(const Program& p, const std::string& w,
                     const std::string& tier, bool trace, bool verify,
                     const EvalBudget& budget) {
  EvalOutcome out;
  out.word = w;
  out.tier = tier;
  auto t0 = std::chrono::steady_clock::now();

  if (!p.is_boolean()) {
    RelationStore store = evaluate(p, w, budget);
    out.verdict = "relation";
    out.ans_relation = json::array();
    for (auto& t : store.rels[p.ans]) {
      json tup = json::array();
      for (FactorId f : t) tup.push_back(store.table.at(f));
      out.ans_relation.push_back(tup);
    }
    out.tier = "fixpoint";
  } else {
    Verdict v;
    if (tier == "sd-fast" || tier == "deterministic-topdown") {
      TopdownOptions topts;
      topts.record_trace = trace;
      topts.budget = budget;
      TopdownResult r =
          tier == "sd-fast" ? eval_sd(p, w, topts) : eval_deterministic(p, w, topts);
      v = r.verdict;
      out.rule_applications = r.trace.recursive_steps;
      out.warning = r.warning;
      if (trace) out.trace = json::parse(r.trace.to_json());
    } else if (tier == "memoized-topdown") {
      v = eval_memoized(p, w, budget);
    } else {
      v = model_check(p, w, budget);
    }
    if (verify && tier != "fixpoint") {
      Verdict fix = model_check(p, w, budget);
      if (fix != v)
        throw InternalError("verification mismatch: " + std::string(to_string(v)) + " vs " +
                            to_string(fix) + " on '" + w + "'");
    }
    out.verdict = to_string(v);
  }
  auto t1 = std::chrono::steady_clock::now();
  out.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return out;
}

int cmd_check(const std::string& path, bool as_json, std::ostream& out) {
  Program p = parse_program(read_file(path));
  FragmentReport rep = classify(p);
  if (as_json) {
    json j = json::parse(rep.to_json());
    j["command"] = "check";
    j["input"] = path;
    out << j.dump(2) << "\n";
  } else {
    out << "tier: " << rep.tier << "\n";
    out << "flags: valid=" << rep.valid << " linear=" << rep.linear << " olla=" << rep.olla
        << " guarded=" << rep.guarded << " locally_deterministic=" << rep.locally_deterministic
        << " globally_deterministic=" << rep.globally_deterministic << " dolla=" << rep.dolla
        << " dolla_plus=" << rep.dolla_plus
        << " strictly_decreasing=" << rep.strictly_decreasing
        << " drx_constraints_legal=" << rep.drx_constraints_legal << "\n";
    for (auto& d : rep.diagnostics)
      out << "note (rule " << d.rule << "): " << d.msg << "\n";
  }
  return kOk;
}

int cmd_eval(const std::string& path, const std::string& word_arg, const std::string& tier_arg,
             bool trace, bool verify, int bench, bool as_json, std::ostream& out) {
  Program p = parse_program(read_file(path));
  FragmentReport rep = classify(p);
  std::string tier = resolve_tier(rep, tier_arg);
  if (tier_arg != "auto") {
    if (tier == "sd-fast" && !rep.strictly_decreasing)
      throw UsageError("tier sd requested but the program is not strictly decreasing");
    if (tier == "deterministic-topdown" && !(rep.dolla || rep.dolla_plus))
      throw UsageError("tier det requested but the program is not certified deterministic");
    if (tier == "memoized-topdown" && !rep.linear)
      throw UsageError("tier memo requested but the program is not linear");
  }

  EvalBudget budget = EvalBudget::from_env();
  std::vector<std::string> words = load_words(word_arg);
  json report;
  report["command"] = "eval";
  report["input"] = path;
  report["tier"] = tier;
  report["fragment"] = json::parse(rep.to_json());
  report["verdicts"] = json::array();

  for (const std::string& w : words) {
    EvalOutcome o;
    if (bench > 1) {
      std::vector<double> times;
      for (int i = 0; i < bench; i++) {
        o = eval_one(p, w, tier, false, false, budget);
        times.push_back(o.wall_ms);
      }
      std::sort(times.begin(), times.end());
      o.wall_ms = times[times.size() / 2];  // median
    } else {
      o = eval_one(p, w, tier, trace, verify, budget);
    }
    json jo;
    jo["word"] = o.word;
    jo["verdict"] = o.verdict;
    if (!o.ans_relation.is_null()) jo["ans"] = o.ans_relation;
    jo["timing"] = {{"wall_ms", o.wall_ms}, {"rule_applications", o.rule_applications}};
    if (!o.trace.is_null()) jo["trace"] = o.trace;
    if (!o.warning.empty()) jo["warning"] = o.warning;
    report["verdicts"].push_back(jo);
    if (!as_json) {
      out << (o.verdict == "relation" ? "Ans: " + o.ans_relation.dump() : o.verdict);
      if (words.size() > 1 || bench > 1) out << "\t'" << w << "'";
      if (bench > 1)
        out << "\tmedian_ms=" << o.wall_ms << "\trule_applications=" << o.rule_applications;
      out << "\n";
      if (!o.warning.empty()) out << "warning: " << o.warning << "\n";
      if (!o.trace.is_null()) out << o.trace.dump(2) << "\n";
    }
  }
  if (as_json) out << report.dump(2) << "\n";
  return kOk;
}

int cmd_compile(const std::string& drx_arg, const std::string& automaton_path,
                const std::string& target, const std::string& out_path, bool as_json,
                std::ostream& out) {
  Program compiled;
  json stats_json;
  if (!drx_arg.empty()) {
    DrxPtr e = parse_drx(drx_arg);
    if (target == "dolla") {
      auto [prog, st] = compile_drx_dolla(*e);
      compiled = std::move(prog);
      stats_json = json::parse(st.to_json());
    } else if (target == "dollaplus") {
      auto [prog, st] = compile_drx_dollaplus(*e);
      compiled = std::move(prog);
      stats_json = json::parse(st.to_json());
    } else {
      throw UsageError("regex compilation targets: dolla, dollaplus");
    }
  } else if (!automaton_path.empty()) {
    MultiHeadAutomaton m = parse_automaton(read_file(automaton_path));
    if (target == "dolla")
      compiled = compile_2dfa(m);
    else if (target == "linear")
      compiled = compile_2nfa(m);
    else
      throw UsageError("automaton compilation targets: dolla, linear");
  } else {
    throw UsageError("compile requires --drx or --automaton");
  }

  std::string text = print_program(compiled);
  if (!out_path.empty()) {
    std::ofstream f(out_path, std::ios::binary);
    f << text;
  }
  if (as_json) {
    json j;
    j["command"] = "compile";
    j["target"] = target;
    j["program"] = text;
    if (!stats_json.is_null()) j["stats"] = stats_json;
    j["fragment"] = json::parse(classify(compiled).to_json());
    out << j.dump(2) << "\n";
  } else {
    if (out_path.empty()) out << text;
    if (!stats_json.is_null()) out << stats_json.dump(2) << "\n";
  }
  return kOk;
}

int cmd_gen_pspace(const std::string& turing_path, int k, const std::string& out_path,
                   bool as_json, std::ostream& out) {
  TuringSpec t = parse_turing(read_file(turing_path));
  PspaceInstance inst = generate_pspace_instance(t, k);
  std::string text = print_program(inst.program);
  if (!out_path.empty()) {
    std::ofstream f(out_path, std::ios::binary);
    f << text;
  }
  if (as_json) {
    json j;
    j["command"] = "gen-pspace";
    j["word"] = inst.word;
    j["program"] = text;
    out << j.dump(2) << "\n";
  } else {
    if (out_path.empty()) out << text;
    out << "word: " << inst.word << "\n";
  }
  return kOk;
}

int cmd_corpus(const std::string& dir, size_t max_len, const std::string& alphabet, bool as_json,
               std::ostream& out, std::ostream& err) {
  std::vector<CorpusCase> cases = load_corpus_dir(dir);
  if (cases.empty()) {
    err << "warning: no .fcd programs under " << dir << "\n";
    return kOk;
  }
  CorpusOptions opts;
  opts.max_len = max_len;
  opts.alphabet = alphabet;
  opts.budget = EvalBudget::from_env();
  opts.shuffle_seeds = 0;
  CorpusResult res = run_corpus(cases, opts);
  if (as_json) {
    json j;
    j["command"] = "corpus";
    j["programs"] = res.programs;
    j["words_checked"] = res.words_checked;
    j["evaluator_runs"] = res.evaluator_runs;
    j["disagreements"] = json::array();
    for (auto& d : res.disagreements)
      j["disagreements"].push_back(
          {{"program", d.program}, {"word", d.word}, {"detail", d.detail}});
    out << j.dump(2) << "\n";
  } else {
    out << res.programs << " programs, " << res.words_checked << " words, "
        << res.evaluator_runs << " evaluator runs\n";
    for (auto& d : res.disagreements)
      out << "DISAGREEMENT " << d.program << " on '" << d.word << "': " << d.detail << "\n";
    if (res.ok()) out << "all evaluators agree\n";
  }
  return res.ok() ? kOk : kDisagreement;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"fcdl: engine and static analysis for Datalog over word equations"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "machine-readable output");

  auto* check = app.add_subcommand("check", "classify a program");
  std::string check_path;
  check->add_option("program", check_path, "program file")->required();

  auto* eval = app.add_subcommand("eval", "evaluate a program on words");
  std::string eval_path, eval_word, eval_tier = "auto";
  bool eval_trace = false, eval_verify = false;
  int eval_bench = 1;
  eval->add_option("program", eval_path, "program file")->required();
  eval->add_option("word", eval_word, "input word, or @file with one word per line")->required();
  eval->add_option("--tier", eval_tier, "auto|fixpoint|memo|det|sd");
  eval->add_flag("--trace", eval_trace, "record the evaluation trace");
  eval->add_flag("--verify", eval_verify, "cross-check against the fixpoint evaluator");
  eval->add_option("--bench", eval_bench, "repeat and report the median wall time");

  auto* compile = app.add_subcommand("compile", "compile a regex or automaton");
  std::string c_drx, c_auto, c_target = "dollaplus", c_out;
  compile->add_option("--drx", c_drx, "deterministic regex");
  compile->add_option("--automaton", c_auto, "automaton JSON file");
  compile->add_option("--target", c_target, "dolla|dollaplus|linear");
  compile->add_option("-o,--output", c_out, "output program file");

  auto* gen = app.add_subcommand("gen-pspace", "generate a hardness instance");
  std::string g_turing, g_out;
  int g_k = 1;
  gen->add_option("--turing", g_turing, "Turing machine JSON file")->required();
  gen->add_option("-k", g_k, "space bound (unary)")->required();
  gen->add_option("-o,--output", g_out, "output program file");

  auto* corpus = app.add_subcommand("corpus", "cross-check evaluators over a program corpus");
  std::string corpus_dir, corpus_alphabet = "ab";
  size_t corpus_maxlen = 8;
  corpus->add_option("--dir", corpus_dir, "directory of .fcd programs")->required();
  corpus->add_option("--max-len", corpus_maxlen, "maximum word length");
  corpus->add_option("--alphabet", corpus_alphabet, "alphabet for the generated words");

  std::vector<std::string> argv_copy = args;
  try {
    std::vector<const char*> argv{"fcdl"};
    for (auto& a : argv_copy) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << "\n";
    return kParseError;
  }

  try {
    if (*check) return cmd_check(check_path, as_json, out);
    if (*eval)
      return cmd_eval(eval_path, eval_word, eval_tier, eval_trace, eval_verify, eval_bench,
                      as_json, out);
    if (*compile) return cmd_compile(c_drx, c_auto, c_target, c_out, as_json, out);
    if (*gen) return cmd_gen_pspace(g_turing, g_k, g_out, as_json, out);
    if (*corpus)
      return cmd_corpus(corpus_dir, corpus_maxlen, corpus_alphabet, as_json, out, err);
    err << "error: no subcommand\n";
    return kParseError;
  } catch (const ParseError& e) {
    err << "parse error at " << e.span.line << ":" << e.span.col << " (offset " << e.span.start
        << ".." << e.span.end << "): " << e.what() << "\n";
    return kParseError;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    for (auto& d : e.issues) err << "  rule " << d.rule << ": " << d.msg << "\n";
    return kParseError;
  } catch (const UsageError& e) {
    err << "precondition error: " << e.what() << "\n";
    return kPreconditionError;
  } catch (const BudgetError& e) {
    err << "budget exceeded: " << e.what() << "\n";
    return kBudgetError;
  } catch (const InternalError& e) {
    err << "internal cross-check failure: " << e.what() << "\n";
    return kDisagreement;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kParseError;
  }
}

}  // namespace fcdl
