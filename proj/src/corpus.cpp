#include "fcdl/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "fcdl/analysis.hpp"
#include "fcdl/parser.hpp"
#include "fcdl/topdown.hpp"

namespace fcdl {

std::vector<std::string> words_up_to(const std::string& alphabet, size_t max_len) {
  std::vector<std::string> out{""};
  size_t begin = 0;
  for (size_t len = 1; len <= max_len; len++) {
    size_t end = out.size();
    for (size_t i = begin; i < end; i++)
      for (char c : alphabet) out.push_back(out[i] + c);
    begin = end;
  }
  return out;
}

Program shuffle_rules(const Program& p, uint64_t seed) {
  Program q = p;
  std::mt19937_64 rng(seed);
  std::shuffle(q.rules.begin(), q.rules.end(), rng);
  return q;
}

namespace {

bool is_anbn(std::string_view w) {
  size_t n = w.size() / 2;
  if (w.size() % 2) return false;
  for (size_t i = 0; i < n; i++)
    if (w[i] != 'a') return false;
  for (size_t i = n; i < w.size(); i++)
    if (w[i] != 'b') return false;
  return true;
}

bool is_square(std::string_view w) {
  if (w.size() % 2) return false;
  size_t h = w.size() / 2;
  return w.substr(0, h) == w.substr(h);
}

bool is_palindrome(std::string_view w) {
  for (size_t i = 0, j = w.size(); i + 1 <= j; i++, j--)
    if (w[i] != w[j - 1]) return false;
  return true;
}

bool contains_nonempty_square(std::string_view w) {
  for (size_t i = 0; i < w.size(); i++)
    for (size_t l = 1; i + 2 * l <= w.size(); l++)
      if (w.substr(i, l) == w.substr(i + l, l)) return true;
  return false;
}

// {a^z b t a t b c^z : t over {c,d} nonempty}
bool is_layered(std::string_view w) {
  size_t z = 0;
  while (z < w.size() && w[z] == 'a') z++;
  for (size_t zz = 0; zz <= z; zz++) {
    if (w.size() < 2 * zz) continue;
    std::string_view core = w.substr(zz, w.size() - 2 * zz);
    bool tail_ok = true;
    for (size_t i = w.size() - zz; i < w.size(); i++)
      if (w[i] != 'c') tail_ok = false;
    if (!tail_ok || core.size() < 4) continue;
    if (core.front() != 'b' || core.back() != 'b') continue;
    std::string_view inner = core.substr(1, core.size() - 2);
    // inner must be t a t with t over {c,d}+
    if (inner.size() % 2 == 0) continue;
    size_t tl = inner.size() / 2;
    if (tl == 0) continue;
    if (inner[tl] != 'a') continue;
    std::string_view t1 = inner.substr(0, tl), t2 = inner.substr(tl + 1);
    if (t1 != t2) continue;
    bool cd = true;
    for (char c : t1)
      if (c != 'c' && c != 'd') cd = false;
    if (cd) return true;
  }
  return false;
}

}  // namespace

std::optional<std::function<bool(std::string_view)>> builtin_language(const std::string& name) {
  if (name == "anbn") return is_anbn;
  if (name == "squares") return is_square;
  if (name == "palindrome") return is_palindrome;
  if (name == "evenword")
    return [](std::string_view w) { return w.size() % 2 == 0; };
  if (name == "evena")
    return [](std::string_view w) {
      return std::count(w.begin(), w.end(), 'a') % 2 == 0;
    };
  if (name == "astar")
    return [](std::string_view w) {
      return std::all_of(w.begin(), w.end(), [](char c) { return c == 'a'; });
    };
  if (name == "abstar")
    return [](std::string_view w) {
      if (w.empty() || w[0] != 'a') return false;
      return std::all_of(w.begin() + 1, w.end(), [](char c) { return c == 'b'; });
    };
  if (name == "containssq") return contains_nonempty_square;
  if (name == "layered") return is_layered;
  return std::nullopt;
}

std::optional<std::set<std::string>> expected_unary_ans(const std::string& lang,
                                                        std::string_view w) {
  if (lang != "evenfactors") return std::nullopt;
  // the paired-letter program derives the even-length factors except epsilon
  std::set<std::string> out;
  for (size_t i = 0; i <= w.size(); i++)
    for (size_t l = 2; i + l <= w.size(); l += 2) out.insert(std::string(w.substr(i, l)));
  return out;
}

CorpusResult run_corpus(const std::vector<CorpusCase>& cases, const CorpusOptions& opts) {
  CorpusResult res;
  for (const auto& c : cases) {
    res.programs++;
    FragmentReport rep = classify(c.program);
    bool boolean = c.program.is_boolean();
    auto oracle = c.lang.empty() ? std::nullopt : builtin_language(c.lang);
    bool found_disagreement = false;

    for (const std::string& w : words_up_to(opts.alphabet, opts.max_len)) {
      if (found_disagreement) break;
      res.words_checked++;
      auto complain = [&](const std::string& detail) {
        res.disagreements.push_back({c.name, w, detail});
        found_disagreement = true;
      };
      try {
        RelationStore naive = evaluate(c.program, w, opts.budget);
        RelationStore semi = evaluate_semi_naive(c.program, w, opts.budget);
        res.evaluator_runs += 2;
        if (naive.rels != semi.rels) {
          complain("naive and semi-naive stores differ");
          continue;
        }
        for (int seed = 1; seed <= opts.shuffle_seeds; seed++) {
          Program shuffled = shuffle_rules(c.program, 0x5eed + seed);
          RelationStore s = evaluate(shuffled, w, opts.budget);
          res.evaluator_runs++;
          if (s.rels != naive.rels) {
            complain("rule order changed the fixpoint (seed " + std::to_string(seed) + ")");
            break;
          }
        }
        if (found_disagreement) continue;

        if (!boolean) {
          if (!c.lang.empty()) {
            if (auto expect = expected_unary_ans(c.lang, w)) {
              std::set<std::string> got;
              for (auto& t : naive.rels[c.program.ans]) got.insert(naive.table.at(t[0]));
              if (got != *expect) complain("Ans relation differs from the language oracle");
            }
          }
          continue;
        }

        Verdict fix = naive.rels[c.program.ans].count(Tuple{}) ? Verdict::Accept
                                                               : Verdict::Reject;
        if (rep.linear) {
          Verdict memo = eval_memoized(c.program, w, opts.budget);
          res.evaluator_runs++;
          if (memo != fix) {
            complain("memoized evaluator disagrees with the fixpoint");
            continue;
          }
        }
        if (rep.dolla || rep.dolla_plus) {
          TopdownOptions topts;
          topts.budget = opts.budget;
          TopdownResult det = eval_deterministic(c.program, w, topts);
          res.evaluator_runs++;
          if (det.verdict != fix) {
            complain("deterministic evaluator disagrees with the fixpoint");
            continue;
          }
        }
        if (rep.strictly_decreasing) {
          TopdownOptions topts;
          topts.budget = opts.budget;
          TopdownResult sd = eval_sd(c.program, w, topts);
          res.evaluator_runs++;
          if (sd.verdict != fix) {
            complain("strictly-decreasing evaluator disagrees with the fixpoint");
            continue;
          }
        }
        if (oracle && (*oracle)(w) != (fix == Verdict::Accept)) {
          complain("evaluators disagree with the language oracle");
          continue;
        }
      } catch (const InputError&) {
        // word not over this program's alphabet: not an input for it
      } catch (const Error& e) {
        complain(std::string("error: ") + e.what());
      }
    }
  }
  return res;
}

std::vector<CorpusCase> load_corpus_dir(const std::string& dir) {
  std::vector<CorpusCase> cases;
  std::vector<std::filesystem::path> paths;
  for (auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".fcd") paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  for (auto& path : paths) {
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CorpusCase c;
    c.name = path.filename().string();
    const std::string tag = "# lang:";
    if (text.rfind(tag, 0) == 0) {
      size_t eol = text.find('\n');
      std::string lang = text.substr(tag.size(), eol - tag.size());
      lang.erase(std::remove_if(lang.begin(), lang.end(), ::isspace), lang.end());
      c.lang = lang;
    }
    c.program = parse_program(text);
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace fcdl
