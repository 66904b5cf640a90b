#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcdl {

// Byte range in a source text, with the line/column of its start.
struct SourceSpan {
  uint32_t start = 0;
  uint32_t end = 0;
  uint32_t line = 1;
  uint32_t col = 1;
};

struct Diagnostic {
  SourceSpan span;
  int rule = -1;  // rule index when the message is about a specific rule
  std::string msg;
};

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Lexical or grammatical failure; always carries a span inside the input.
struct ParseError : Error {
  SourceSpan span;
  ParseError(const std::string& m, SourceSpan s) : Error(m), span(s) {}
};

struct ValidationError : Error {
  std::vector<Diagnostic> issues;
  explicit ValidationError(const std::string& m, std::vector<Diagnostic> d = {})
      : Error(m), issues(std::move(d)) {}
};

// A precondition of the called operation does not hold.
struct UsageError : Error {
  using Error::Error;
};

// Resource guard tripped; the computation was abandoned, never answered wrong.
struct BudgetError : Error {
  using Error::Error;
};

// Internal consistency failure (e.g. the analysis certified a property the
// evaluator then saw violated).
struct InternalError : Error {
  using Error::Error;
};

// Input word uses a symbol outside the program alphabet.
struct InputError : Error {
  using Error::Error;
};

enum class Verdict { Accept, Reject };

inline const char* to_string(Verdict v) { return v == Verdict::Accept ? "Accept" : "Reject"; }

}  // namespace fcdl
