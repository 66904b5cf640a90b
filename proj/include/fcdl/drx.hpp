#pragma once

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fcdl/base.hpp"

namespace fcdl {

// Regular expressions with memory bindings <m: e> and recalls &m.
struct DrxNode;
using DrxPtr = std::shared_ptr<const DrxNode>;

struct DrxNode {
  enum class Kind { Terminal, Concat, Union, Plus, Star, Bind, Recall };
  Kind kind = Kind::Terminal;
  char sym = 0;              // Terminal
  std::string memory;        // Bind / Recall
  std::vector<DrxPtr> children;

  static DrxPtr terminal(char c);
  static DrxPtr concat(std::vector<DrxPtr> cs);
  static DrxPtr alt(DrxPtr a, DrxPtr b);
  static DrxPtr plus(DrxPtr c);
  static DrxPtr star(DrxPtr c);
  static DrxPtr bind(std::string mem, DrxPtr c);
  static DrxPtr recall(std::string mem);
};

// Grammar: union `|` (lowest), juxtaposition, postfix `+`/`*`, `(...)`,
// bind `<name: e>`, recall `&name`, terminals bare or single-quoted chars.
// Rejects recalls of memories never bound anywhere and binds nested inside a
// bind (or recall placed inside the bind) of the same memory.
DrxPtr parse_drx(std::string_view text);

std::string print_drx(const DrxNode& e);

bool drx_equal(const DrxNode& a, const DrxNode& b);

// Terminals occurring in the expression, sorted and deduplicated.
std::string drx_terminals(const DrxNode& e);

// Memory names in order of first Bind occurrence.
std::vector<std::string> drx_memory_names(const DrxNode& e);

}  // namespace fcdl
