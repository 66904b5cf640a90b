#pragma once

#include <string>
#include <string_view>

#include "fcdl/program.hpp"

namespace fcdl {

// Parses the program grammar:
//   program := header? rule+            header := "alphabet" STRING "."
//   rule    := REL "(" vars? ")" "<-" atom ("," atom)* "."
//   atom    := VAR "=" pattern | REL "(" vars? ")" | VAR "in" "/" drx "/"
//   pattern := (VAR | STRING)*
// VAR is a lowercase identifier ('univ' is the universe variable), REL an
// uppercase identifier, STRING single-quoted ('abc' is three terminals, ''
// is epsilon). '#' comments to end of line. Runs validate_program.
Program parse_program(std::string_view text);

// Canonical text; parse_program(print_program(p)) is structurally equal to p.
std::string print_program(const Program& p);

std::string print_rule(const Program& p, const Rule& r);
std::string print_atom(const Program& p, const Atom& a);
std::string print_pattern(const Program& p, const Pattern& pat);

}  // namespace fcdl
