#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fcdl {

// Exit codes: 0 ok, 2 parse/validation error, 3 precondition error,
// 4 cross-check disagreement, 5 resource budget exceeded.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fcdl
