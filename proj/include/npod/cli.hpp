#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace npod::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 input error, 2 convergence failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace npod::cli
