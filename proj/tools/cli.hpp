#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stance::cli {

// Exit codes shared by every command.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kDataError = 2;
inline constexpr int kNumerical = 3;

// Runs one command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stance::cli
