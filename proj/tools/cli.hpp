#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace naon::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kNumerical = 3;

// Runs `naon <subcommand> ...`; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace naon::cli
