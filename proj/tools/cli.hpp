#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mbs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitDegenerate = 4;

// Runs one invocation; `args` excludes the program name. Failures print a
// single "error: <category>: <detail>" line on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mbs::cli
