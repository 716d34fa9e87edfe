#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tilegraph::cli {

/// Exit codes: 0 success, 1 usage error, 2 runtime error.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kRuntime = 2;

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int main(int argc, char** argv);

}  // namespace tilegraph::cli
