#pragma once

#include <string>
#include <vector>

namespace rgm {

// Exit codes: 0 success, 1 invalid input, 2 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);  // args[0] is the program name

}  // namespace rgm
