#ifndef FLOWGEOM_CLI_HPP
#define FLOWGEOM_CLI_HPP

namespace flowgeom {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitUsage = 64;

/// Entry point of the `flowgeom` tool. Never throws.
int run_cli(int argc, char** argv);

const char* version();

}  // namespace flowgeom

#endif  // FLOWGEOM_CLI_HPP
