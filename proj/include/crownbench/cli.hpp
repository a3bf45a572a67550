#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crownbench::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitInternal = 4;

/// Parses and runs one subcommand. `args` excludes the program name.
/// Human-readable text goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

/// Lower-case hex SHA-256 of a file's bytes; IoError if unreadable.
std::string sha256_file(const std::string& path);

}  // namespace crownbench::cli
