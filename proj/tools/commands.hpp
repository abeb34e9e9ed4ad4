#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lfmmi::cli {

inline constexpr const char *kToolVersion = "0.1.0";

/// Runs one command line (without the program name). Primary output goes to
/// `out` unless --out is given; diagnostics and the one-line error go to
/// `err`. Returns the process exit code.
int run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err);

}  // namespace lfmmi::cli
