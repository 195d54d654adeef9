#pragma once

// levyheat command line: model validation, Phi tables, free densities and
// envelopes, Monte Carlo runs and the half-space verification suites.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace levyheat::cli {

inline constexpr const char* kManifestFormat = "levyheat-manifest/1";
inline constexpr const char* kCsvSchema = "levyheat-csv/1";

enum ExitCode : int { kOk = 0, kViolation = 1, kConfig = 2, kNumerical = 3 };

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Column set of every CSV the tool writes, keyed "phi", "density",
// "simulate.survival", "verify.sandwich", ...
const std::vector<std::string>& csv_header(const std::string& kind);
std::vector<std::string> csv_kinds();

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace levyheat::cli
