#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <json.hpp>

namespace stochchain::cli {

inline constexpr std::uint64_t kDefaultSeed = 20210617;

enum ExitCode : int { kOk = 0, kNumericalFailure = 1, kArgumentError = 2 };

/// Parses argv and dispatches to gaussian / phase / table1 / vc / validate.
/// Results go to --out when given, otherwise to `out`; usage and errors go
/// to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Bound comparison table as CSV: epsilon,baseline,stochastic_375,true_value.
std::string table1_csv();

/// One validation suite ("mgf", "dv", "mi", "gen") on one example
/// ("gaussian", "phase"). The report carries a top-level "pass" flag.
nlohmann::ordered_json validate_suite(const std::string& suite, const std::string& example,
                                      std::uint64_t trials, std::uint64_t seed);

}  // namespace stochchain::cli
