#pragma once

#include <string>

#include <json.hpp>

#include "stochchain/chain_core.hpp"

namespace stochchain {

// Reals in every emitted report carry 12 significant digits.
std::string format_real(double v);
double round_sig12(double v);

/// {variant, total, tail_bound, per_level: [[k, contribution], ...], label}
/// in that order. A tail bound without a certificate (+inf) is written as null.
nlohmann::ordered_json to_json(const BoundReport& report);

}  // namespace stochchain
