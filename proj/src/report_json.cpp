#include "stochchain/report_json.hpp"

#include <cmath>

#include <fmt/format.h>

namespace stochchain {

std::string format_real(double v) { return fmt::format("{:.12g}", v); }

double round_sig12(double v) {
  if (!std::isfinite(v)) return v;
  return std::stod(format_real(v));
}

namespace {

nlohmann::ordered_json real(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round_sig12(v);
}

}  // namespace

nlohmann::ordered_json to_json(const BoundReport& report) {
  nlohmann::ordered_json j;
  j["variant"] = std::string(to_string(report.variant));
  j["total"] = real(report.total);
  j["tail_bound"] = real(report.tail_bound);
  auto levels = nlohmann::ordered_json::array();
  for (const auto& [k, contribution] : report.per_level) {
    levels.push_back(nlohmann::ordered_json::array({k, real(contribution)}));
  }
  j["per_level"] = std::move(levels);
  j["label"] = report.label;
  return j;
}

}  // namespace stochchain
