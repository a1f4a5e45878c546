#include "flsched/freshness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace flsched {

Growth Growth::parse(std::string_view text) {
  if (text == "staleness") return staleness();
  if (text == "round") return round();
  if (text == "constant") return constant_of(1.0);
  constexpr std::string_view kPrefix = "constant:";
  if (text.substr(0, kPrefix.size()) == kPrefix) {
    const std::string value(text.substr(kPrefix.size()));
    std::size_t used = 0;
    double c = 0.0;
    try {
      c = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == value.size() && !value.empty() && std::isfinite(c) && c >= 0.0) {
      return constant_of(c);
    }
  }
  throw std::invalid_argument("growth: expected staleness, round, constant or constant:<c >= 0>, got '" +
                              std::string(text) + "'");
}

std::string Growth::to_string() const {
  switch (kind) {
    case Kind::kStaleness:
      return "staleness";
    case Kind::kRound:
      return "round";
    case Kind::kConstant: {
      char buf[64];
      auto [end, ec] = std::to_chars(buf, buf + sizeof buf, constant);
      (void)ec;
      return "constant:" + std::string(buf, end);
    }
  }
  return "staleness";
}

AouState::AouState(std::size_t clients, Growth growth)
    : ages_(clients, 1.0), last_selected_(clients, kNeverSelected), growth_(growth) {
  if (growth_.kind == Growth::Kind::kConstant &&
      !(std::isfinite(growth_.constant) && growth_.constant >= 0.0)) {
    throw std::invalid_argument("growth constant must be finite and >= 0");
  }
}

double AouState::growth_value(std::size_t k, std::size_t round) const {
  switch (growth_.kind) {
    case Growth::Kind::kConstant:
      return growth_.constant;
    case Growth::Kind::kRound:
      return static_cast<double>(round) + 1.0;
    case Growth::Kind::kStaleness: {
      const auto now = static_cast<std::int64_t>(round);
      if (now <= last_selected_[k]) {
        throw std::invalid_argument("aou_step: round " + std::to_string(round) +
                                    " does not follow last selection of client " +
                                    std::to_string(k));
      }
      return static_cast<double>(now - last_selected_[k]);
    }
  }
  return 1.0;
}

void aou_step_into(const AouState& state, std::span<const std::size_t> selected,
                   std::size_t round, AouState& out) {
  const std::size_t clients = state.size();
  for (std::size_t k : selected) {
    if (k >= clients) {
      throw std::invalid_argument("aou_step: client id " + std::to_string(k) +
                                  " out of range for K=" + std::to_string(clients));
    }
  }
  // Short selections are searched directly; long ones get a lookup table.
  std::vector<char> table;
  if (selected.size() > 16) {
    table.assign(clients, 0);
    for (std::size_t k : selected) table[k] = 1;
  }
  auto is_selected = [&](std::size_t k) {
    return table.empty() ? std::find(selected.begin(), selected.end(), k) != selected.end()
                         : table[k] != 0;
  };
  // Validate growth up front so a throw leaves `out` untouched.
  if (state.growth_.kind == Growth::Kind::kStaleness) {
    for (std::size_t k = 0; k < clients; ++k) {
      if (!is_selected(k)) state.growth_value(k, round);
    }
  }
  if (&out != &state) {
    out.ages_.resize(clients);
    out.last_selected_.assign(state.last_selected_.begin(), state.last_selected_.end());
    out.growth_ = state.growth_;
  }
  // Each client's update reads only its own entries, so aliasing is safe.
  for (std::size_t k = 0; k < clients; ++k) {
    if (is_selected(k)) {
      out.ages_[k] = 0.0;
      out.last_selected_[k] = static_cast<std::int64_t>(round);
    } else {
      const double x = state.growth_value(k, round);
      out.ages_[k] = state.ages_[k] + x * x;
    }
  }
}

AouState aou_step(const AouState& state, std::span<const std::size_t> selected,
                  std::size_t round) {
  AouState next(0, state.growth());
  aou_step_into(state, selected, round, next);
  return next;
}

std::vector<double> aou_snapshot(const AouState& state) {
  return {state.ages().begin(), state.ages().end()};
}

}  // namespace flsched
