#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flsched {

// Per-round AoU increment is x^2, with x chosen by one of these rules.
struct Growth {
  enum class Kind { kConstant, kStaleness, kRound };

  Kind kind = Kind::kStaleness;
  double constant = 1.0;  // only used by kConstant

  static Growth constant_of(double c) { return {Kind::kConstant, c}; }
  static Growth staleness() { return {Kind::kStaleness, 1.0}; }
  static Growth round() { return {Kind::kRound, 1.0}; }

  // "constant:<c>", "constant" (c = 1), "staleness", "round".
  static Growth parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const Growth&, const Growth&) = default;
};

inline constexpr std::int64_t kNeverSelected = -1;

// Age of Update for K clients. Every age starts at 1.
class AouState {
 public:
  AouState(std::size_t clients, Growth growth);

  std::size_t size() const { return ages_.size(); }
  std::span<const double> ages() const { return ages_; }
  // Round of the most recent selection per client, or kNeverSelected.
  std::span<const std::int64_t> last_selected() const { return last_selected_; }
  const Growth& growth() const { return growth_; }

  // x for client k at (0-based) round `round`.
  double growth_value(std::size_t k, std::size_t round) const;

 private:
  friend void aou_step_into(const AouState&, std::span<const std::size_t>, std::size_t,
                            AouState&);

  std::vector<double> ages_;
  std::vector<std::int64_t> last_selected_;
  Growth growth_;
};

// T_k <- (T_k + x^2)(1 - S_k). Rounds are 0-based and must increase across
// calls. Throws std::invalid_argument on an out-of-range client id.
AouState aou_step(const AouState& state, std::span<const std::size_t> selected,
                  std::size_t round);

// Same update written into `out`, reusing its storage. `out` may alias `state`.
void aou_step_into(const AouState& state, std::span<const std::size_t> selected,
                   std::size_t round, AouState& out);

std::vector<double> aou_snapshot(const AouState& state);

}  // namespace flsched
