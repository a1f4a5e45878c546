#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flsched/channel.hpp"

namespace flsched {

enum class PolicyKind { kRandom, kAouOnly, kAouOrShapley, kAouAndShapley };

// Config names: random, aou, aou_or_ds, aou_and_ds.
std::string to_string(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view name);

// AoU threshold used by the combined policies.
struct ThresholdRule {
  enum class Kind { kFixed, kMeanOfReliable, kMedianOfReliable };

  Kind kind = Kind::kMeanOfReliable;
  double tau = 0.0;

  static ThresholdRule fixed(double tau) { return {Kind::kFixed, tau}; }
  static ThresholdRule mean() { return {Kind::kMeanOfReliable, 0.0}; }
  static ThresholdRule median() { return {Kind::kMedianOfReliable, 0.0}; }

  // "mean", "median", "fixed:<tau>".
  static ThresholdRule parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const ThresholdRule&, const ThresholdRule&) = default;
};

struct Policy {
  PolicyKind kind = PolicyKind::kAouOrShapley;
  ThresholdRule threshold = ThresholdRule::mean();

  friend bool operator==(const Policy&, const Policy&) = default;
};

struct SelectionVector {
  std::vector<std::size_t> selected;  // S_t in selection rank order
  std::vector<char> indicator;        // S_k[t], length K
  std::size_t round = 0;
};

// Clients feasible on at least one subchannel, ascending.
std::vector<std::size_t> reliable_set(const ChannelRealization& channel);

double aou_threshold(const ThresholdRule& rule, std::span<const std::size_t> reliable,
                     std::span<const double> aou);

// Rule A: fewer reliable clients than subchannels selects them all. Rule B
// orders reliable clients per policy and takes the first N. Ties are broken
// by (AoU desc, score desc, id asc). `seed` only feeds the Random policy.
SelectionVector select(const Policy& policy, std::span<const std::size_t> reliable,
                       std::size_t n_channels, std::span<const double> aou,
                       std::span<const double> scores, std::uint64_t seed,
                       std::size_t round = 0);

bool verify_selection(const SelectionVector& selection, std::span<const std::size_t> reliable,
                      std::size_t n_channels);

}  // namespace flsched
