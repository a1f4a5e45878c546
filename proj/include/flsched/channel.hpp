#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flsched {

struct ChannelConfig {
  double p = 0.8;  // per-round reliability probability
  std::size_t n_subchannels = 30;
  double tx_power = 1.0;
  double rayleigh_scale = 0.70710678118654752;  // E[G] = 2 sigma^2 = 1
  // Minimum log(1 + G P) for a (client, subchannel) pair to be usable.
  double snr_threshold = 0.0;

  // Human-readable violations; empty when valid.
  std::vector<std::string> violations() const;
  // Throws std::invalid_argument listing the first violation.
  void validate() const;
};

// One round's quasi-static channel: Bernoulli reliability flags and K x N
// exponential power gains |h|^2 with h Rayleigh(sigma). Immutable.
class ChannelRealization {
 public:
  ChannelRealization(std::vector<char> reliable, std::vector<double> gains,
                     std::size_t subchannels, double tx_power, double power_budget,
                     double snr_threshold, std::size_t round);

  std::size_t clients() const { return reliable_.size(); }
  std::size_t subchannels() const { return subchannels_; }
  std::size_t round() const { return round_; }
  double tx_power() const { return tx_power_; }
  double power_budget() const { return power_budget_; }
  double snr_threshold() const { return snr_threshold_; }

  bool reliable(std::size_t k) const;
  double gain(std::size_t k, std::size_t n) const;
  std::span<const double> gains() const { return gains_; }

 private:
  std::vector<char> reliable_;
  std::vector<double> gains_;  // row-major K x N
  std::size_t subchannels_;
  double tx_power_;
  double power_budget_;
  double snr_threshold_;
  std::size_t round_;
};

// Every entry is a pure function of (seed, round, k[, n]).
ChannelRealization draw_round(const ChannelConfig& cfg, std::size_t clients, std::size_t round,
                              std::uint64_t seed);

// reliable[k] && log(1 + G_{k,n} P) >= snr_threshold && P <= budget.
bool feasible(const ChannelRealization& channel, std::size_t k, std::size_t n);

// Assigns each client, in the given rank order, the free feasible subchannel
// with the highest gain (lowest index on ties). nullopt when none is left.
std::vector<std::optional<std::size_t>> assign_subchannels(const ChannelRealization& channel,
                                                           std::span<const std::size_t> ranked);

}  // namespace flsched
