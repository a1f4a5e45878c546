#include "flsched/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "flsched/rng.hpp"

namespace flsched {

std::vector<std::string> ChannelConfig::violations() const {
  std::vector<std::string> out;
  if (!(p >= 0.0 && p <= 1.0)) out.push_back("channel.p must lie in [0, 1]");
  if (n_subchannels < 1) out.push_back("channel.n_subchannels must be >= 1");
  if (!(tx_power > 0.0 && std::isfinite(tx_power))) out.push_back("channel.tx_power must be > 0");
  if (!(rayleigh_scale > 0.0 && std::isfinite(rayleigh_scale))) {
    out.push_back("channel.rayleigh_scale must be > 0");
  }
  if (!std::isfinite(snr_threshold)) out.push_back("channel.snr_threshold must be finite");
  return out;
}

void ChannelConfig::validate() const {
  const auto problems = violations();
  if (!problems.empty()) throw std::invalid_argument(problems.front());
}

ChannelRealization::ChannelRealization(std::vector<char> reliable, std::vector<double> gains,
                                       std::size_t subchannels, double tx_power,
                                       double power_budget, double snr_threshold,
                                       std::size_t round)
    : reliable_(std::move(reliable)),
      gains_(std::move(gains)),
      subchannels_(subchannels),
      tx_power_(tx_power),
      power_budget_(power_budget),
      snr_threshold_(snr_threshold),
      round_(round) {
  if (gains_.size() != reliable_.size() * subchannels_) {
    throw std::invalid_argument("channel gains must be a K x N matrix");
  }
  for (double g : gains_) {
    if (!(g >= 0.0)) throw std::invalid_argument("channel gains must be >= 0");
  }
}

bool ChannelRealization::reliable(std::size_t k) const {
  if (k >= clients()) throw std::invalid_argument("channel: client id out of range");
  return reliable_[k] != 0;
}

double ChannelRealization::gain(std::size_t k, std::size_t n) const {
  if (k >= clients() || n >= subchannels_) {
    throw std::invalid_argument("channel: (client, subchannel) index out of range");
  }
  return gains_[k * subchannels_ + n];
}

ChannelRealization draw_round(const ChannelConfig& cfg, std::size_t clients, std::size_t round,
                              std::uint64_t seed) {
  cfg.validate();
  if (clients == 0) throw std::invalid_argument("draw_round: K must be >= 1");
  const std::size_t n_sub = cfg.n_subchannels;
  const double mean_gain = 2.0 * cfg.rayleigh_scale * cfg.rayleigh_scale;
  std::vector<char> reliable(clients);
  std::vector<double> gains(clients * n_sub);
  for (std::size_t k = 0; k < clients; ++k) {
    const double u = unit_interval(derive_seed(seed, Stream::kChannel, {round, k, 0}));
    reliable[k] = u < cfg.p;
    for (std::size_t n = 0; n < n_sub; ++n) {
      const double v = unit_interval(derive_seed(seed, Stream::kChannel, {round, k, n + 1}));
      gains[k * n_sub + n] = -mean_gain * std::log1p(-v);
    }
  }
  return ChannelRealization(std::move(reliable), std::move(gains), n_sub, cfg.tx_power,
                            cfg.tx_power, cfg.snr_threshold, round);
}

bool feasible(const ChannelRealization& channel, std::size_t k, std::size_t n) {
  const double g = channel.gain(k, n);
  if (!channel.reliable(k)) return false;
  const double power = channel.tx_power();
  return std::log1p(g * power) >= channel.snr_threshold() && power <= channel.power_budget();
}

std::vector<std::optional<std::size_t>> assign_subchannels(const ChannelRealization& channel,
                                                           std::span<const std::size_t> ranked) {
  std::vector<char> taken(channel.subchannels(), 0);
  std::vector<std::optional<std::size_t>> out;
  out.reserve(ranked.size());
  for (std::size_t k : ranked) {
    std::optional<std::size_t> best;
    for (std::size_t n = 0; n < channel.subchannels(); ++n) {
      if (taken[n] || !feasible(channel, k, n)) continue;
      if (!best || channel.gain(k, n) > channel.gain(k, *best)) best = n;
    }
    if (best) taken[*best] = 1;
    out.push_back(best);
  }
  return out;
}

}  // namespace flsched
