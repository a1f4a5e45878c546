#include "flsched/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "flsched/rng.hpp"

namespace flsched {

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kRandom:
      return "random";
    case PolicyKind::kAouOnly:
      return "aou";
    case PolicyKind::kAouOrShapley:
      return "aou_or_ds";
    case PolicyKind::kAouAndShapley:
      return "aou_and_ds";
  }
  return "aou";
}

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "random") return PolicyKind::kRandom;
  if (name == "aou") return PolicyKind::kAouOnly;
  if (name == "aou_or_ds") return PolicyKind::kAouOrShapley;
  if (name == "aou_and_ds") return PolicyKind::kAouAndShapley;
  throw std::invalid_argument("policy: expected one of random, aou, aou_or_ds, aou_and_ds, got '" +
                              std::string(name) + "'");
}

ThresholdRule ThresholdRule::parse(std::string_view text) {
  if (text == "mean") return mean();
  if (text == "median") return median();
  constexpr std::string_view kPrefix = "fixed:";
  if (text.substr(0, kPrefix.size()) == kPrefix) {
    const std::string value(text.substr(kPrefix.size()));
    std::size_t used = 0;
    double tau = -1.0;
    try {
      tau = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (!value.empty() && used == value.size() && std::isfinite(tau) && tau >= 0.0) {
      return fixed(tau);
    }
  }
  throw std::invalid_argument("aou_threshold: expected mean, median or fixed:<tau >= 0>, got '" +
                              std::string(text) + "'");
}

std::string ThresholdRule::to_string() const {
  switch (kind) {
    case Kind::kMeanOfReliable:
      return "mean";
    case Kind::kMedianOfReliable:
      return "median";
    case Kind::kFixed: {
      char buf[64];
      std::snprintf(buf, sizeof buf, "fixed:%.17g", tau);
      return buf;
    }
  }
  return "mean";
}

std::vector<std::size_t> reliable_set(const ChannelRealization& channel) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < channel.clients(); ++k) {
    for (std::size_t n = 0; n < channel.subchannels(); ++n) {
      if (feasible(channel, k, n)) {
        out.push_back(k);
        break;
      }
    }
  }
  return out;
}

double aou_threshold(const ThresholdRule& rule, std::span<const std::size_t> reliable,
                     std::span<const double> aou) {
  if (rule.kind == ThresholdRule::Kind::kFixed) return rule.tau;
  if (reliable.empty()) return 0.0;
  std::vector<double> values;
  values.reserve(reliable.size());
  for (std::size_t k : reliable) values.push_back(aou[k]);
  if (rule.kind == ThresholdRule::Kind::kMeanOfReliable) {
    double sum = 0.0;
    for (double a : values) sum += a;
    return sum / static_cast<double>(values.size());
  }
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

namespace {

void check_inputs(std::span<const std::size_t> reliable, std::size_t n_channels,
                  std::span<const double> aou, std::span<const double> scores) {
  if (n_channels == 0) throw std::invalid_argument("select: N must be >= 1");
  if (aou.size() != scores.size()) {
    throw std::invalid_argument("select: AoU and score vectors must both have length K");
  }
  for (std::size_t k : reliable) {
    if (k >= aou.size()) {
      throw std::invalid_argument("select: reliable client id " + std::to_string(k) +
                                  " out of range for K=" + std::to_string(aou.size()));
    }
  }
}

// (AoU desc, score desc, id asc).
std::vector<std::size_t> priority_order(std::span<const std::size_t> reliable,
                                        std::span<const double> aou,
                                        std::span<const double> scores) {
  std::vector<std::size_t> order(reliable.begin(), reliable.end());
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (aou[a] != aou[b]) return aou[a] > aou[b];
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return order;
}

// AouOrShapley and AouAndShapley: front group membership is decided in one scan of the
// priority order; the score clause compares against the running maximum
// score of clients already in the front group (initially -inf).
std::vector<std::size_t> two_group_order(bool require_both, double threshold,
                                         std::span<const std::size_t> ordered,
                                         std::span<const double> aou,
                                         std::span<const double> scores) {
  std::vector<std::size_t> front;
  std::vector<std::size_t> back;
  double running_max = -std::numeric_limits<double>::infinity();
  for (std::size_t k : ordered) {
    const bool stale = aou[k] > threshold;
    const bool valuable = scores[k] > running_max;
    const bool promote = require_both ? (stale && valuable) : (stale || valuable);
    if (promote) {
      front.push_back(k);
      running_max = std::max(running_max, scores[k]);
    } else {
      back.push_back(k);
    }
  }
  front.insert(front.end(), back.begin(), back.end());
  return front;
}

}  // namespace

SelectionVector select(const Policy& policy, std::span<const std::size_t> reliable,
                       std::size_t n_channels, std::span<const double> aou,
                       std::span<const double> scores, std::uint64_t seed, std::size_t round) {
  check_inputs(reliable, n_channels, aou, scores);
  SelectionVector out;
  out.round = round;
  out.indicator.assign(aou.size(), 0);

  if (reliable.size() <= n_channels) {
    out.selected = priority_order(reliable, aou, scores);
  } else {
    switch (policy.kind) {
      case PolicyKind::kRandom: {
        std::vector<std::size_t> pool(reliable.begin(), reliable.end());
        Rng rng(seed);
        for (std::size_t i = 0; i < n_channels; ++i) {
          const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
          std::swap(pool[i], pool[j]);
        }
        pool.resize(n_channels);
        out.selected = std::move(pool);
        break;
      }
      case PolicyKind::kAouOnly:
        out.selected = priority_order(reliable, aou, scores);
        break;
      case PolicyKind::kAouOrShapley:
      case PolicyKind::kAouAndShapley: {
        const double threshold = aou_threshold(policy.threshold, reliable, aou);
        out.selected = two_group_order(policy.kind == PolicyKind::kAouAndShapley, threshold,
                                       priority_order(reliable, aou, scores), aou, scores);
        break;
      }
    }
    out.selected.resize(n_channels);
  }
  for (std::size_t k : out.selected) out.indicator[k] = 1;
  return out;
}

bool verify_selection(const SelectionVector& selection, std::span<const std::size_t> reliable,
                      std::size_t n_channels) {
  if (selection.selected.size() > n_channels) return false;
  const std::size_t clients = selection.indicator.size();
  std::vector<char> is_reliable(clients, 0);
  for (std::size_t k : reliable) {
    if (k >= clients) return false;
    is_reliable[k] = 1;
  }
  std::vector<char> seen(clients, 0);
  for (std::size_t k : selection.selected) {
    if (k >= clients || seen[k] || !is_reliable[k]) return false;
    seen[k] = 1;
  }
  for (std::size_t k = 0; k < clients; ++k) {
    if ((selection.indicator[k] != 0) != (seen[k] != 0)) return false;
  }
  return true;
}

}  // namespace flsched
