#include "flsched/valuation.hpp"

#include <stdexcept>
#include <string>

#include "flsched/rng.hpp"

namespace flsched {

ValueLedger::ValueLedger(std::vector<double> initial, double gamma)
    : initial_(std::move(initial)), gamma_(gamma) {
  if (initial_.empty()) throw std::invalid_argument("value ledger needs at least one client");
  for (double phi : initial_) {
    if (!(phi >= 0.0 && phi < 1.0)) {
      throw std::invalid_argument("initial ledger values must lie in [0, 1)");
    }
  }
  history_.resize(initial_.size());
  increments_.assign(initial_.size(), 0);
  increment_sums_.assign(initial_.size(), 0);
  scores_ = initial_;
}

std::span<const double> ValueLedger::history(std::size_t k) const {
  if (k >= size()) throw std::invalid_argument("ledger: client id out of range");
  return history_[k];
}

double ValueLedger::score(std::size_t k) const {
  if (k >= size()) {
    throw std::invalid_argument("ledger: client id " + std::to_string(k) +
                                " out of range for K=" + std::to_string(size()));
  }
  return scores_[k];
}

ValueLedger ValueLedger::record_round(std::span<const std::size_t> participants, double v) const {
  std::vector<char> took_part(size(), 0);
  for (std::size_t k : participants) {
    if (k >= size()) {
      throw std::invalid_argument("record_round: participant id " + std::to_string(k) +
                                  " out of range for K=" + std::to_string(size()));
    }
    took_part[k] = 1;
  }
  const bool improved = v > gamma_;
  ValueLedger next = *this;
  next.rounds_ = rounds_ + 1;
  for (std::size_t k = 0; k < size(); ++k) {
    const double previous = history_[k].empty() ? initial_[k] : history_[k].back();
    const double raw = (took_part[k] && improved) ? previous + 1.0 : previous;
    next.history_[k].push_back(raw);
    // raw = initial + increments so far, so the mean is initial plus the mean
    // increment count; exact for a constant history.
    if (took_part[k] && improved) ++next.increments_[k];
    next.increment_sums_[k] = increment_sums_[k] + next.increments_[k];
    next.scores_[k] = initial_[k] + static_cast<double>(next.increment_sums_[k]) /
                                        static_cast<double>(next.rounds_);
  }
  return next;
}

ValueLedger init_values(std::size_t clients, std::uint64_t seed, double gamma) {
  if (clients == 0) throw std::invalid_argument("init_values: K must be >= 1");
  Rng rng(seed);
  std::vector<double> initial(clients);
  for (double& phi : initial) phi = rng.uniform();
  return ValueLedger(std::move(initial), gamma);
}

namespace {

std::vector<char> increments_of(const ValueLedger& ledger, std::size_t k) {
  const auto history = ledger.history(k);
  std::vector<char> steps(history.size());
  double previous = ledger.initial()[k];
  for (std::size_t r = 0; r < history.size(); ++r) {
    steps[r] = history[r] != previous;
    previous = history[r];
  }
  return steps;
}

}  // namespace

AxiomsReport axioms_report(const ValueLedger& ledger) {
  AxiomsReport report;
  std::vector<std::vector<char>> steps(ledger.size());
  for (std::size_t k = 0; k < ledger.size(); ++k) {
    steps[k] = increments_of(ledger, k);
    bool any = false;
    for (char s : steps[k]) any = any || s;
    if (!any) {
      report.never_incremented.push_back(k);
      if (ledger.score(k) != ledger.initial()[k]) report.null_player = false;
    }
  }
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    for (std::size_t j = i + 1; j < ledger.size(); ++j) {
      if (steps[i] == steps[j] && ledger.score(i) != ledger.score(j)) {
        report.symmetry = false;
        report.asymmetric_pairs.emplace_back(i, j);
      }
    }
  }
  return report;
}

}  // namespace flsched
