#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace flsched {

// Simplified Data-Shapley ledger. Raw values phi_{k,r} start from a random
// phi_{k,0} in [0, 1) and gain +1 in rounds where k participated and the
// round's accuracy delta exceeded gamma. The score of a client is the mean of
// its raw values over completed rounds (its initial value before any round).
// Increments always apply to the raw value, never to the score.
class ValueLedger {
 public:
  ValueLedger(std::vector<double> initial, double gamma);

  std::size_t size() const { return initial_.size(); }
  std::size_t rounds() const { return rounds_; }
  double gamma() const { return gamma_; }

  std::span<const double> initial() const { return initial_; }
  // Raw values phi_{k,1..r}.
  std::span<const double> history(std::size_t k) const;
  std::span<const double> scores() const { return scores_; }

  // Throws std::invalid_argument for k >= K.
  double score(std::size_t k) const;

  // Appends round r = rounds() + 1. Participants may repeat; ids >= K throw.
  ValueLedger record_round(std::span<const std::size_t> participants, double v) const;

 private:
  std::vector<double> initial_;
  std::vector<std::vector<double>> history_;
  std::vector<std::uint64_t> increments_;
  std::vector<std::uint64_t> increment_sums_;
  std::vector<double> scores_;
  std::size_t rounds_ = 0;
  double gamma_ = 0.0;
};

// K initial values uniform in [0, 1). Throws std::invalid_argument if K == 0.
ValueLedger init_values(std::size_t clients, std::uint64_t seed, double gamma = 0.0);

// Diagnostic view of how the heuristic relates to the Shapley axioms.
struct AxiomsReport {
  // Clients with identical increment histories have equal scores.
  bool symmetry = true;
  // Clients that never received an increment still score their initial value
  // (the heuristic's analogue of the null player; it is not zero).
  bool null_player = true;
  std::vector<std::pair<std::size_t, std::size_t>> asymmetric_pairs;
  std::vector<std::size_t> never_incremented;
};

AxiomsReport axioms_report(const ValueLedger& ledger);

}  // namespace flsched
