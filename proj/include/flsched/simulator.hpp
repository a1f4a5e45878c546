#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "flsched/channel.hpp"
#include "flsched/datasets.hpp"
#include "flsched/freshness.hpp"
#include "flsched/learner.hpp"
#include "flsched/scheduler.hpp"

namespace flsched {

struct SyntheticSpec {
  std::size_t classes = 10;
  std::size_t dim = 20;
  std::size_t n = 6000;
  double separation = 3.0;
};

struct DatasetSpec {
  enum class Kind { kSynthetic, kIdx };

  Kind kind = Kind::kSynthetic;
  SyntheticSpec synthetic;
  std::string train_images;
  std::string train_labels;
  std::string test_images;  // optional; without them test_fraction is held out
  std::string test_labels;
  double test_fraction = 0.1;
};

struct PartitionSpec {
  enum class Kind { kIid, kShards };

  Kind kind = Kind::kIid;
  std::size_t shards = 200;
  std::size_t per_client = 2;
};

struct LearnerSpec {
  Architecture::Kind arch = Architecture::Kind::kMlp;
  std::size_t hidden = 64;
  std::size_t epochs = 1;
  std::size_t batch_size = 10;
  double learning_rate = 0.05;
};

struct RunConfig {
  std::size_t clients = 100;
  std::size_t rounds = 60;
  ChannelConfig channel;
  Policy policy;
  Growth growth = Growth::staleness();
  double gamma = 0.0;
  LearnerSpec learner;
  DatasetSpec dataset;
  PartitionSpec partition;
  std::uint64_t master_seed = 1;
  bool per_client_dump = false;

  // Every violated invariant, each naming its config key. Checks that need
  // the data on disk happen in build_scenario.
  std::vector<std::string> violations() const;
  void validate() const;  // throws ConfigError
};

struct RoundRecord {
  std::size_t round = 0;  // 1-based
  std::vector<std::size_t> selected;
  std::size_t n_reliable = 0;
  double accuracy = 0.0;
  double loss = 0.0;
  double v = 0.0;  // accuracy - previous accuracy (round 0 = initial model)
  double mean_aou = 0.0;
  double max_aou = 0.0;
  double wall_ms = 0.0;
  // Filled only with per_client_dump, after the round's updates.
  std::vector<double> client_aou;
  std::vector<double> client_scores;
};

struct RunResult {
  Policy policy;
  std::uint64_t seed = 0;
  double initial_accuracy = 0.0;
  std::vector<RoundRecord> records;
};

// Train/test data and client partitions; depends only on the dataset and
// partition settings, K and master seed, so runs sharing a seed share it.
struct Scenario {
  LabeledDataset train;
  LabeledDataset test;
  Partitioning partitions;
  Architecture arch;
};

Scenario build_scenario(const RunConfig& cfg);

struct ExecutionOptions {
  std::size_t threads = 0;  // 0 = hardware concurrency
};

RunResult run(const RunConfig& cfg, const ExecutionOptions& exec = {});
RunResult run(const RunConfig& cfg, const Scenario& scenario, const ExecutionOptions& exec = {});

// Policy-major cross product; the seed overrides cfg.master_seed. Output
// order is (policy, seed) regardless of parallelism.
std::vector<RunResult> sweep(const RunConfig& base, std::span<const Policy> policies,
                             std::span<const std::uint64_t> seeds,
                             const ExecutionOptions& exec = {});

}  // namespace flsched
