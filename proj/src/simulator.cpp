#include "flsched/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include "flsched/error.hpp"
#include "flsched/rng.hpp"
#include "flsched/valuation.hpp"
#include "parallel.hpp"

namespace flsched {

std::vector<std::string> RunConfig::violations() const {
  std::vector<std::string> out;
  if (clients < 1) out.push_back("clients must be >= 1");
  if (rounds < 1) out.push_back("rounds must be >= 1");
  for (auto& v : channel.violations()) out.push_back(std::move(v));
  if (policy.threshold.kind == ThresholdRule::Kind::kFixed &&
      !(policy.threshold.tau >= 0.0 && std::isfinite(policy.threshold.tau))) {
    out.push_back("aou_threshold: fixed tau must be >= 0");
  }
  if (growth.kind == Growth::Kind::kConstant &&
      !(growth.constant >= 0.0 && std::isfinite(growth.constant))) {
    out.push_back("growth: constant must be finite and >= 0");
  }
  if (!std::isfinite(gamma)) out.push_back("gamma must be finite");

  if (learner.arch == Architecture::Kind::kMlp && learner.hidden < 1) {
    out.push_back("learner.hidden must be >= 1");
  }
  LocalTrainConfig train{learner.epochs, learner.batch_size, learner.learning_rate, 0};
  for (auto& v : train.violations()) out.push_back(std::move(v));

  if (!(dataset.test_fraction > 0.0 && dataset.test_fraction < 1.0)) {
    out.push_back("dataset.test_fraction must lie in (0, 1)");
  }
  if (dataset.kind == DatasetSpec::Kind::kSynthetic) {
    const auto& s = dataset.synthetic;
    if (s.classes < 2) out.push_back("dataset.classes must be >= 2");
    if (s.dim < s.classes) out.push_back("dataset.dim must be >= dataset.classes");
    if (s.n < s.classes) out.push_back("dataset.n must be >= dataset.classes");
    if (!(s.separation >= 0.0 && std::isfinite(s.separation))) {
      out.push_back("dataset.separation must be finite and >= 0");
    }
    const auto n_test = static_cast<std::size_t>(std::llround(dataset.test_fraction * s.n));
    const std::size_t n_train = s.n > n_test ? s.n - n_test : 0;
    const std::size_t needed =
        partition.kind == PartitionSpec::Kind::kShards ? partition.shards : clients;
    if (n_train < needed) {
      out.push_back("dataset.n leaves " + std::to_string(n_train) +
                    " training samples, fewer than the " + std::to_string(needed) +
                    " the partition needs");
    }
  } else {
    if (dataset.train_images.empty()) out.push_back("dataset.train_images is required for idx");
    if (dataset.train_labels.empty()) out.push_back("dataset.train_labels is required for idx");
    if (dataset.test_images.empty() != dataset.test_labels.empty()) {
      out.push_back("dataset.test_images and dataset.test_labels must be given together");
    }
  }
  if (partition.kind == PartitionSpec::Kind::kShards) {
    if (partition.per_client < 1) out.push_back("partition.per_client must be >= 1");
    if (partition.shards != clients * partition.per_client) {
      out.push_back("partition.shards must equal clients * partition.per_client (" +
                    std::to_string(clients * partition.per_client) + ")");
    }
  }
  return out;
}

void RunConfig::validate() const {
  const auto problems = violations();
  if (problems.empty()) return;
  std::string message = problems.front();
  for (std::size_t i = 1; i < problems.size(); ++i) message += "; " + problems[i];
  throw ConfigError(message);
}

Scenario build_scenario(const RunConfig& cfg) {
  cfg.validate();
  const std::uint64_t seed = cfg.master_seed;
  Scenario sc;
  if (cfg.dataset.kind == DatasetSpec::Kind::kSynthetic) {
    const auto& s = cfg.dataset.synthetic;
    const auto full = synth_gaussian(s.classes, s.dim, s.n, s.separation,
                                     derive_seed(seed, Stream::kData, {0}));
    std::tie(sc.train, sc.test) =
        holdout_split(full, cfg.dataset.test_fraction, derive_seed(seed, Stream::kData, {1}));
  } else {
    auto train = load_idx(cfg.dataset.train_images, cfg.dataset.train_labels);
    if (cfg.dataset.test_images.empty()) {
      std::tie(sc.train, sc.test) =
          holdout_split(train, cfg.dataset.test_fraction, derive_seed(seed, Stream::kData, {1}));
    } else {
      sc.train = std::move(train);
      sc.test = load_idx(cfg.dataset.test_images, cfg.dataset.test_labels);
      if (sc.test.dim != sc.train.dim) {
        throw FormatError("IDX test images have a different image size than the training set");
      }
    }
  }
  const std::size_t classes = std::max(sc.train.classes, sc.test.classes);
  sc.train.classes = sc.test.classes = classes;

  const auto part_seed = derive_seed(seed, Stream::kPartition);
  if (cfg.partition.kind == PartitionSpec::Kind::kIid) {
    sc.partitions = partition_iid(sc.train, cfg.clients, part_seed);
  } else {
    sc.partitions = partition_shards(sc.train, cfg.clients, cfg.partition.shards,
                                     cfg.partition.per_client, part_seed);
  }
  sc.arch = cfg.learner.arch == Architecture::Kind::kSoftmax
                ? Architecture::softmax(sc.train.dim, classes)
                : Architecture::mlp(sc.train.dim, classes, cfg.learner.hidden);
  return sc;
}

namespace {

// Rethrows the active exception with a round prefix, keeping its type.
[[noreturn]] void rethrow_with_round(std::size_t round) {
  const std::string where = "round " + std::to_string(round) + ": ";
  try {
    throw;
  } catch (const NumericalError& e) {
    throw NumericalError(where + e.what());
  } catch (const FormatError& e) {
    throw FormatError(where + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(where + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(where + e.what());
  }
}

}  // namespace

RunResult run(const RunConfig& cfg, const ExecutionOptions& exec) {
  return run(cfg, build_scenario(cfg), exec);
}

RunResult run(const RunConfig& cfg, const Scenario& scenario, const ExecutionOptions& exec) {
  cfg.validate();
  const std::uint64_t seed = cfg.master_seed;
  const std::size_t clients = cfg.clients;
  if (scenario.partitions.clients() != clients) {
    throw std::invalid_argument("scenario was built for a different client count");
  }

  RunResult result;
  result.policy = cfg.policy;
  result.seed = seed;

  AouState aou(clients, cfg.growth);
  ValueLedger ledger = init_values(clients, derive_seed(seed, Stream::kLedger), cfg.gamma);
  ModelParams model = ModelParams::initialize(scenario.arch, derive_seed(seed, Stream::kInit));
  double previous_accuracy = evaluate(model, scenario.test).accuracy;
  result.initial_accuracy = previous_accuracy;

  for (std::size_t t = 1; t <= cfg.rounds; ++t) {
    const auto started = std::chrono::steady_clock::now();
    RoundRecord rec;
    rec.round = t;
    try {
      const auto channel = draw_round(cfg.channel, clients, t, seed);
      const auto reliable = reliable_set(channel);
      const auto selection =
          select(cfg.policy, reliable, cfg.channel.n_subchannels, aou.ages(), ledger.scores(),
                 derive_seed(seed, Stream::kSchedule, {t}), t);
      const auto slots = assign_subchannels(channel, selection.selected);
      std::vector<std::size_t> participants;
      for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i]) participants.push_back(selection.selected[i]);
      }
      std::sort(participants.begin(), participants.end());

      std::vector<ClientUpdate> updates(participants.size(),
                                        ClientUpdate{model, std::size_t{0}});
      detail::parallel_for(participants.size(), exec.threads, [&](std::size_t i) {
        const std::size_t k = participants[i];
        const auto& rows = scenario.partitions.assignment[k];
        const LocalTrainConfig train{cfg.learner.epochs, cfg.learner.batch_size,
                                     cfg.learner.learning_rate,
                                     derive_seed(seed, Stream::kShuffle, {t, k})};
        updates[i] = {local_train(model, scenario.train, rows, train, TrainContext{t, k}),
                      rows.size()};
      });
      model = fedavg(updates, model);

      const auto eval = evaluate(model, scenario.test);
      rec.accuracy = eval.accuracy;
      rec.loss = eval.loss;
      rec.v = eval.accuracy - previous_accuracy;
      previous_accuracy = eval.accuracy;

      ledger = ledger.record_round(participants, rec.v);
      aou = aou_step(aou, participants, t - 1);

      rec.selected = std::move(participants);
      rec.n_reliable = reliable.size();
      double sum = 0.0;
      double top = 0.0;
      for (double a : aou.ages()) {
        sum += a;
        top = std::max(top, a);
      }
      rec.mean_aou = sum / static_cast<double>(clients);
      rec.max_aou = top;
      if (cfg.per_client_dump) {
        rec.client_aou = aou_snapshot(aou);
        rec.client_scores.assign(ledger.scores().begin(), ledger.scores().end());
      }
    } catch (...) {
      rethrow_with_round(t);
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                            started)
                      .count();
    result.records.push_back(std::move(rec));
  }
  return result;
}

std::vector<RunResult> sweep(const RunConfig& base, std::span<const Policy> policies,
                             std::span<const std::uint64_t> seeds, const ExecutionOptions& exec) {
  if (policies.empty() || seeds.empty()) {
    throw std::invalid_argument("sweep: policies and seeds must be non-empty");
  }
  std::vector<Scenario> scenarios(seeds.size());
  detail::parallel_for(seeds.size(), exec.threads, [&](std::size_t s) {
    RunConfig cfg = base;
    cfg.master_seed = seeds[s];
    scenarios[s] = build_scenario(cfg);
  });

  const std::size_t total = policies.size() * seeds.size();
  std::vector<RunResult> results(total);
  detail::parallel_for(total, exec.threads, [&](std::size_t i) {
    RunConfig cfg = base;
    cfg.policy = policies[i / seeds.size()];
    cfg.master_seed = seeds[i % seeds.size()];
    results[i] = run(cfg, scenarios[i % seeds.size()], ExecutionOptions{1});
  });
  return results;
}

}  // namespace flsched
