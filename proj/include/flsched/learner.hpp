#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flsched/datasets.hpp"

namespace flsched {

// Softmax(in, classes) or Mlp(in, hidden, hidden, classes) with ReLU.
struct Architecture {
  enum class Kind : std::uint32_t { kSoftmax = 1, kMlp = 2 };

  Kind kind = Kind::kMlp;
  std::size_t inputs = 0;
  std::size_t hidden = 0;  // 0 for softmax
  std::size_t classes = 0;

  static Architecture softmax(std::size_t inputs, std::size_t classes) {
    return {Kind::kSoftmax, inputs, 0, classes};
  }
  static Architecture mlp(std::size_t inputs, std::size_t classes, std::size_t hidden = 64) {
    return {Kind::kMlp, inputs, hidden, classes};
  }

  // Dense layer widths, input first.
  std::vector<std::size_t> widths() const;
  std::size_t parameter_count() const;
  std::string to_string() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// Flat parameter vector. Layout, layer by layer from the input: the weight
// matrix (out x in, row-major) followed by the bias vector (out).
class ModelParams {
 public:
  ModelParams(Architecture arch, std::vector<double> values);

  static ModelParams zeros(const Architecture& arch);
  // Weights and biases uniform in +-1/sqrt(fan_in).
  static ModelParams initialize(const Architecture& arch, std::uint64_t seed);

  const Architecture& arch() const { return arch_; }
  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  Architecture arch_;
  std::vector<double> values_;
};

struct LocalTrainConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 10;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;

  std::vector<std::string> violations() const;
};

// Identifies where a numerical failure happened.
struct TrainContext {
  std::size_t round = 0;
  std::size_t client = 0;
};

// Mean cross-entropy over `rows` of `data` (all rows when `rows` is empty).
double local_loss(const ModelParams& params, const LabeledDataset& data,
                  std::span<const std::size_t> rows = {});

// Mean loss and its gradient (written into `grad`, sized params.size()).
double loss_and_gradient(const ModelParams& params, const LabeledDataset& data,
                         std::span<const std::size_t> rows, std::span<double> grad);

// sum_k (n_k / n) f_k(w).
double global_loss(const ModelParams& params, const LabeledDataset& data,
                   const Partitioning& partitions);

// Mini-batch SGD for cfg.epochs epochs, reshuffled each epoch.
// Throws NumericalError when a gradient or updated parameter is non-finite.
ModelParams local_train(const ModelParams& params, const LabeledDataset& data,
                        std::span<const std::size_t> rows, const LocalTrainConfig& cfg,
                        std::optional<TrainContext> context = std::nullopt);

struct ClientUpdate {
  ModelParams params;
  std::size_t samples = 0;
};

// Sample-weighted average over the updates, renormalized to the subset.
// Reduces in list order. Returns `base` when `updates` is empty.
ModelParams fedavg(std::span<const ClientUpdate> updates, const ModelParams& base);

struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;
};

// Top-1 accuracy (argmax ties go to the lowest class) and mean cross-entropy.
Evaluation evaluate(const ModelParams& params, const LabeledDataset& test);

// Max relative error between the analytic gradient and central differences
// with the given step. Coordinates whose perturbation flips a ReLU, or where
// both gradients vanish, are skipped. Returns 0 when step == 0.
double grad_check(const ModelParams& params, const LabeledDataset& data,
                  std::span<const std::size_t> rows = {}, double step = 1e-5);

// Checkpoint layout (little-endian):
//   8 bytes  "FLSCKPT\0"
//   u32      format version (1)
//   u32      architecture kind (1 softmax, 2 mlp)
//   u64 x3   inputs, hidden, classes
//   u64      d
//   f64 x d  parameters
std::vector<unsigned char> encode_checkpoint(const ModelParams& params);
ModelParams decode_checkpoint(std::span<const unsigned char> bytes);
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace flsched
