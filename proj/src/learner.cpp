#include "flsched/learner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <stdexcept>

#include "flsched/error.hpp"
#include "flsched/rng.hpp"

namespace flsched {

std::vector<std::size_t> Architecture::widths() const {
  if (kind == Kind::kSoftmax) return {inputs, classes};
  return {inputs, hidden, hidden, classes};
}

std::size_t Architecture::parameter_count() const {
  const auto w = widths();
  std::size_t d = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) d += w[l + 1] * (w[l] + 1);
  return d;
}

std::string Architecture::to_string() const {
  if (kind == Kind::kSoftmax) {
    return "softmax(" + std::to_string(inputs) + "," + std::to_string(classes) + ")";
  }
  return "mlp(" + std::to_string(inputs) + "," + std::to_string(hidden) + "," +
         std::to_string(hidden) + "," + std::to_string(classes) + ")";
}

ModelParams::ModelParams(Architecture arch, std::vector<double> values)
    : arch_(arch), values_(std::move(values)) {
  if (arch_.inputs == 0 || arch_.classes == 0 ||
      (arch_.kind == Architecture::Kind::kMlp && arch_.hidden == 0)) {
    throw std::invalid_argument("architecture " + arch_.to_string() + " has an empty layer");
  }
  if (values_.size() != arch_.parameter_count()) {
    throw std::invalid_argument("parameter vector has " + std::to_string(values_.size()) +
                                " entries, " + arch_.to_string() + " needs " +
                                std::to_string(arch_.parameter_count()));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("model parameters must be finite");
  }
}

ModelParams ModelParams::zeros(const Architecture& arch) {
  return ModelParams(arch, std::vector<double>(arch.parameter_count(), 0.0));
}

ModelParams ModelParams::initialize(const Architecture& arch, std::uint64_t seed) {
  std::vector<double> values(arch.parameter_count());
  const auto w = arch.widths();
  Rng rng(seed);
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w[l]));
    const std::size_t count = w[l + 1] * (w[l] + 1);
    for (std::size_t i = 0; i < count; ++i) {
      values[offset + i] = bound * (2.0 * rng.uniform() - 1.0);
    }
    offset += count;
  }
  return ModelParams(arch, std::move(values));
}

std::vector<std::string> LocalTrainConfig::violations() const {
  std::vector<std::string> out;
  if (epochs < 1) out.push_back("learner.epochs must be >= 1");
  if (batch_size < 1) out.push_back("learner.batch_size must be >= 1");
  if (!(learning_rate > 0.0 && std::isfinite(learning_rate))) {
    out.push_back("learner.learning_rate must be > 0");
  }
  return out;
}

namespace {

struct Layer {
  std::size_t in;
  std::size_t out;
  std::size_t weight_offset;
  std::size_t bias_offset;
};

std::vector<Layer> layers_of(const Architecture& arch) {
  const auto w = arch.widths();
  std::vector<Layer> layers;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    layers.push_back({w[l], w[l + 1], offset, offset + w[l] * w[l + 1]});
    offset += w[l + 1] * (w[l] + 1);
  }
  return layers;
}

// Forward/backward buffers for one sample.
class Network {
 public:
  explicit Network(const ModelParams& params)
      : params_(params), layers_(layers_of(params.arch())) {
    pre_.resize(layers_.size());
    act_.resize(layers_.size() + 1);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      pre_[l].resize(layers_[l].out);
      act_[l + 1].resize(layers_[l].out);
    }
    delta_.resize(params.arch().classes);
  }

  // Returns the cross-entropy of `label`; fills the logits in pre_.back().
  double forward(std::span<const double> x, std::uint32_t label) {
    act_[0].assign(x.begin(), x.end());
    const auto w = params_.values();
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& layer = layers_[l];
      const bool last = l + 1 == layers_.size();
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double* row = w.data() + layer.weight_offset + o * layer.in;
        double z = w[layer.bias_offset + o];
        for (std::size_t i = 0; i < layer.in; ++i) z += row[i] * act_[l][i];
        pre_[l][o] = z;
        act_[l + 1][o] = last ? z : std::max(z, 0.0);
      }
    }
    const auto& logits = pre_.back();
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double z : logits) total += std::exp(z - top);
    return top + std::log(total) - logits[label];
  }

  // Accumulates the gradient of the last forward() sample into `grad`.
  void backward(std::uint32_t label, std::span<double> grad) {
    const auto& logits = pre_.back();
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t c = 0; c < logits.size(); ++c) {
      delta_[c] = std::exp(logits[c] - top);
      total += delta_[c];
    }
    for (double& d : delta_) d /= total;
    delta_[label] -= 1.0;

    const auto w = params_.values();
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const Layer& layer = layers_[l];
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double d = delta_[o];
        if (d == 0.0) continue;
        double* g_row = grad.data() + layer.weight_offset + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) g_row[i] += d * act_[l][i];
        grad[layer.bias_offset + o] += d;
      }
      if (l == 0) break;
      next_delta_.assign(layer.in, 0.0);
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double d = delta_[o];
        if (d == 0.0) continue;
        const double* row = w.data() + layer.weight_offset + o * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) next_delta_[i] += row[i] * d;
      }
      for (std::size_t i = 0; i < layer.in; ++i) {
        if (pre_[l - 1][i] <= 0.0) next_delta_[i] = 0.0;
      }
      delta_.swap(next_delta_);
    }
    delta_.resize(params_.arch().classes);
  }

  std::span<const double> logits() const { return pre_.back(); }

  // Appends the sign pattern of every hidden pre-activation.
  void append_relu_pattern(std::vector<char>& out) const {
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
      for (double z : pre_[l]) out.push_back(z > 0.0);
    }
  }

 private:
  const ModelParams& params_;
  std::vector<Layer> layers_;
  std::vector<std::vector<double>> pre_;
  std::vector<std::vector<double>> act_;
  std::vector<double> delta_;
  std::vector<double> next_delta_;
};

void check_compatible(const ModelParams& params, const LabeledDataset& data) {
  if (data.dim != params.arch().inputs) {
    throw std::invalid_argument("feature dimension " + std::to_string(data.dim) +
                                " does not match model input " +
                                std::to_string(params.arch().inputs));
  }
  if (data.classes > params.arch().classes) {
    throw std::invalid_argument("dataset has more classes than the model outputs");
  }
}

std::vector<std::size_t> all_rows(const LabeledDataset& data) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

template <typename Fn>
void for_rows(const LabeledDataset& data, std::span<const std::size_t> rows, Fn&& fn) {
  if (rows.empty()) {
    for (std::size_t i = 0; i < data.size(); ++i) fn(i);
  } else {
    for (std::size_t i : rows) {
      if (i >= data.size()) throw std::invalid_argument("row index out of range");
      fn(i);
    }
  }
}

std::size_t row_count(const LabeledDataset& data, std::span<const std::size_t> rows) {
  return rows.empty() ? data.size() : rows.size();
}

}  // namespace

double local_loss(const ModelParams& params, const LabeledDataset& data,
                  std::span<const std::size_t> rows) {
  check_compatible(params, data);
  const std::size_t n = row_count(data, rows);
  if (n == 0) throw std::invalid_argument("local_loss: empty dataset");
  Network net(params);
  double total = 0.0;
  for_rows(data, rows, [&](std::size_t i) { total += net.forward(data.row(i), data.labels[i]); });
  return total / static_cast<double>(n);
}

double loss_and_gradient(const ModelParams& params, const LabeledDataset& data,
                         std::span<const std::size_t> rows, std::span<double> grad) {
  check_compatible(params, data);
  if (grad.size() != params.size()) throw std::invalid_argument("gradient buffer has wrong size");
  const std::size_t n = row_count(data, rows);
  if (n == 0) throw std::invalid_argument("loss_and_gradient: empty dataset");
  std::fill(grad.begin(), grad.end(), 0.0);
  Network net(params);
  double total = 0.0;
  for_rows(data, rows, [&](std::size_t i) {
    total += net.forward(data.row(i), data.labels[i]);
    net.backward(data.labels[i], grad);
  });
  const double scale = 1.0 / static_cast<double>(n);
  for (double& g : grad) g *= scale;
  return total * scale;
}

double global_loss(const ModelParams& params, const LabeledDataset& data,
                   const Partitioning& partitions) {
  std::size_t n = 0;
  for (const auto& part : partitions.assignment) n += part.size();
  if (n == 0) throw std::invalid_argument("global_loss: no samples");
  double total = 0.0;
  for (const auto& part : partitions.assignment) {
    if (part.empty()) continue;
    const double weight = static_cast<double>(part.size()) / static_cast<double>(n);
    total += weight * local_loss(params, data, part);
  }
  return total;
}

ModelParams local_train(const ModelParams& params, const LabeledDataset& data,
                        std::span<const std::size_t> rows, const LocalTrainConfig& cfg,
                        std::optional<TrainContext> context) {
  check_compatible(params, data);
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate >= 0.0) ||
      !std::isfinite(cfg.learning_rate)) {
    throw std::invalid_argument("local_train: need epochs >= 1, batch_size >= 1, learning_rate >= 0");
  }
  std::vector<std::size_t> order =
      rows.empty() ? all_rows(data) : std::vector<std::size_t>(rows.begin(), rows.end());
  if (order.empty()) throw std::invalid_argument("local_train: empty dataset");

  ModelParams current = params;
  std::vector<double> grad(params.size());
  Rng rng(cfg.seed);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      loss_and_gradient(current, data, std::span(order).subspan(start, len), grad);
      auto fail = [&](const char* what) {
        std::string where = std::string("non-finite ") + what + " in local training";
        if (context) {
          where += " (round " + std::to_string(context->round) + ", client " +
                   std::to_string(context->client) + ")";
        }
        throw NumericalError(where);
      };
      for (double g : grad) {
        if (!std::isfinite(g)) fail("gradient");
      }
      auto w = current.mutable_values();
      for (std::size_t j = 0; j < w.size(); ++j) {
        w[j] -= cfg.learning_rate * grad[j];
        if (!std::isfinite(w[j])) fail("parameter");
      }
    }
  }
  return current;
}

ModelParams fedavg(std::span<const ClientUpdate> updates, const ModelParams& base) {
  if (updates.empty()) return base;
  std::size_t total = 0;
  for (const auto& u : updates) {
    if (!(u.params.arch() == base.arch())) {
      throw std::invalid_argument("fedavg: update architecture " + u.params.arch().to_string() +
                                  " differs from " + base.arch().to_string());
    }
    total += u.samples;
  }
  if (total == 0) throw std::invalid_argument("fedavg: updates carry no samples");
  std::vector<double> out(base.size(), 0.0);
  for (const auto& u : updates) {
    const double weight = static_cast<double>(u.samples) / static_cast<double>(total);
    const auto w = u.params.values();
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += weight * w[j];
  }
  return ModelParams(base.arch(), std::move(out));
}

Evaluation evaluate(const ModelParams& params, const LabeledDataset& test) {
  check_compatible(params, test);
  if (test.size() == 0) throw std::invalid_argument("evaluate: empty test set");
  Network net(params);
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    loss += net.forward(test.row(i), test.labels[i]);
    const auto logits = net.logits();
    const auto best = static_cast<std::size_t>(
        std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (best == test.labels[i]) ++correct;
  }
  const auto n = static_cast<double>(test.size());
  return {static_cast<double>(correct) / n, loss / n};
}

double grad_check(const ModelParams& params, const LabeledDataset& data,
                  std::span<const std::size_t> rows, double step) {
  if (step == 0.0) return 0.0;
  check_compatible(params, data);
  std::vector<double> analytic(params.size());
  loss_and_gradient(params, data, rows, analytic);

  auto loss_and_pattern = [&](const ModelParams& p, std::vector<char>& pattern) {
    pattern.clear();
    Network net(p);
    double total = 0.0;
    for_rows(data, rows, [&](std::size_t i) {
      total += net.forward(data.row(i), data.labels[i]);
      net.append_relu_pattern(pattern);
    });
    return total / static_cast<double>(row_count(data, rows));
  };

  ModelParams probe = params;
  std::vector<char> plus_pattern;
  std::vector<char> minus_pattern;
  double worst = 0.0;
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double original = params.values()[j];
    probe.mutable_values()[j] = original + step;
    const double plus = loss_and_pattern(probe, plus_pattern);
    probe.mutable_values()[j] = original - step;
    const double minus = loss_and_pattern(probe, minus_pattern);
    probe.mutable_values()[j] = original;
    if (plus_pattern != minus_pattern) continue;  // crosses a ReLU kink
    const double numeric = (plus - minus) / (2.0 * step);
    const double scale = std::max(std::abs(analytic[j]), std::abs(numeric));
    if (scale == 0.0) continue;
    worst = std::max(worst, std::abs(analytic[j] - numeric) / scale);
  }
  return worst;
}

namespace {

constexpr unsigned char kCheckpointMagic[8] = {'F', 'L', 'S', 'C', 'K', 'P', 'T', 0};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_le(std::vector<unsigned char>& out, std::uint64_t value, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<unsigned char>(value >> (8 * i)));
}

std::uint64_t get_le(std::span<const unsigned char> in, std::size_t& offset, int bytes,
                     const char* field) {
  if (in.size() < offset + static_cast<std::size_t>(bytes)) {
    throw FormatError(std::string("checkpoint truncated at field '") + field + "'");
  }
  std::uint64_t value = 0;
  for (int i = 0; i < bytes; ++i) value |= std::uint64_t{in[offset + i]} << (8 * i);
  offset += bytes;
  return value;
}

}  // namespace

std::vector<unsigned char> encode_checkpoint(const ModelParams& params) {
  std::vector<unsigned char> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  const auto& arch = params.arch();
  put_le(out, kCheckpointVersion, 4);
  put_le(out, static_cast<std::uint32_t>(arch.kind), 4);
  put_le(out, arch.inputs, 8);
  put_le(out, arch.hidden, 8);
  put_le(out, arch.classes, 8);
  put_le(out, params.size(), 8);
  for (double v : params.values()) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  return out;
}

ModelParams decode_checkpoint(std::span<const unsigned char> bytes) {
  if (bytes.size() < 8 || !std::equal(bytes.begin(), bytes.begin() + 8, kCheckpointMagic)) {
    throw FormatError("checkpoint: bad field 'magic'");
  }
  std::size_t offset = 8;
  if (get_le(bytes, offset, 4, "version") != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported field 'version'");
  }
  const auto kind = get_le(bytes, offset, 4, "kind");
  if (kind != 1 && kind != 2) throw FormatError("checkpoint: bad field 'kind'");
  Architecture arch;
  arch.kind = static_cast<Architecture::Kind>(kind);
  arch.inputs = get_le(bytes, offset, 8, "inputs");
  arch.hidden = get_le(bytes, offset, 8, "hidden");
  arch.classes = get_le(bytes, offset, 8, "classes");
  const auto d = get_le(bytes, offset, 8, "d");
  if (d != arch.parameter_count()) throw FormatError("checkpoint: field 'd' mismatches architecture");
  if (bytes.size() != offset + 8 * d) throw FormatError("checkpoint: field 'parameters' has wrong length");
  std::vector<double> values(d);
  for (auto& v : values) v = std::bit_cast<double>(get_le(bytes, offset, 8, "parameters"));
  try {
    return ModelParams(arch, std::move(values));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in),
                                         std::istreambuf_iterator<char>()};
  return decode_checkpoint(bytes);
}

}  // namespace flsched
