#include "flsched/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <stdexcept>
#include <string>

#include "flsched/error.hpp"
#include "flsched/rng.hpp"

namespace flsched {

void LabeledDataset::validate() const {
  if (features.size() != labels.size() * dim) {
    throw std::invalid_argument("dataset: feature matrix does not match n x dim");
  }
  for (auto y : labels) {
    if (y >= classes) throw std::invalid_argument("dataset: label out of range");
  }
}

void Partitioning::validate(std::size_t parent_size) const {
  std::vector<char> used(parent_size, 0);
  for (std::size_t k = 0; k < assignment.size(); ++k) {
    if (assignment[k].empty()) {
      throw std::invalid_argument("partition: client " + std::to_string(k) + " has no samples");
    }
    for (std::size_t i : assignment[k]) {
      if (i >= parent_size) throw std::invalid_argument("partition: index out of range");
      if (used[i]) throw std::invalid_argument("partition: index assigned twice");
      used[i] = 1;
    }
  }
}

LabeledDataset synth_gaussian(std::size_t classes, std::size_t dim, std::size_t n,
                              double separation, std::uint64_t seed) {
  if (classes < 2) throw std::invalid_argument("synth_gaussian: classes must be >= 2");
  if (n < classes) throw std::invalid_argument("synth_gaussian: n must be >= classes");
  if (dim < classes) throw std::invalid_argument("synth_gaussian: dim must be >= classes");
  if (!(separation >= 0.0 && std::isfinite(separation))) {
    throw std::invalid_argument("synth_gaussian: separation must be finite and >= 0");
  }
  const double offset = separation / std::sqrt(2.0);
  LabeledDataset ds;
  ds.dim = dim;
  ds.classes = classes;
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.labels[i] = static_cast<std::uint32_t>(i % classes);
  Rng rng(seed);
  rng.shuffle(std::span(ds.labels));
  ds.features.resize(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      ds.features[i * dim + j] = rng.normal() + (j == ds.labels[i] ? offset : 0.0);
    }
  }
  return ds;
}

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path, const char* field) {
  if (bytes.size() < offset + 4) {
    throw FormatError(path.string() + ": truncated before field '" + field + "'");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

}  // namespace

LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
  const auto images = read_all(images_path);
  const auto labels = read_all(labels_path);

  if (read_be32(images, 0, images_path, "magic") != kImageMagic) {
    throw FormatError(images_path.string() + ": bad field 'magic' (expected 0x00000803)");
  }
  const std::size_t count = read_be32(images, 4, images_path, "count");
  const std::size_t rows = read_be32(images, 8, images_path, "rows");
  const std::size_t cols = read_be32(images, 12, images_path, "cols");
  const std::size_t pixels = rows * cols;
  if (pixels == 0) throw FormatError(images_path.string() + ": field 'rows'/'cols' is zero");
  const std::size_t payload = images.size() - 16;
  if (payload % pixels != 0 || payload / pixels != count) {
    throw FormatError(images_path.string() + ": field 'pixels' has " + std::to_string(payload) +
                      " bytes, expected " + std::to_string(count) + " images of " +
                      std::to_string(pixels));
  }

  if (read_be32(labels, 0, labels_path, "magic") != kLabelMagic) {
    throw FormatError(labels_path.string() + ": bad field 'magic' (expected 0x00000801)");
  }
  const std::size_t label_count = read_be32(labels, 4, labels_path, "count");
  if (label_count != count) {
    throw FormatError(labels_path.string() + ": field 'count' is " + std::to_string(label_count) +
                      " but the image file holds " + std::to_string(count));
  }
  if (labels.size() != 8 + count) {
    throw FormatError(labels_path.string() + ": field 'labels' has " +
                      std::to_string(labels.size() - 8) + " bytes, expected " +
                      std::to_string(count));
  }

  LabeledDataset ds;
  ds.dim = pixels;
  ds.features.resize(count * pixels);
  for (std::size_t i = 0; i < count * pixels; ++i) ds.features[i] = images[16 + i] / 255.0;
  ds.labels.resize(count);
  std::uint32_t max_label = 0;
  for (std::size_t i = 0; i < count; ++i) {
    ds.labels[i] = labels[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.classes = count == 0 ? 0 : max_label + 1;
  return ds;
}

LabeledDataset subset(const LabeledDataset& ds, std::span<const std::size_t> rows) {
  LabeledDataset out;
  out.dim = ds.dim;
  out.classes = ds.classes;
  out.features.reserve(rows.size() * ds.dim);
  out.labels.reserve(rows.size());
  for (std::size_t i : rows) {
    if (i >= ds.size()) throw std::invalid_argument("subset: row out of range");
    const auto r = ds.row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

std::pair<LabeledDataset, LabeledDataset> holdout_split(const LabeledDataset& ds,
                                                        double test_fraction,
                                                        std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("holdout_split: test_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span(order));
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * ds.size()));
  if (n_test == 0 || n_test >= ds.size()) {
    throw std::invalid_argument("holdout_split: split leaves an empty side");
  }
  const std::size_t n_train = ds.size() - n_test;
  return {subset(ds, std::span(order).first(n_train)), subset(ds, std::span(order).subspan(n_train))};
}

Partitioning partition_iid(const LabeledDataset& ds, std::size_t clients, std::uint64_t seed) {
  if (clients == 0) throw std::invalid_argument("partition_iid: K must be >= 1");
  if (ds.size() < clients) throw std::invalid_argument("partition_iid: n must be >= K");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span(order));
  const std::size_t base = ds.size() / clients;
  const std::size_t extra = ds.size() % clients;
  Partitioning out;
  out.assignment.resize(clients);
  std::size_t cursor = 0;
  for (std::size_t k = 0; k < clients; ++k) {
    const std::size_t len = base + (k < extra ? 1 : 0);
    out.assignment[k].assign(order.begin() + cursor, order.begin() + cursor + len);
    cursor += len;
  }
  return out;
}

Partitioning partition_shards(const LabeledDataset& ds, std::size_t clients, std::size_t shards,
                              std::size_t per_client, std::uint64_t seed) {
  if (clients == 0 || per_client == 0) {
    throw std::invalid_argument("partition_shards: K and per_client must be >= 1");
  }
  if (shards != clients * per_client) {
    throw std::invalid_argument("partition_shards: shards (" + std::to_string(shards) +
                                ") must equal K * per_client (" +
                                std::to_string(clients * per_client) + ")");
  }
  if (ds.size() < shards) throw std::invalid_argument("partition_shards: n must be >= shards");

  std::vector<std::size_t> by_label(ds.size());
  std::iota(by_label.begin(), by_label.end(), std::size_t{0});
  std::stable_sort(by_label.begin(), by_label.end(),
                   [&](std::size_t a, std::size_t b) { return ds.labels[a] < ds.labels[b]; });

  const std::size_t base = ds.size() / shards;
  const std::size_t extra = ds.size() % shards;
  std::vector<std::size_t> shard_start(shards + 1, 0);
  for (std::size_t s = 0; s < shards; ++s) {
    shard_start[s + 1] = shard_start[s] + base + (s < extra ? 1 : 0);
  }

  std::vector<std::size_t> deal(shards);
  std::iota(deal.begin(), deal.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span(deal));

  Partitioning out;
  out.assignment.resize(clients);
  for (std::size_t k = 0; k < clients; ++k) {
    for (std::size_t j = 0; j < per_client; ++j) {
      const std::size_t s = deal[k * per_client + j];
      out.assignment[k].insert(out.assignment[k].end(), by_label.begin() + shard_start[s],
                               by_label.begin() + shard_start[s + 1]);
    }
  }
  return out;
}

}  // namespace flsched
