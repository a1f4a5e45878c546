#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace flsched {

struct LabeledDataset {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<double> features;  // row-major, size() x dim
  std::vector<std::uint32_t> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const { return {features.data() + i * dim, dim}; }
  // Throws std::invalid_argument if shapes or labels are inconsistent.
  void validate() const;
};

// Disjoint, non-empty index lists into a parent dataset, one per client.
struct Partitioning {
  std::vector<std::vector<std::size_t>> assignment;

  std::size_t clients() const { return assignment.size(); }
  // Throws std::invalid_argument if lists overlap, are empty or out of range.
  void validate(std::size_t parent_size) const;
};

// C Gaussian classes N(mu_c, I) in R^dim, means pairwise `separation` apart
// (mu_c = separation / sqrt(2) * e_c, so C <= dim). Labels cycle 0..C-1.
LabeledDataset synth_gaussian(std::size_t classes, std::size_t dim, std::size_t n,
                              double separation, std::uint64_t seed);

// Big-endian IDX image (0x00000803) + label (0x00000801) files. Pixels are
// scaled to [0, 1]. Throws FormatError naming the offending field.
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path);

LabeledDataset subset(const LabeledDataset& ds, std::span<const std::size_t> rows);

// Shuffles and moves round(test_fraction * n) samples into a held-out set.
std::pair<LabeledDataset, LabeledDataset> holdout_split(const LabeledDataset& ds,
                                                        double test_fraction,
                                                        std::uint64_t seed);

// Random permutation cut into K blocks; the first n mod K blocks get one
// extra sample. Throws std::invalid_argument if n < K.
Partitioning partition_iid(const LabeledDataset& ds, std::size_t clients, std::uint64_t seed);

// Label-sorted shards dealt at random, `per_client` per client.
Partitioning partition_shards(const LabeledDataset& ds, std::size_t clients, std::size_t shards,
                              std::size_t per_client, std::uint64_t seed);

}  // namespace flsched
