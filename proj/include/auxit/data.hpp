#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "auxit/types.hpp"

namespace auxit {

enum class Split { Train, Test };

/// Per-feature affine map learned on a training split: x -> (x - min) / (max - min).
struct Scaling {
  VectorXd min;
  VectorXd max;

  bool operator==(const Scaling& other) const { return min == other.min && max == other.max; }
};

struct Dataset {
  MatrixXd inputs;  // N x D
  Labels labels;    // N entries in [0, K)
  Eigen::Index num_classes = 0;
  Split split = Split::Train;
  std::optional<Scaling> scaling;

  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index dim() const { return inputs.cols(); }
  std::vector<std::size_t> class_counts() const;

  /// Throws if labels and rows disagree or a label is out of range.
  void validate() const;

  /// Rows selected by index, in the given order.
  Dataset select(const std::vector<Eigen::Index>& rows) const;

  bool operator==(const Dataset& other) const;
};

/// A dataset with one cost vector per example; costs(n, labels[n]) == 0.
struct CostSensitiveDataset {
  Dataset data;
  MatrixXd costs;  // N x K

  Eigen::Index size() const { return data.size(); }
  void validate() const;
  CostSensitiveDataset select(const std::vector<Eigen::Index>& rows) const;

  bool operator==(const CostSensitiveDataset& other) const {
    return data == other.data && costs == other.costs;
  }
};

struct DatasetPair {
  Dataset train;
  Dataset test;
};

// IDX (MNIST distribution format). Pixels become their raw byte values as reals.
Dataset read_idx(std::istream& images, std::istream& labels);
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

/// Numeric CSV; labels in `label_column` are 1-based on disk and K is the
/// largest label seen.
Dataset read_csv(std::istream& in, std::size_t label_column);
Dataset load_csv(const std::filesystem::path& path, std::size_t label_column);

/// Min-max scaling fitted on `train` and applied to both splits. Constant
/// features map to 0; test values are not clipped.
DatasetPair scale_unit(const Dataset& train, const Dataset& test);
Scaling fit_scaling(const Dataset& train);
MatrixXd apply_scaling(const Scaling& scaling, const MatrixXd& inputs);

/// Picks ceil(class_fraction*K) classes and drops floor(removal_fraction*count)
/// examples from each. Example order is preserved.
Dataset make_imbalanced(const Dataset& dataset, double class_fraction, double removal_fraction,
                        std::uint64_t seed);

/// Gaussian clusters around seeded random centers, split 80/20 per class.
DatasetPair synth_blobs(Eigen::Index num_classes, Eigen::Index dim,
                        const std::vector<std::size_t>& per_class_counts, double spread,
                        std::uint64_t seed);

/// First `limit` rows (or all of them when smaller).
Dataset take_first(const Dataset& dataset, std::size_t limit);

// Binary cache in the tensor-archive format.
void save_dataset(const std::filesystem::path& path, const CostSensitiveDataset& dataset);
CostSensitiveDataset load_dataset(const std::filesystem::path& path);

}  // namespace auxit
