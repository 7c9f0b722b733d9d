#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "auxit/data.hpp"
#include "auxit/types.hpp"

namespace auxit {

/// K x K misclassification costs; entry (y, k) is the cost of predicting k
/// for a class-y example. Zero diagonal, non-negative, finite.
class CostMatrix {
 public:
  explicit CostMatrix(MatrixXd entries);

  static CostMatrix zero_one(Eigen::Index num_classes);

  Eigen::Index num_classes() const { return entries_.rows(); }
  double operator()(Eigen::Index y, Eigen::Index k) const { return entries_(y, k); }
  const MatrixXd& entries() const { return entries_; }

  bool operator==(const CostMatrix& other) const { return entries_ == other.entries_; }

 private:
  MatrixXd entries_;
};

/// Rooted tree whose leaves are the classes. parent[i] == -1 marks the root.
struct HierarchyTree {
  std::vector<std::string> names;
  std::vector<int> parent;
  std::vector<int> class_leaves;  // class index -> node index

  Eigen::Index num_classes() const { return static_cast<Eigen::Index>(class_leaves.size()); }

  /// Builds from (child, parent) edges; the root's parent is the token "root".
  /// Leaves become classes in order of first appearance.
  static HierarchyTree from_edges(const std::vector<std::pair<std::string, std::string>>& edges);

  /// Checks single root, no cycles, no orphans and a leaf-class bijection.
  void validate() const;
};

HierarchyTree read_tree_csv(std::istream& in);
HierarchyTree load_tree_csv(const std::filesystem::path& path);

struct EvalReport {
  double average_cost = 0.0;
  double error_rate = 0.0;
  std::vector<std::size_t> prediction_counts;  // per predicted class
};

/// Each example's cost vector is the row of C for its label.
CostSensitiveDataset cast_matrix_to_vectors(const Dataset& dataset, const CostMatrix& costs);

/// Off-diagonal C(y, k) ~ Uniform[0, 10 * n_k / n_y], diagonal 0.
CostMatrix randomized_proportional(const Dataset& dataset, std::uint64_t seed);

/// Upper bound 10 * n_k / n_y used by randomized_proportional.
MatrixXd proportional_bounds(const Dataset& dataset);

/// Number of edges between the two classes' leaves.
CostMatrix tree_distance_costs(const HierarchyTree& tree);

EvalReport evaluate(const Labels& predictions, const CostSensitiveDataset& test);

struct CostSummary {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

/// Statistics over off-diagonal entries (all zeros for K < 2).
CostSummary off_diagonal_summary(const CostMatrix& costs);

// CSV: a `K=<count>` line followed by K comma-separated rows.
void write_cost_matrix_csv(std::ostream& out, const CostMatrix& costs);
CostMatrix read_cost_matrix_csv(std::istream& in);
void save_cost_matrix(const std::filesystem::path& path, const CostMatrix& costs);
CostMatrix load_cost_matrix(const std::filesystem::path& path);

}  // namespace auxit
