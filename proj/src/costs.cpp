#include "auxit/costs.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>

#include "auxit/error.hpp"
#include "auxit/io.hpp"

namespace auxit {

CostMatrix::CostMatrix(MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "cost matrix must be square, got " + shape_of(entries_));
  }
  if (!entries_.allFinite() || (entries_.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "cost matrix entries must be finite and non-negative");
  }
  for (Eigen::Index y = 0; y < entries_.rows(); ++y) {
    if (entries_(y, y) != 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  "cost matrix diagonal entry " + std::to_string(y) + " is nonzero");
    }
  }
}

CostMatrix CostMatrix::zero_one(Eigen::Index num_classes) {
  return CostMatrix(MatrixXd::Ones(num_classes, num_classes) -
                    MatrixXd::Identity(num_classes, num_classes));
}

// ---------------------------------------------------------------------------
// Hierarchy tree
// ---------------------------------------------------------------------------

HierarchyTree HierarchyTree::from_edges(
    const std::vector<std::pair<std::string, std::string>>& edges) {
  HierarchyTree tree;
  std::map<std::string, int> index;
  std::vector<bool> declared;  // appeared as a child
  auto node = [&](const std::string& name) {
    auto [it, inserted] = index.emplace(name, static_cast<int>(tree.names.size()));
    if (inserted) {
      tree.names.push_back(name);
      tree.parent.push_back(-2);  // unresolved
      declared.push_back(false);
    }
    return it->second;
  };

  for (const auto& [child, parent] : edges) {
    if (child.empty() || parent.empty() || child == "root") {
      throw Error(ErrorCode::MalformedTree, "invalid edge '" + child + "," + parent + "'");
    }
    const int c = node(child);
    if (declared[static_cast<std::size_t>(c)]) {
      throw Error(ErrorCode::MalformedTree, "node '" + child + "' has more than one parent");
    }
    declared[static_cast<std::size_t>(c)] = true;
    tree.parent[static_cast<std::size_t>(c)] = parent == "root" ? -1 : node(parent);
  }
  for (std::size_t i = 0; i < tree.names.size(); ++i) {
    if (!declared[i]) {
      throw Error(ErrorCode::MalformedTree,
                  "orphan node '" + tree.names[i] + "' is used as a parent but has no parent");
    }
  }

  std::vector<bool> has_child(tree.names.size(), false);
  for (int p : tree.parent) {
    if (p >= 0) has_child[static_cast<std::size_t>(p)] = true;
  }
  for (std::size_t i = 0; i < tree.names.size(); ++i) {
    if (!has_child[i]) tree.class_leaves.push_back(static_cast<int>(i));
  }
  tree.validate();
  return tree;
}

void HierarchyTree::validate() const {
  const auto n = parent.size();
  if (names.size() != n) throw Error(ErrorCode::MalformedTree, "names and parents differ in length");
  if (n == 0) throw Error(ErrorCode::MalformedTree, "tree is empty");
  std::size_t roots = 0;
  for (int p : parent) {
    if (p == -1) {
      ++roots;
    } else if (p < 0 || static_cast<std::size_t>(p) >= n) {
      throw Error(ErrorCode::MalformedTree, "parent index out of range");
    }
  }
  if (roots != 1) {
    throw Error(ErrorCode::MalformedTree, "tree must have exactly one root, found " + std::to_string(roots));
  }
  for (std::size_t i = 0; i < n; ++i) {
    int cur = static_cast<int>(i);
    std::size_t steps = 0;
    while (parent[static_cast<std::size_t>(cur)] != -1) {
      cur = parent[static_cast<std::size_t>(cur)];
      if (++steps > n) throw Error(ErrorCode::MalformedTree, "cycle through node '" + names[i] + "'");
    }
  }
  std::vector<bool> has_child(n, false);
  for (int p : parent) {
    if (p >= 0) has_child[static_cast<std::size_t>(p)] = true;
  }
  std::vector<bool> used(n, false);
  for (int leaf : class_leaves) {
    if (leaf < 0 || static_cast<std::size_t>(leaf) >= n || has_child[static_cast<std::size_t>(leaf)] ||
        used[static_cast<std::size_t>(leaf)]) {
      throw Error(ErrorCode::MalformedTree, "class map must be a bijection onto the leaves");
    }
    used[static_cast<std::size_t>(leaf)] = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!has_child[i] && !used[i]) {
      throw Error(ErrorCode::MalformedTree, "leaf '" + names[i] + "' has no class");
    }
  }
}

HierarchyTree read_tree_csv(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> edges;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != 2) {
      throw Error(ErrorCode::ParseError,
                  "tree line " + std::to_string(line_no) + " must have exactly two cells");
    }
    cells[0] = trim(cells[0]);
    cells[1] = trim(cells[1]);
    if (edges.empty() && line_no == 1 && cells[0] == "child" && cells[1] == "parent") continue;
    edges.emplace_back(cells[0], cells[1]);
  }
  return HierarchyTree::from_edges(edges);
}

HierarchyTree load_tree_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_tree_csv(in);
}

// ---------------------------------------------------------------------------
// Cost generation
// ---------------------------------------------------------------------------

CostSensitiveDataset cast_matrix_to_vectors(const Dataset& dataset, const CostMatrix& costs) {
  if (costs.num_classes() != dataset.num_classes) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(costs.num_classes()) + "-class cost matrix for a " +
                    std::to_string(dataset.num_classes) + "-class dataset");
  }
  dataset.validate();
  CostSensitiveDataset out{dataset, MatrixXd(dataset.size(), dataset.num_classes)};
  for (Eigen::Index n = 0; n < dataset.size(); ++n) {
    out.costs.row(n) = costs.entries().row(dataset.labels[static_cast<std::size_t>(n)]);
  }
  return out;
}

MatrixXd proportional_bounds(const Dataset& dataset) {
  dataset.validate();
  const auto counts = dataset.class_counts();
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) {
      throw Error(ErrorCode::EmptyClass, "class " + std::to_string(k) + " has no examples");
    }
  }
  const Eigen::Index K = dataset.num_classes;
  MatrixXd bounds = MatrixXd::Zero(K, K);
  for (Eigen::Index y = 0; y < K; ++y) {
    for (Eigen::Index k = 0; k < K; ++k) {
      if (y != k) {
        bounds(y, k) = 10.0 * static_cast<double>(counts[static_cast<std::size_t>(k)]) /
                       static_cast<double>(counts[static_cast<std::size_t>(y)]);
      }
    }
  }
  return bounds;
}

CostMatrix randomized_proportional(const Dataset& dataset, std::uint64_t seed) {
  const MatrixXd bounds = proportional_bounds(dataset);
  std::mt19937_64 rng(seed);
  MatrixXd entries = MatrixXd::Zero(bounds.rows(), bounds.cols());
  for (Eigen::Index y = 0; y < bounds.rows(); ++y) {
    for (Eigen::Index k = 0; k < bounds.cols(); ++k) {
      if (y == k) continue;
      std::uniform_real_distribution<double> dist(0.0, bounds(y, k));
      entries(y, k) = dist(rng);
    }
  }
  return CostMatrix(std::move(entries));
}

CostMatrix tree_distance_costs(const HierarchyTree& tree) {
  tree.validate();
  const auto n = tree.parent.size();
  std::vector<int> depth(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int cur = tree.parent[i]; cur != -1; cur = tree.parent[static_cast<std::size_t>(cur)]) {
      ++depth[i];
    }
  }
  auto distance = [&](int a, int b) {
    int steps = 0;
    while (depth[static_cast<std::size_t>(a)] > depth[static_cast<std::size_t>(b)]) {
      a = tree.parent[static_cast<std::size_t>(a)];
      ++steps;
    }
    while (depth[static_cast<std::size_t>(b)] > depth[static_cast<std::size_t>(a)]) {
      b = tree.parent[static_cast<std::size_t>(b)];
      ++steps;
    }
    while (a != b) {
      a = tree.parent[static_cast<std::size_t>(a)];
      b = tree.parent[static_cast<std::size_t>(b)];
      steps += 2;
    }
    return steps;
  };
  const Eigen::Index K = tree.num_classes();
  MatrixXd entries(K, K);
  for (Eigen::Index y = 0; y < K; ++y) {
    for (Eigen::Index k = 0; k < K; ++k) {
      entries(y, k) = distance(tree.class_leaves[static_cast<std::size_t>(y)],
                               tree.class_leaves[static_cast<std::size_t>(k)]);
    }
  }
  return CostMatrix(std::move(entries));
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

EvalReport evaluate(const Labels& predictions, const CostSensitiveDataset& test) {
  if (static_cast<Eigen::Index>(predictions.size()) != test.size()) {
    throw Error(ErrorCode::DimensionMismatch, std::to_string(predictions.size()) +
                                                  " predictions for " + std::to_string(test.size()) +
                                                  " test examples");
  }
  const Eigen::Index K = test.costs.cols();
  EvalReport report;
  report.prediction_counts.assign(static_cast<std::size_t>(K), 0);
  if (predictions.empty()) return report;
  double cost = 0.0;
  std::size_t errors = 0;
  for (std::size_t n = 0; n < predictions.size(); ++n) {
    const int p = predictions[n];
    if (p < 0 || p >= K) {
      throw Error(ErrorCode::LabelOutOfRange, "prediction " + std::to_string(p) + " out of range");
    }
    cost += test.costs(static_cast<Eigen::Index>(n), p);
    errors += p != test.data.labels[n] ? 1 : 0;
    ++report.prediction_counts[static_cast<std::size_t>(p)];
  }
  const auto N = static_cast<double>(predictions.size());
  report.average_cost = cost / N;
  report.error_rate = static_cast<double>(errors) / N;
  return report;
}

CostSummary off_diagonal_summary(const CostMatrix& costs) {
  CostSummary s;
  const Eigen::Index K = costs.num_classes();
  if (K < 2) return s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (Eigen::Index y = 0; y < K; ++y) {
    for (Eigen::Index k = 0; k < K; ++k) {
      if (y == k) continue;
      s.min = std::min(s.min, costs(y, k));
      s.max = std::max(s.max, costs(y, k));
      sum += costs(y, k);
    }
  }
  s.mean = sum / static_cast<double>(K * (K - 1));
  return s;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

void write_cost_matrix_csv(std::ostream& out, const CostMatrix& costs) {
  out << "K=" << costs.num_classes() << '\n';
  for (Eigen::Index y = 0; y < costs.num_classes(); ++y) {
    for (Eigen::Index k = 0; k < costs.num_classes(); ++k) {
      if (k > 0) out << ',';
      out << format_real(costs(y, k));
    }
    out << '\n';
  }
}

CostMatrix read_cost_matrix_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("K=", 0) != 0) {
    throw Error(ErrorCode::ParseError, "cost matrix CSV must start with a 'K=<count>' line");
  }
  const double k_value = parse_real(std::string_view(line).substr(2), "cost matrix header");
  if (k_value < 0 || k_value != std::floor(k_value)) {
    throw Error(ErrorCode::ParseError, "cost matrix header has invalid K");
  }
  const auto K = static_cast<Eigen::Index>(k_value);
  MatrixXd entries(K, K);
  for (Eigen::Index y = 0; y < K; ++y) {
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::Truncated, "cost matrix CSV has fewer than K rows");
    }
    const auto cells = split_csv_line(line);
    if (static_cast<Eigen::Index>(cells.size()) != K) {
      throw Error(ErrorCode::ParseError, "cost matrix row " + std::to_string(y + 1) + " has " +
                                             std::to_string(cells.size()) + " cells, expected " +
                                             std::to_string(K));
    }
    for (Eigen::Index k = 0; k < K; ++k) {
      entries(y, k) = parse_real(cells[static_cast<std::size_t>(k)], "cost matrix row " + std::to_string(y + 1));
    }
  }
  return CostMatrix(std::move(entries));
}

void save_cost_matrix(const std::filesystem::path& path, const CostMatrix& costs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  write_cost_matrix_csv(out, costs);
}

CostMatrix load_cost_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_cost_matrix_csv(in);
}

}  // namespace auxit
