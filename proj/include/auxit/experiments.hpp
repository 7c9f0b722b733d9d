#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "auxit/costs.hpp"
#include "auxit/data.hpp"
#include "auxit/models.hpp"

namespace auxit {

/// Where the data for an experiment comes from and how it is prepared.
struct DataSource {
  enum class Kind { Synthetic, Idx, Csv };
  Kind kind = Kind::Synthetic;

  std::filesystem::path train_images, train_labels, test_images, test_labels;  // Idx
  std::filesystem::path train_csv, test_csv;                                   // Csv
  std::size_t label_column = 0;
  std::size_t train_limit = 0;  // 0 keeps everything
  std::size_t test_limit = 0;

  // Synthetic
  Eigen::Index synth_classes = 4;
  Eigen::Index synth_dim = 10;
  std::vector<std::size_t> synth_counts = {250, 250, 250, 250};
  double synth_spread = 1.0;
  std::uint64_t data_seed = 7;

  bool imbalanced = false;
  double class_fraction = 0.4;
  double removal_fraction = 0.7;
};

struct PreparedData {
  CostSensitiveDataset train;
  CostSensitiveDataset test;
  CostMatrix costs;
};

/// Load, scale with training statistics, optionally build the imbalanced
/// variant, and attach randomized-proportional costs drawn from the training
/// split with `cost_seed`.
PreparedData prepare_data(const DataSource& source, std::uint64_t cost_seed);

/// Loads and scales both splits without attaching costs.
DatasetPair load_source(const DataSource& source);

struct ExperimentSettings {
  Eigen::Index width = 64;
  TrainConfig train;  // alpha and seed are overridden per grid point
  unsigned workers = 1;
};

/// Named desk-scale presets: "synthetic" and "mnist".
struct Preset {
  DataSource source;
  ExperimentSettings settings;
};
Preset preset(const std::string& name);

struct RunRecord {
  std::string model;
  Eigen::Index depth = 0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  RunMetrics metrics;
};

struct SweepPoint {
  std::string model;
  Eigen::Index depth = 0;
  double alpha = 0.0;
  double mean_cost = 0.0;
  double stddev_cost = 0.0;  // sample standard deviation, 0 for one seed
  std::size_t seeds = 0;
};

struct SweepResult {
  std::vector<SweepPoint> grid;
  std::vector<RunRecord> runs;
};

/// Trains and evaluates one model on prepared data.
/// `model` is one of "auxdnn", "naivednn", "csdnn".
RunRecord run_single(const std::string& model, const PreparedData& data, Eigen::Index depth,
                     double alpha, std::uint64_t seed, const ExperimentSettings& settings,
                     Net* trained = nullptr);

/// AuxDNN over depth x alpha x seed with uniform alpha; alpha = 0 is the
/// no-aux reference.
SweepResult run_alpha_sweep(const DataSource& source, const std::vector<Eigen::Index>& depths,
                            const std::vector<double>& alphas,
                            const std::vector<std::uint64_t>& seeds,
                            const ExperimentSettings& settings);

/// AuxDNN(alpha = 0.2, ReLU), NaiveDNN(ReLU) and CSDNN(sigmoid) per depth and seed.
SweepResult run_comparison(const DataSource& source, const std::vector<Eigen::Index>& depths,
                           const std::vector<std::uint64_t>& seeds,
                           const ExperimentSettings& settings);

constexpr double kComparisonAlpha = 0.2;

/// Mean and sample standard deviation of average test cost per grid point.
std::vector<SweepPoint> aggregate(const std::vector<RunRecord>& runs);

void write_runs_csv(std::ostream& out, const std::vector<RunRecord>& runs);
void write_summary_csv(std::ostream& out, const std::vector<SweepPoint>& grid);

/// Writes runs.csv, summary.csv, per-run curves and manifest.json into `dir`.
void write_sweep_outputs(const std::filesystem::path& dir, const SweepResult& result,
                         const std::string& verb, const std::string& flags_json);

/// Per-epoch learning curves: epoch, loss_aux_1..loss_aux_{H-1}, loss_main,
/// loss_total. Returns false (and writes only main/total) when the run has no
/// aux heads.
bool write_learning_curves(std::ostream& out, const RunMetrics& metrics);
bool emit_learning_curves(const RunMetrics& metrics, const std::filesystem::path& path);

enum class CostGenerator { Proportional, Tree };

struct GeneratedCosts {
  CostMatrix costs;
  CostSummary summary;
};

/// Writes the cost matrix CSV to `out_path` and returns it with its
/// off-diagonal statistics. `input` is a tree CSV for Tree; Proportional
/// uses the training split of `source`.
GeneratedCosts gen_costs(CostGenerator generator, const DataSource& source,
                         const std::filesystem::path& tree_path, std::uint64_t seed,
                         const std::filesystem::path& out_path);

std::string library_version();

}  // namespace auxit
