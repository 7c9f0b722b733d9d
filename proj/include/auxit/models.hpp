#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "auxit/costs.hpp"
#include "auxit/data.hpp"
#include "auxit/losses.hpp"
#include "auxit/nncore.hpp"

namespace auxit {

using Net = AuxNet<double>;

struct TrainConfig {
  /// Per-head aux weights; when empty, `alpha` is applied to every aux head.
  std::vector<double> alphas;
  double alpha = 0.0;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  int epochs = 30;
  std::uint64_t seed = 1;
  double beta = 0.5;        // CSDNN only
  int pretrain_epochs = 15; // CSDNN only, per stage

  MixtureWeights weights_for(Eigen::Index num_aux_heads) const;
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

struct RunMetrics {
  std::string model;
  NetworkSpec spec;
  TrainConfig config;
  std::vector<std::vector<double>> aux_losses;  // [epoch][head], unweighted
  std::vector<double> main_losses;              // [epoch]
  std::vector<double> total_losses;             // [epoch]
  std::vector<std::vector<double>> pretrain_losses;  // [stage][epoch], CSDNN only
  std::optional<EvalReport> evaluation;

  std::size_t epochs() const { return main_losses.size(); }
};

/// Trunk, a K-neuron regression head on every hidden layer but the last, and a
/// K-neuron regression output head.
Net build_auxdnn(NetworkSpec spec, std::uint64_t seed);

/// Same trunk and output head draw as build_auxdnn, without aux heads.
Net build_naivednn(NetworkSpec spec, std::uint64_t seed);

/// Shuffled mini-batch SGD on the weighted one-sided objective.
RunMetrics train(Net& net, const CostSensitiveDataset& train_set, const TrainConfig& config);

/// Argmin over the output head; ties go to the lowest class index.
Labels predict(const Net& net, const MatrixXd& inputs);
Labels argmin_rows(const MatrixXd& scores);

// ---------------------------------------------------------------------------
// Cost-sensitive auto-encoder pretraining (CSDNN baseline)
// ---------------------------------------------------------------------------

/// One-hidden-layer auto-encoder with an extra K-neuron cost head.
struct CsaeStage {
  DenseLayer<double> encoder;    // in -> width, sigmoid
  DenseLayer<double> decoder;    // width -> in, sigmoid
  DenseLayer<double> cost_head;  // width -> K, identity

  std::vector<DenseLayer<double>*> layers() { return {&encoder, &decoder, &cost_head}; }
  std::vector<const DenseLayer<double>*> layers() const { return {&encoder, &decoder, &cost_head}; }
};

struct CsaeEvaluation {
  double reconstruction_loss = 0.0;
  double cost_loss = 0.0;
  double total = 0.0;
  GradientSet<double> gradients;  // encoder, decoder, cost_head
};

/// (1 - beta) * cross-entropy(reconstruction, inputs) + beta * OSR(cost head).
CsaeEvaluation evaluate_csae_stage(const CsaeStage& stage, const MatrixXd& inputs,
                                   const MatrixXd& costs, const Labels& labels, double beta);

struct PretrainResult {
  std::vector<DenseLayer<double>> trunk;
  std::vector<std::vector<double>> stage_losses;  // [stage][epoch]
  std::vector<Eigen::Index> stage_input_dims;
};

/// Greedy layer-wise CSAE pretraining; encoder i initialises trunk layer i.
PretrainResult csae_pretrain(const NetworkSpec& spec, const CostSensitiveDataset& train_set,
                             const TrainConfig& config);

struct CsdnnResult {
  Net net;
  RunMetrics metrics;
};

/// CSAE pretraining followed by fine-tuning on the output-head loss only.
CsdnnResult train_csdnn(NetworkSpec spec, const CostSensitiveDataset& train_set,
                        const TrainConfig& config);

// ---------------------------------------------------------------------------
// Checkpoints: tensor archive of every layer plus a JSON sidecar (<path>.json)
// ---------------------------------------------------------------------------

struct Checkpoint {
  Net net;
  TrainConfig config;
  std::string model;
  std::optional<Scaling> scaling;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace auxit
