#include "auxit/models.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "auxit/error.hpp"
#include "auxit/io.hpp"
#include "auxit/json_io.hpp"

namespace auxit {

namespace {

constexpr std::string_view kCheckpointMagic = "AXCK";
constexpr std::uint64_t kCsaeHeadStream = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kCsaeShuffleStream = 0xD1B54A32D192ED03ULL;

struct Batch {
  MatrixXd inputs;
  MatrixXd costs;
  Labels labels;
};

Batch gather(const MatrixXd& inputs, const CostSensitiveDataset& data,
             const std::vector<Eigen::Index>& order, std::size_t begin, std::size_t end) {
  Batch b;
  const auto rows = static_cast<Eigen::Index>(end - begin);
  b.inputs.resize(rows, inputs.cols());
  b.costs.resize(rows, data.costs.cols());
  b.labels.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    const Eigen::Index src = order[i];
    const auto dst = static_cast<Eigen::Index>(i - begin);
    b.inputs.row(dst) = inputs.row(src);
    b.costs.row(dst) = data.costs.row(src);
    b.labels.push_back(data.data.labels[static_cast<std::size_t>(src)]);
  }
  return b;
}

std::vector<Eigen::Index> identity_order(Eigen::Index n) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  return order;
}

void check_finite(double value, int epoch, std::size_t batch, const char* what) {
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::NonFinite, std::string("non-finite ") + what + " at epoch " +
                                          std::to_string(epoch + 1) + ", batch " +
                                          std::to_string(batch + 1));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

MixtureWeights TrainConfig::weights_for(Eigen::Index num_aux_heads) const {
  MixtureWeights w;
  if (alphas.empty()) {
    w = MixtureWeights::uniform(alpha, num_aux_heads);
  } else {
    if (static_cast<Eigen::Index>(alphas.size()) != num_aux_heads) {
      throw Error(ErrorCode::DimensionMismatch,
                  std::to_string(alphas.size()) + " aux weights configured for " +
                      std::to_string(num_aux_heads) + " aux heads");
    }
    w.alphas = alphas;
  }
  w.beta = beta;
  w.validate();
  return w;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "momentum must be in [0, 1)");
  }
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch size must be >= 1");
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (pretrain_epochs < 0) throw Error(ErrorCode::InvalidArgument, "pretrain epochs must be >= 0");
  if (!(alpha >= 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha must be non-negative");
  for (double a : alphas) {
    if (!(a >= 0.0)) throw Error(ErrorCode::InvalidArgument, "alphas must be non-negative");
  }
  if (!(beta >= 0.0 && beta <= 1.0)) throw Error(ErrorCode::InvalidArgument, "beta must be in [0, 1]");
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

Net build_auxdnn(NetworkSpec spec, std::uint64_t seed) {
  if (!spec.aux_enabled) {
    throw Error(ErrorCode::InvalidArgument, "build_auxdnn requires aux heads to be enabled");
  }
  return init_params<double>(spec, seed);
}

Net build_naivednn(NetworkSpec spec, std::uint64_t seed) {
  spec.aux_enabled = false;
  return init_params<double>(spec, seed);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

RunMetrics train(Net& net, const CostSensitiveDataset& train_set, const TrainConfig& config) {
  config.validate();
  train_set.validate();
  if (train_set.data.dim() != net.spec.input_dim || train_set.costs.cols() != net.spec.num_classes) {
    throw Error(ErrorCode::DimensionMismatch,
                "network is " + std::to_string(net.spec.input_dim) + " -> " +
                    std::to_string(net.spec.num_classes) + ", data is " +
                    std::to_string(train_set.data.dim()) + " -> " +
                    std::to_string(train_set.costs.cols()));
  }
  if (train_set.size() == 0) throw Error(ErrorCode::InvalidArgument, "training set is empty");

  const MixtureWeights weights = config.weights_for(net.num_aux_heads());
  RunMetrics metrics;
  metrics.model = net.num_aux_heads() > 0 ? "auxdnn" : "naivednn";
  metrics.spec = net.spec;
  metrics.config = config;

  std::mt19937_64 rng(config.seed);
  auto order = identity_order(train_set.size());
  GradientSet<double> velocity = GradientSet<double>::zeros_like(net);
  const auto N = order.size();
  const auto n_aux = static_cast<std::size_t>(net.num_aux_heads());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> aux_sum(n_aux, 0.0);
    double main_sum = 0.0;
    double total_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < N; begin += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(N, begin + config.batch_size);
      const Batch batch = gather(train_set.data.inputs, train_set, order, begin, end);
      const auto trace = forward(net, batch.inputs);
      // The hinge maps NaN estimates to zero loss, so check the heads directly.
      double outputs = trace.main_output.sum();
      for (const auto& a : trace.aux_outputs) outputs += a.sum();
      check_finite(outputs, epoch, batch_index, "network output");
      const auto objective = auxit_objective(trace, batch.costs, batch.labels, weights);
      check_finite(objective.total, epoch, batch_index, "loss");

      const auto grads = backward(net, trace, objective.head_gradients);
      sgd_step(net, grads, config.learning_rate, config.momentum, velocity);

      const auto rows = static_cast<double>(end - begin);
      for (std::size_t i = 0; i < n_aux; ++i) aux_sum[i] += rows * objective.aux_losses[i];
      main_sum += rows * objective.main_loss;
      total_sum += rows * objective.total;
    }
    const auto n = static_cast<double>(N);
    for (double& a : aux_sum) a /= n;
    metrics.aux_losses.push_back(std::move(aux_sum));
    metrics.main_losses.push_back(main_sum / n);
    metrics.total_losses.push_back(total_sum / n);
  }
  return metrics;
}

Labels argmin_rows(const MatrixXd& scores) {
  Labels out;
  out.reserve(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index n = 0; n < scores.rows(); ++n) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.cols(); ++k) {
      if (scores(n, k) < scores(n, best)) best = k;
    }
    out.push_back(static_cast<int>(best));
  }
  return out;
}

Labels predict(const Net& net, const MatrixXd& inputs) {
  if (inputs.cols() != net.spec.input_dim) {
    throw Error(ErrorCode::DimensionMismatch, "network expects " +
                                                  std::to_string(net.spec.input_dim) +
                                                  " features, got " + shape_of(inputs));
  }
  MatrixXd h = inputs;
  for (const auto& layer : net.trunk) h = dense_forward(layer, h);
  return argmin_rows(dense_forward(net.main_head, h));
}

// ---------------------------------------------------------------------------
// CSAE
// ---------------------------------------------------------------------------

CsaeEvaluation evaluate_csae_stage(const CsaeStage& stage, const MatrixXd& inputs,
                                   const MatrixXd& costs, const Labels& labels, double beta) {
  const MatrixXd hidden_pre = dense_preactivation(stage.encoder, inputs);
  const MatrixXd hidden = activate(hidden_pre, stage.encoder.activation);
  const MatrixXd recon_pre = dense_preactivation(stage.decoder, hidden);
  const MatrixXd recon = activate(recon_pre, stage.decoder.activation);
  const MatrixXd estimates = dense_forward(stage.cost_head, hidden);

  const auto ce = cross_entropy_reconstruction(recon, inputs);
  const auto osr = osr_loss(estimates, costs, labels);
  const auto mix = csae_objective(ce, osr, beta);

  CsaeEvaluation out;
  out.reconstruction_loss = ce.value;
  out.cost_loss = osr.value;
  out.total = mix.total;
  out.gradients = GradientSet<double>::zeros_like(stage.layers());

  const MatrixXd d_recon_pre =
      mix.reconstruction_weight *
      ce.gradient.cwiseProduct(activation_derivative(recon_pre, recon, stage.decoder.activation));
  const MatrixXd d_estimates = mix.cost_weight * osr.gradient;

  auto& g_dec = out.gradients.layers[1];
  g_dec.weights.noalias() = d_recon_pre.transpose() * hidden;
  g_dec.bias = d_recon_pre.colwise().sum().transpose();
  auto& g_cost = out.gradients.layers[2];
  g_cost.weights.noalias() = d_estimates.transpose() * hidden;
  g_cost.bias = d_estimates.colwise().sum().transpose();

  MatrixXd d_hidden = d_recon_pre * stage.decoder.weights;
  d_hidden.noalias() += d_estimates * stage.cost_head.weights;
  const MatrixXd d_hidden_pre =
      d_hidden.cwiseProduct(activation_derivative(hidden_pre, hidden, stage.encoder.activation));
  auto& g_enc = out.gradients.layers[0];
  g_enc.weights.noalias() = d_hidden_pre.transpose() * inputs;
  g_enc.bias = d_hidden_pre.colwise().sum().transpose();
  return out;
}

PretrainResult csae_pretrain(const NetworkSpec& spec, const CostSensitiveDataset& train_set,
                             const TrainConfig& config) {
  config.validate();
  train_set.validate();
  if (spec.activation != Activation::Sigmoid) {
    throw Error(ErrorCode::InvalidArgument, "CSAE pretraining requires sigmoid activations");
  }
  if (train_set.data.dim() != spec.input_dim || train_set.costs.cols() != spec.num_classes) {
    throw Error(ErrorCode::DimensionMismatch, "training data does not match the network spec");
  }
  const Net base = build_naivednn(spec, config.seed);
  std::mt19937_64 head_rng(config.seed ^ kCsaeHeadStream);

  PretrainResult result;
  MatrixXd representation = train_set.data.inputs;
  const auto N = static_cast<std::size_t>(train_set.size());
  for (std::size_t s = 0; s < base.trunk.size(); ++s) {
    const Eigen::Index in = representation.cols();
    const Eigen::Index width = base.trunk[s].outputs();
    CsaeStage stage{base.trunk[s], make_dense<double>(width, in, Activation::Sigmoid),
                    make_dense<double>(width, spec.num_classes, Activation::Identity)};
    glorot_fill(stage.decoder, head_rng);
    glorot_fill(stage.cost_head, head_rng);

    const auto params = stage.layers();
    GradientSet<double> velocity = GradientSet<double>::zeros_like(params);
    std::mt19937_64 rng(config.seed ^ (kCsaeShuffleStream + s));
    auto order = identity_order(train_set.size());
    std::vector<double> losses;
    for (int epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      double sum = 0.0;
      std::size_t batch_index = 0;
      for (std::size_t begin = 0; begin < N; begin += config.batch_size, ++batch_index) {
        const std::size_t end = std::min(N, begin + config.batch_size);
        const Batch batch = gather(representation, train_set, order, begin, end);
        const auto eval = evaluate_csae_stage(stage, batch.inputs, batch.costs, batch.labels, config.beta);
        check_finite(eval.total, epoch, batch_index, "CSAE loss");
        sgd_step(std::span<DenseLayer<double>* const>(params), eval.gradients,
                 config.learning_rate, config.momentum, velocity);
        sum += static_cast<double>(end - begin) * eval.total;
      }
      losses.push_back(sum / static_cast<double>(N));
    }
    result.stage_input_dims.push_back(in);
    result.stage_losses.push_back(std::move(losses));
    representation = dense_forward(stage.encoder, representation);
    result.trunk.push_back(std::move(stage.encoder));
  }
  return result;
}

CsdnnResult train_csdnn(NetworkSpec spec, const CostSensitiveDataset& train_set,
                        const TrainConfig& config) {
  spec.aux_enabled = false;
  PretrainResult pretrained = csae_pretrain(spec, train_set, config);
  CsdnnResult out{build_naivednn(spec, config.seed), {}};
  out.net.trunk = std::move(pretrained.trunk);
  out.metrics = train(out.net, train_set, config);
  out.metrics.model = "csdnn";
  out.metrics.pretrain_losses = std::move(pretrained.stage_losses);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::vector<MatrixXd> tensors;
  for (const auto* layer : checkpoint.net.layers()) {
    tensors.push_back(layer->weights);
    tensors.push_back(layer->bias.transpose());
  }
  write_archive(path, kCheckpointMagic, tensors);

  nlohmann::json sidecar = {{"format", "auxit-checkpoint"},
                            {"version", kArchiveVersion},
                            {"model", checkpoint.model},
                            {"spec", to_json(checkpoint.net.spec)},
                            {"config", to_json(checkpoint.config)},
                            {"scaling", checkpoint.scaling ? to_json(*checkpoint.scaling) : nlohmann::json()}};
  write_text_file(path.string() + ".json", sidecar.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path.string() + ".json");
  if (!in) throw Error(ErrorCode::Io, "cannot open checkpoint sidecar " + path.string() + ".json");
  nlohmann::json sidecar;
  try {
    in >> sidecar;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint sidecar: ") + e.what());
  }
  Checkpoint cp;
  cp.model = sidecar.value("model", "");
  cp.config = config_from_json(sidecar.at("config"));
  if (!sidecar["scaling"].is_null()) cp.scaling = scaling_from_json(sidecar["scaling"]);
  cp.net = init_params<double>(spec_from_json(sidecar.at("spec")), 0);

  const auto tensors = read_archive(path, kCheckpointMagic);
  auto layers = cp.net.layers();
  if (tensors.size() != 2 * layers.size()) {
    throw Error(ErrorCode::CountMismatch, "checkpoint holds " + std::to_string(tensors.size()) +
                                              " tensors, spec needs " +
                                              std::to_string(2 * layers.size()));
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const MatrixXd& w = tensors[2 * i];
    const MatrixXd& b = tensors[2 * i + 1];
    if (w.rows() != layers[i]->weights.rows() || w.cols() != layers[i]->weights.cols() ||
        b.rows() != 1 || b.cols() != layers[i]->bias.size()) {
      throw Error(ErrorCode::DimensionMismatch, "checkpoint layer " + std::to_string(i) +
                                                    " has shape " + shape_of(w) + ", expected " +
                                                    shape_of(layers[i]->weights));
    }
    layers[i]->weights = w;
    layers[i]->bias = b.transpose();
  }
  return cp;
}

}  // namespace auxit
