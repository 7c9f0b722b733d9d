#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "auxit/error.hpp"
#include "auxit/types.hpp"

namespace auxit {

enum class Activation { Sigmoid, ReLU, Identity };

std::string to_string(Activation activation);
Activation activation_from_string(const std::string& name);

// ---------------------------------------------------------------------------
// Element-wise activations
// ---------------------------------------------------------------------------

template <typename Derived>
Matrix<typename Derived::Scalar> activate(const Eigen::MatrixBase<Derived>& z,
                                          Activation activation) {
  using Scalar = typename Derived::Scalar;
  switch (activation) {
    case Activation::Sigmoid:
      return z.unaryExpr([](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); });
    case Activation::ReLU:
      return z.cwiseMax(Scalar(0));
    case Activation::Identity:
      break;
  }
  return z;
}

/// Derivative of the activation, given both the pre-activation and its image.
/// ReLU uses 0 as the subgradient at the kink.
template <typename DerivedZ, typename DerivedA>
Matrix<typename DerivedZ::Scalar> activation_derivative(const Eigen::MatrixBase<DerivedZ>& z,
                                                        const Eigen::MatrixBase<DerivedA>& a,
                                                        Activation activation) {
  using Scalar = typename DerivedZ::Scalar;
  switch (activation) {
    case Activation::Sigmoid:
      return (a.array() * (Scalar(1) - a.array())).matrix();
    case Activation::ReLU:
      return (z.array() > Scalar(0)).template cast<Scalar>().matrix();
    case Activation::Identity:
      break;
  }
  return Matrix<Scalar>::Ones(z.rows(), z.cols());
}

// ---------------------------------------------------------------------------
// Dense layer
// ---------------------------------------------------------------------------

template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weights;  // out x in
  Vector<Scalar> bias;     // out
  Activation activation = Activation::Identity;

  Eigen::Index inputs() const { return weights.cols(); }
  Eigen::Index outputs() const { return weights.rows(); }
  Eigen::Index parameter_count() const { return weights.size() + bias.size(); }

  bool operator==(const DenseLayer& other) const {
    return activation == other.activation && weights == other.weights && bias == other.bias;
  }
};

template <typename Scalar>
DenseLayer<Scalar> make_dense(Eigen::Index inputs, Eigen::Index outputs, Activation activation) {
  return {Matrix<Scalar>::Zero(outputs, inputs), Vector<Scalar>::Zero(outputs), activation};
}

template <typename Scalar, typename Derived>
Matrix<Scalar> dense_preactivation(const DenseLayer<Scalar>& layer,
                                   const Eigen::MatrixBase<Derived>& input) {
  if (input.cols() != layer.weights.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "dense layer expects input with " + std::to_string(layer.weights.cols()) +
                    " columns (weights " + shape_of(layer.weights) + "), got input " +
                    shape_of(input));
  }
  Matrix<Scalar> z = input * layer.weights.transpose();
  z.rowwise() += layer.bias.transpose();
  return z;
}

/// activation(input * W^T + b), one row per example.
template <typename Scalar, typename Derived>
Matrix<Scalar> dense_forward(const DenseLayer<Scalar>& layer,
                             const Eigen::MatrixBase<Derived>& input) {
  return activate(dense_preactivation(layer, input), layer.activation);
}

// ---------------------------------------------------------------------------
// Network description and parameters
// ---------------------------------------------------------------------------

struct NetworkSpec {
  Eigen::Index input_dim = 0;
  std::vector<Eigen::Index> hidden_widths;
  Activation activation = Activation::ReLU;
  Eigen::Index num_classes = 0;
  bool aux_enabled = true;

  Eigen::Index depth() const { return static_cast<Eigen::Index>(hidden_widths.size()); }
  Eigen::Index num_aux_heads() const { return aux_enabled && depth() > 0 ? depth() - 1 : 0; }

  /// Closed-form parameter count of the network this spec describes.
  Eigen::Index parameter_count() const;

  void validate() const;

  static NetworkSpec uniform(Eigen::Index input_dim, Eigen::Index depth, Eigen::Index width,
                             Eigen::Index num_classes, Activation activation, bool aux_enabled);

  bool operator==(const NetworkSpec&) const = default;
};

/// Fully-connected trunk with a K-neuron regression head on the last hidden
/// layer and, when enabled, one K-neuron regression head on every other hidden
/// layer. aux_heads[i] reads from trunk[i].
template <typename Scalar>
struct AuxNet {
  NetworkSpec spec;
  std::vector<DenseLayer<Scalar>> trunk;
  DenseLayer<Scalar> main_head;
  std::vector<DenseLayer<Scalar>> aux_heads;

  Eigen::Index depth() const { return static_cast<Eigen::Index>(trunk.size()); }
  Eigen::Index num_aux_heads() const { return static_cast<Eigen::Index>(aux_heads.size()); }

  // Canonical parameter order: trunk layers, main head, aux heads.
  std::vector<DenseLayer<Scalar>*> layers() {
    std::vector<DenseLayer<Scalar>*> out;
    for (auto& l : trunk) out.push_back(&l);
    out.push_back(&main_head);
    for (auto& l : aux_heads) out.push_back(&l);
    return out;
  }
  std::vector<const DenseLayer<Scalar>*> layers() const {
    std::vector<const DenseLayer<Scalar>*> out;
    for (const auto& l : trunk) out.push_back(&l);
    out.push_back(&main_head);
    for (const auto& l : aux_heads) out.push_back(&l);
    return out;
  }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto* l : layers()) n += l->parameter_count();
    return n;
  }

  bool operator==(const AuxNet& other) const = default;
};

template <typename Scalar>
struct LayerGradient {
  Matrix<Scalar> weights;
  Vector<Scalar> bias;
};

/// One gradient per parameter tensor, in the canonical AuxNet::layers() order.
template <typename Scalar>
struct GradientSet {
  std::vector<LayerGradient<Scalar>> layers;

  template <typename LayerRange>
  static GradientSet zeros_like(const LayerRange& params) {
    GradientSet g;
    for (const auto* l : params) {
      g.layers.push_back({Matrix<Scalar>::Zero(l->weights.rows(), l->weights.cols()),
                          Vector<Scalar>::Zero(l->bias.size())});
    }
    return g;
  }

  static GradientSet zeros_like(const AuxNet<Scalar>& net) { return zeros_like(net.layers()); }

  bool all_finite() const {
    for (const auto& l : layers) {
      if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
    }
    return true;
  }

  bool is_zero() const {
    for (const auto& l : layers) {
      if ((l.weights.array() != Scalar(0)).any() || (l.bias.array() != Scalar(0)).any()) {
        return false;
      }
    }
    return true;
  }
};

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

template <typename Scalar>
Scalar glorot_bound(Eigen::Index fan_in, Eigen::Index fan_out) {
  return std::sqrt(Scalar(6) / static_cast<Scalar>(fan_in + fan_out));
}

template <typename Scalar>
void glorot_fill(DenseLayer<Scalar>& layer, std::mt19937_64& rng) {
  const Scalar bound = glorot_bound<Scalar>(layer.inputs(), layer.outputs());
  std::uniform_real_distribution<Scalar> dist(-bound, bound);
  for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = dist(rng);
  layer.bias.setZero();
}

/// Glorot-uniform weights, zero biases. Trunk and main head are drawn before
/// any aux head, so a net with and without aux heads shares trunk and main
/// head bit-for-bit under the same seed.
template <typename Scalar>
AuxNet<Scalar> init_params(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  AuxNet<Scalar> net;
  net.spec = spec;
  std::mt19937_64 rng(seed);

  Eigen::Index fan_in = spec.input_dim;
  for (Eigen::Index width : spec.hidden_widths) {
    net.trunk.push_back(make_dense<Scalar>(fan_in, width, spec.activation));
    glorot_fill(net.trunk.back(), rng);
    fan_in = width;
  }
  net.main_head = make_dense<Scalar>(fan_in, spec.num_classes, Activation::Identity);
  glorot_fill(net.main_head, rng);

  for (Eigen::Index i = 0; i < spec.num_aux_heads(); ++i) {
    net.aux_heads.push_back(
        make_dense<Scalar>(spec.hidden_widths[i], spec.num_classes, Activation::Identity));
    glorot_fill(net.aux_heads.back(), rng);
  }
  return net;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

template <typename Scalar>
struct ForwardTrace {
  Matrix<Scalar> input;
  std::vector<Matrix<Scalar>> pre_activations;   // one per trunk layer
  std::vector<Matrix<Scalar>> post_activations;  // one per trunk layer
  std::vector<Matrix<Scalar>> aux_outputs;       // one per aux head
  Matrix<Scalar> main_output;

  Eigen::Index batch_size() const { return input.rows(); }
};

template <typename Scalar>
ForwardTrace<Scalar> forward(const AuxNet<Scalar>& net, const Matrix<Scalar>& batch) {
  if (batch.cols() != net.spec.input_dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "network expects " + std::to_string(net.spec.input_dim) +
                    " input features, got batch " + shape_of(batch));
  }
  ForwardTrace<Scalar> trace;
  trace.input = batch;
  const Matrix<Scalar>* current = &trace.input;
  for (std::size_t l = 0; l < net.trunk.size(); ++l) {
    trace.pre_activations.push_back(dense_preactivation(net.trunk[l], *current));
    trace.post_activations.push_back(
        activate(trace.pre_activations.back(), net.trunk[l].activation));
    current = &trace.post_activations.back();
    if (l < net.aux_heads.size()) {
      trace.aux_outputs.push_back(dense_forward(net.aux_heads[l], *current));
    }
  }
  trace.main_output = dense_forward(net.main_head, *current);
  return trace;
}

/// Gradient of the objective with respect to each head's output.
template <typename Scalar>
struct HeadGradients {
  std::vector<Matrix<Scalar>> aux;
  Matrix<Scalar> main;
};

/// Reverse-mode pass. Head gradients are taken with respect to the head
/// outputs (all heads are identity-activated). An aux head whose gradient is
/// exactly zero is skipped, so a zero-weighted head leaves the trunk gradient
/// bit-identical to a net without that head.
template <typename Scalar>
GradientSet<Scalar> backward(const AuxNet<Scalar>& net, const ForwardTrace<Scalar>& trace,
                             const HeadGradients<Scalar>& head_grads) {
  const auto depth = net.trunk.size();
  if (trace.post_activations.size() != depth || trace.aux_outputs.size() != net.aux_heads.size()) {
    throw Error(ErrorCode::DimensionMismatch, "forward trace does not belong to this network");
  }
  if (head_grads.aux.size() != net.aux_heads.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "missing head gradient: expected " + std::to_string(net.aux_heads.size()) +
                    " aux gradients, got " + std::to_string(head_grads.aux.size()));
  }
  auto check_shape = [](const Matrix<Scalar>& g, const Matrix<Scalar>& out, const char* what) {
    if (g.rows() != out.rows() || g.cols() != out.cols()) {
      throw Error(ErrorCode::DimensionMismatch, std::string(what) + " gradient " + shape_of(g) +
                                                    " does not match head output " + shape_of(out));
    }
  };
  check_shape(head_grads.main, trace.main_output, "main head");
  for (std::size_t i = 0; i < head_grads.aux.size(); ++i) {
    check_shape(head_grads.aux[i], trace.aux_outputs[i], "aux head");
  }

  GradientSet<Scalar> grads = GradientSet<Scalar>::zeros_like(net);
  auto& main_grad = grads.layers[depth];
  main_grad.weights.noalias() = head_grads.main.transpose() * trace.post_activations.back();
  main_grad.bias = head_grads.main.colwise().sum().transpose();

  Matrix<Scalar> d_post = head_grads.main * net.main_head.weights;
  for (std::size_t l = depth; l-- > 0;) {
    if (l < net.aux_heads.size()) {
      const Matrix<Scalar>& g = head_grads.aux[l];
      if ((g.array() != Scalar(0)).any()) {
        auto& aux_grad = grads.layers[depth + 1 + l];
        aux_grad.weights.noalias() = g.transpose() * trace.post_activations[l];
        aux_grad.bias = g.colwise().sum().transpose();
        d_post.noalias() += g * net.aux_heads[l].weights;
      }
    }
    Matrix<Scalar> d_pre = d_post.cwiseProduct(activation_derivative(
        trace.pre_activations[l], trace.post_activations[l], net.trunk[l].activation));
    const Matrix<Scalar>& layer_input = l == 0 ? trace.input : trace.post_activations[l - 1];
    grads.layers[l].weights.noalias() = d_pre.transpose() * layer_input;
    grads.layers[l].bias = d_pre.colwise().sum().transpose();
    if (l > 0) d_post = d_pre * net.trunk[l].weights;
  }
  return grads;
}

// ---------------------------------------------------------------------------
// SGD with momentum
// ---------------------------------------------------------------------------

/// velocity <- momentum * velocity - lr * grads; params <- params + velocity.
template <typename Scalar>
void sgd_step(std::span<DenseLayer<Scalar>* const> params, const GradientSet<Scalar>& grads,
              Scalar learning_rate, Scalar momentum, GradientSet<Scalar>& velocity) {
  if (!(learning_rate > Scalar(0))) {
    throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  }
  if (!(momentum >= Scalar(0) && momentum < Scalar(1))) {
    throw Error(ErrorCode::InvalidArgument, "momentum must be in [0, 1)");
  }
  if (grads.layers.size() != params.size() || velocity.layers.size() != params.size()) {
    throw Error(ErrorCode::DimensionMismatch, "gradient set does not match parameter set");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    DenseLayer<Scalar>& p = *params[i];
    const auto& g = grads.layers[i];
    auto& v = velocity.layers[i];
    if (g.weights.rows() != p.weights.rows() || g.weights.cols() != p.weights.cols() ||
        g.bias.size() != p.bias.size() || v.weights.rows() != p.weights.rows() ||
        v.weights.cols() != p.weights.cols() || v.bias.size() != p.bias.size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "gradient for layer " + std::to_string(i) + " has shape " +
                      shape_of(g.weights) + ", parameter has " + shape_of(p.weights));
    }
    v.weights = momentum * v.weights - learning_rate * g.weights;
    v.bias = momentum * v.bias - learning_rate * g.bias;
    p.weights += v.weights;
    p.bias += v.bias;
  }
}

template <typename Scalar>
void sgd_step(AuxNet<Scalar>& net, const GradientSet<Scalar>& grads, Scalar learning_rate,
              Scalar momentum, GradientSet<Scalar>& velocity) {
  const auto params = net.layers();
  sgd_step(std::span<DenseLayer<Scalar>* const>(params), grads, learning_rate, momentum, velocity);
}

}  // namespace auxit
