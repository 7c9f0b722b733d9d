#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "auxit/error.hpp"
#include "auxit/nncore.hpp"
#include "auxit/types.hpp"

namespace auxit {

/// Batch-mean loss and its gradient with respect to the head output.
template <typename Scalar>
struct LossValue {
  Scalar value = Scalar(0);
  Matrix<Scalar> gradient;
};

/// One-sided regression term for a single (estimate, cost) pair. The true
/// class has cost 0 and is penalised only when overestimated; every other
/// class is penalised only when its cost is underestimated. This is the one
/// place the loss shape is defined.
struct OneSidedHinge {
  template <typename Scalar>
  static Scalar sign(bool is_true_class) {
    return is_true_class ? Scalar(1) : Scalar(-1);
  }

  template <typename Scalar>
  static Scalar value(Scalar estimate, Scalar cost, bool is_true_class) {
    const Scalar margin = sign<Scalar>(is_true_class) * (estimate - cost);
    return margin > Scalar(0) ? margin : Scalar(0);
  }

  template <typename Scalar>
  static Scalar derivative(Scalar estimate, Scalar cost, bool is_true_class) {
    const Scalar z = sign<Scalar>(is_true_class);
    return z * (estimate - cost) > Scalar(0) ? z : Scalar(0);
  }
};

namespace detail {

inline void check_labels(const Labels& labels, Eigen::Index rows, Eigen::Index classes) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw Error(ErrorCode::DimensionMismatch, "expected " + std::to_string(rows) +
                                                  " labels, got " + std::to_string(labels.size()));
  }
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] < 0 || labels[n] >= classes) {
      throw Error(ErrorCode::LabelOutOfRange,
                  "label " + std::to_string(labels[n]) + " at row " + std::to_string(n) +
                      " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

}  // namespace detail

/// Sum over classes of the one-sided hinge, averaged over the batch.
/// `costs` holds one cost vector per row and must be 0 at the row's label.
template <typename Scalar>
LossValue<Scalar> osr_loss(const Matrix<Scalar>& estimates, const Matrix<Scalar>& costs,
                           const Labels& labels) {
  if (estimates.rows() != costs.rows() || estimates.cols() != costs.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "estimates " + shape_of(estimates) +
                                                  " vs cost vectors " + shape_of(costs));
  }
  detail::check_labels(labels, estimates.rows(), estimates.cols());

  const Eigen::Index batch = estimates.rows();
  LossValue<Scalar> out;
  out.gradient = Matrix<Scalar>::Zero(batch, estimates.cols());
  if (batch == 0) return out;
  const Scalar inv_batch = Scalar(1) / static_cast<Scalar>(batch);

  Scalar total = 0;
  for (Eigen::Index n = 0; n < batch; ++n) {
    const int y = labels[static_cast<std::size_t>(n)];
    if (costs(n, y) != Scalar(0)) {
      throw Error(ErrorCode::InvalidArgument,
                  "cost vector at row " + std::to_string(n) + " is nonzero at its true class");
    }
    for (Eigen::Index k = 0; k < estimates.cols(); ++k) {
      const bool is_true = k == y;
      total += OneSidedHinge::value(estimates(n, k), costs(n, k), is_true);
      out.gradient(n, k) = OneSidedHinge::derivative(estimates(n, k), costs(n, k), is_true) * inv_batch;
    }
  }
  out.value = total * inv_batch;
  return out;
}

/// Binary cross-entropy between a sigmoid reconstruction and its [0,1] target,
/// summed over features and averaged over the batch.
template <typename Scalar>
LossValue<Scalar> cross_entropy_reconstruction(const Matrix<Scalar>& reconstruction,
                                               const Matrix<Scalar>& target) {
  if (reconstruction.rows() != target.rows() || reconstruction.cols() != target.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "reconstruction " + shape_of(reconstruction) +
                                                  " vs target " + shape_of(target));
  }
  if (!((reconstruction.array() > Scalar(0)).all() && (reconstruction.array() < Scalar(1)).all())) {
    throw Error(ErrorCode::InvalidArgument,
                "reconstruction entries must lie strictly inside (0, 1)");
  }
  if (!((target.array() >= Scalar(0)).all() && (target.array() <= Scalar(1)).all())) {
    throw Error(ErrorCode::InvalidArgument, "reconstruction targets must lie in [0, 1]");
  }
  LossValue<Scalar> out;
  const Eigen::Index batch = reconstruction.rows();
  if (batch == 0) {
    out.gradient = Matrix<Scalar>::Zero(0, reconstruction.cols());
    return out;
  }
  const Scalar inv_batch = Scalar(1) / static_cast<Scalar>(batch);
  const auto r = reconstruction.array();
  const auto t = target.array();
  out.value = -(t * r.log() + (Scalar(1) - t) * (Scalar(1) - r).log()).sum() * inv_batch;
  out.gradient = ((r - t) / (r * (Scalar(1) - r))).matrix() * inv_batch;
  return out;
}

/// Non-negative weights of the auxiliary losses (one per aux head) and the
/// reconstruction/cost balance used by cost-sensitive auto-encoders.
struct MixtureWeights {
  std::vector<double> alphas;
  double beta = 0.5;

  /// Every aux head weighted by the same alpha.
  static MixtureWeights uniform(double alpha, Eigen::Index num_aux_heads) {
    return {std::vector<double>(static_cast<std::size_t>(num_aux_heads), alpha), 0.5};
  }

  void validate() const {
    for (double a : alphas) {
      if (!(a >= 0.0) || !std::isfinite(a)) {
        throw Error(ErrorCode::InvalidArgument, "aux weights must be finite and non-negative");
      }
    }
    if (!(beta >= 0.0 && beta <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "beta must be in [0, 1]");
    }
  }
};

template <typename Scalar>
struct ObjectiveValue {
  std::vector<Scalar> aux_losses;  // unweighted
  Scalar main_loss = Scalar(0);
  Scalar total = Scalar(0);
  HeadGradients<Scalar> head_gradients;  // aux gradients already scaled by alpha
};

/// sum_i alpha_i * L_aux_i + L_main over every head in the trace.
template <typename Scalar>
ObjectiveValue<Scalar> auxit_objective(const ForwardTrace<Scalar>& trace,
                                       const Matrix<Scalar>& costs, const Labels& labels,
                                       const MixtureWeights& weights) {
  if (weights.alphas.size() != trace.aux_outputs.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "got " + std::to_string(weights.alphas.size()) + " aux weights for " +
                    std::to_string(trace.aux_outputs.size()) + " aux heads");
  }
  weights.validate();

  ObjectiveValue<Scalar> out;
  Scalar weighted_aux = 0;
  for (std::size_t i = 0; i < trace.aux_outputs.size(); ++i) {
    LossValue<Scalar> aux = osr_loss(trace.aux_outputs[i], costs, labels);
    const auto alpha = static_cast<Scalar>(weights.alphas[i]);
    out.aux_losses.push_back(aux.value);
    weighted_aux += alpha * aux.value;
    if (alpha == Scalar(0)) {
      out.head_gradients.aux.push_back(Matrix<Scalar>::Zero(aux.gradient.rows(), aux.gradient.cols()));
    } else {
      out.head_gradients.aux.push_back(alpha * aux.gradient);
    }
  }
  LossValue<Scalar> main = osr_loss(trace.main_output, costs, labels);
  out.main_loss = main.value;
  out.head_gradients.main = std::move(main.gradient);
  out.total = weighted_aux + out.main_loss;
  return out;
}

template <typename Scalar>
struct CsaeObjective {
  Scalar total = Scalar(0);
  Scalar reconstruction_weight = Scalar(0);
  Scalar cost_weight = Scalar(0);
};

/// (1 - beta) * L_CE + beta * L_OSR.
template <typename Scalar>
CsaeObjective<Scalar> csae_objective(const LossValue<Scalar>& reconstruction_loss,
                                     const LossValue<Scalar>& cost_loss, Scalar beta) {
  if (!(beta >= Scalar(0) && beta <= Scalar(1))) {
    throw Error(ErrorCode::InvalidArgument, "beta must be in [0, 1], got " + std::to_string(beta));
  }
  CsaeObjective<Scalar> out;
  out.reconstruction_weight = Scalar(1) - beta;
  out.cost_weight = beta;
  // Boundary weights select a single term exactly.
  if (beta == Scalar(0)) {
    out.total = reconstruction_loss.value;
  } else if (beta == Scalar(1)) {
    out.total = cost_loss.value;
  } else {
    out.total = out.reconstruction_weight * reconstruction_loss.value + beta * cost_loss.value;
  }
  return out;
}

}  // namespace auxit
