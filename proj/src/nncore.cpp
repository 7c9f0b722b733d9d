#include "auxit/nncore.hpp"

namespace auxit {

std::string to_string(Activation activation) {
  switch (activation) {
    case Activation::Sigmoid: return "sigmoid";
    case Activation::ReLU: return "relu";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "relu") return Activation::ReLU;
  if (name == "identity") return Activation::Identity;
  throw Error(ErrorCode::InvalidArgument, "unknown activation '" + name + "'");
}

Eigen::Index NetworkSpec::parameter_count() const {
  Eigen::Index n = 0;
  Eigen::Index fan_in = input_dim;
  for (Eigen::Index w : hidden_widths) {
    n += (fan_in + 1) * w;
    fan_in = w;
  }
  n += (fan_in + 1) * num_classes;
  for (Eigen::Index i = 0; i < num_aux_heads(); ++i) n += (hidden_widths[i] + 1) * num_classes;
  return n;
}

void NetworkSpec::validate() const {
  if (hidden_widths.empty()) {
    throw Error(ErrorCode::InvalidArgument, "network needs at least one hidden layer");
  }
  if (input_dim < 1 || num_classes < 1) {
    throw Error(ErrorCode::InvalidArgument, "input dimension and class count must be >= 1");
  }
  for (Eigen::Index w : hidden_widths) {
    if (w < 1) throw Error(ErrorCode::InvalidArgument, "hidden widths must be >= 1");
  }
  if (activation == Activation::Identity) {
    throw Error(ErrorCode::InvalidArgument, "identity activation is reserved for regression heads");
  }
}

NetworkSpec NetworkSpec::uniform(Eigen::Index input_dim, Eigen::Index depth, Eigen::Index width,
                                 Eigen::Index num_classes, Activation activation,
                                 bool aux_enabled) {
  NetworkSpec spec;
  spec.input_dim = input_dim;
  spec.hidden_widths.assign(static_cast<std::size_t>(std::max<Eigen::Index>(depth, 0)), width);
  spec.activation = activation;
  spec.num_classes = num_classes;
  spec.aux_enabled = aux_enabled;
  return spec;
}

}  // namespace auxit
