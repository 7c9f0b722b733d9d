#include "auxit/json_io.hpp"

#include "auxit/error.hpp"

namespace auxit {

using nlohmann::json;

json to_json(const NetworkSpec& spec) {
  return {{"input_dim", spec.input_dim},
          {"hidden_widths", spec.hidden_widths},
          {"activation", to_string(spec.activation)},
          {"num_classes", spec.num_classes},
          {"aux_enabled", spec.aux_enabled}};
}

NetworkSpec spec_from_json(const json& j) {
  try {
    NetworkSpec spec;
    spec.input_dim = j.at("input_dim").get<Eigen::Index>();
    spec.hidden_widths = j.at("hidden_widths").get<std::vector<Eigen::Index>>();
    spec.activation = activation_from_string(j.at("activation").get<std::string>());
    spec.num_classes = j.at("num_classes").get<Eigen::Index>();
    spec.aux_enabled = j.at("aux_enabled").get<bool>();
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("network spec: ") + e.what());
  }
}

json to_json(const TrainConfig& c) {
  return {{"alphas", c.alphas},
          {"alpha", c.alpha},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"beta", c.beta},
          {"pretrain_epochs", c.pretrain_epochs}};
}

TrainConfig config_from_json(const json& j) {
  try {
    TrainConfig c;
    c.alphas = j.at("alphas").get<std::vector<double>>();
    c.alpha = j.at("alpha").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.momentum = j.at("momentum").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.epochs = j.at("epochs").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.beta = j.at("beta").get<double>();
    c.pretrain_epochs = j.at("pretrain_epochs").get<int>();
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("train config: ") + e.what());
  }
}

json to_json(const Scaling& s) {
  return {{"min", std::vector<double>(s.min.data(), s.min.data() + s.min.size())},
          {"max", std::vector<double>(s.max.data(), s.max.data() + s.max.size())}};
}

Scaling scaling_from_json(const json& j) {
  try {
    const auto lo = j.at("min").get<std::vector<double>>();
    const auto hi = j.at("max").get<std::vector<double>>();
    if (lo.size() != hi.size()) throw Error(ErrorCode::ParseError, "scaling min/max differ in length");
    return {Eigen::Map<const VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size())),
            Eigen::Map<const VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()))};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("scaling: ") + e.what());
  }
}

json to_json(const EvalReport& r) {
  return {{"average_cost", r.average_cost},
          {"error_rate", r.error_rate},
          {"prediction_counts", r.prediction_counts}};
}

}  // namespace auxit
