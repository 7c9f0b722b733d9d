#pragma once

#include <json.hpp>

#include "auxit/costs.hpp"
#include "auxit/data.hpp"
#include "auxit/models.hpp"
#include "auxit/nncore.hpp"

namespace auxit {

nlohmann::json to_json(const NetworkSpec& spec);
NetworkSpec spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& config);
TrainConfig config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Scaling& scaling);
Scaling scaling_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EvalReport& report);

}  // namespace auxit
