#pragma once

#include "json.hpp"
#include "specshare/neural.hpp"

namespace specshare {

nlohmann::json to_json(const NetSpec& spec);
NetSpec net_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AdamState& s);
AdamState adam_state_from_json(const nlohmann::json& j);

}  // namespace specshare
