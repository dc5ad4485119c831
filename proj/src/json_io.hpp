#pragma once

// JSON conversions shared by the text formats and the run report.

#include <string>

#include "json.hpp"
#include "sirfp/error.hpp"
#include "sirfp/topology.hpp"
#include "sirfp/types.hpp"

namespace sirfp::detail {

using nlohmann::json;

nlohmann::ordered_json mask_to_json(const PruneDecision& d);
PruneDecision mask_from_json(const json& j);

nlohmann::ordered_json topology_to_json(const LayerTopology& t);
LayerTopology topology_from_json(const json& j);

nlohmann::ordered_json plan_to_json(const PruningPlan& p);
PruningPlan plan_from_json(const json& j);

json parse_json(std::string_view text, std::string_view what);

template <typename T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    fail(Errc::Parse, std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(Errc::Parse, std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return field<T>(j, key);
}

}  // namespace sirfp::detail
