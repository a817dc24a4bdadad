#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "nlos/forward_sim.hpp"
#include "nlos/localization.hpp"
#include "nlos/scene.hpp"
#include "nlos/studies.hpp"

namespace nlos::io {

/// A scene file: geometry, ground truth and the retrieval settings that go
/// with it. Every length is in metres, every time in seconds.
struct SceneDocument {
  SceneSpec scene;
  AcquisitionParams acquisition;
  GridSpec grid;
};

/// Strict parse: unknown keys, wrong types and broken invariants throw
/// ValidationError whose field is a JSON-pointer-like path ("/pixels/2").
/// Syntax errors report line and column.
SceneDocument parse_scene_document(std::string_view text);
std::string serialize_scene_document(const SceneDocument& doc);

SweepConfig parse_sweep_config(std::string_view text);
std::string serialize_sweep_config(const SweepConfig& config);

nlohmann::json to_json(const AcquisitionParams& params);
nlohmann::json to_json(const GridSpec& grid);

/// Track results plus association and per-pixel diagnostics.
nlohmann::json scenario_to_json(const ScenarioResult& result);

}  // namespace nlos::io
