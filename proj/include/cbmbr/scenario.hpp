#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "cbmbr/synth.hpp"

namespace cbmbr {

/**
 * Scenario config as stored on disk (JSON).
 *
 *   {
 *     "name": "planted",                 // optional
 *     "dims": 8,
 *     "seed": 11,
 *     "source_mode": "origin",           // or "blob_mean"
 *     "utility": "rbf:0.05",             // optional default scorer
 *     "planted_blob": 1,                 // optional analysis metadata
 *     "blobs": [
 *       {"count": 90, "radius": 1.0, "center": [0, 0, ...]},
 *       {"count": 10, "radius": 0.1, "center_axis": [0, 6.0]},
 *       {"count": 50, "radius": 1.0, "center_scale": 3.0}
 *     ]
 *   }
 *
 * A blob gives exactly one of `center` (explicit), `center_axis` ([axis,
 * value], zero elsewhere) or `center_scale` (drawn at generation time).
 */
struct ScenarioFile {
  std::string name;
  ScenarioSpec spec;
  std::optional<std::string> utility;
  std::optional<std::size_t> planted_blob;
};

inline ScenarioFile parse_scenario(const nlohmann::json& j) {
  try {
    ScenarioFile file;
    file.name = j.value("name", std::string{});
    file.spec.dims = j.at("dims").get<std::size_t>();
    file.spec.seed = j.value("seed", std::uint64_t{0});
    file.spec.source_mode = parse_source_mode(j.value("source_mode", std::string{"origin"}));
    if (j.contains("utility")) file.utility = j.at("utility").get<std::string>();
    if (j.contains("planted_blob")) file.planted_blob = j.at("planted_blob").get<std::size_t>();
    for (const auto& b : j.at("blobs")) {
      BlobSpec blob;
      blob.count = b.at("count").get<std::size_t>();
      blob.radius = b.value("radius", 1.0);
      const int center_keys = static_cast<int>(b.contains("center")) + static_cast<int>(b.contains("center_axis")) +
                              static_cast<int>(b.contains("center_scale"));
      if (center_keys != 1)
        throw Error(Errc::InvalidArgument, "blob needs exactly one of center, center_axis, center_scale");
      if (b.contains("center")) {
        blob.center = b.at("center").get<std::vector<double>>();
      } else if (b.contains("center_axis")) {
        const auto axis = b.at("center_axis").at(0).get<std::size_t>();
        if (axis >= file.spec.dims) throw Error(Errc::DimensionMismatch, "center_axis beyond dims");
        blob.center.assign(file.spec.dims, 0.0);
        blob.center[axis] = b.at("center_axis").at(1).get<double>();
      } else {
        blob.center_scale = b.at("center_scale").get<double>();
      }
      file.spec.blobs.push_back(std::move(blob));
    }
    validate_scenario(file.spec);
    if (file.planted_blob && *file.planted_blob >= file.spec.blobs.size())
      throw Error(Errc::InvalidArgument, "planted_blob out of range");
    return file;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("scenario: ") + e.what());
  }
}

inline ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open scenario " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, "scenario " + path.string() + ": " + e.what());
  }
  return parse_scenario(j);
}

}  // namespace cbmbr
