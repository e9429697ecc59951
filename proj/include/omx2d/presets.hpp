#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "omx2d/run_config.hpp"

namespace omx2d {

struct PresetCurve {
  std::string name;   // file stem suffix
  std::string label;  // human-readable curve description
  RunConfig config;
};

/// A figure preset: a base config plus one override per plotted curve.
struct Preset {
  std::string name;
  std::string description;
  nlohmann::json document;  // the preset file as loaded
  std::vector<PresetCurve> curves;
};

/// Directory compiled in as the shipped preset location.
std::string preset_directory();
/// Names of every preset file (*.json) in `dir`, sorted.
std::vector<std::string> preset_names(const std::string& dir = preset_directory());

/// Loads <dir>/<name>.json and builds each curve's config by merge-patching
/// its override onto the base.
Preset load_preset(const std::string& name, const std::string& dir = preset_directory());

struct PresetRun {
  std::string name;
  std::string label;
  ScanTable table;
};

/// Runs every curve in file order. Errors carry "<preset>/<curve>: ".
std::vector<PresetRun> run_preset(const Preset& preset, const RunOptions& options = {});

/// Writes <preset>_<curve>.csv and <preset>_<curve>.json per curve, plus
/// <preset>.json recording the preset document and every resolved curve config.
/// Returns the paths written.
std::vector<std::string> write_preset_outputs(const Preset& preset, const std::vector<PresetRun>& runs,
                                              const std::string& dir);

}  // namespace omx2d
