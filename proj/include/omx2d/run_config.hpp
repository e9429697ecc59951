#pragma once

#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "omx2d/blockade.hpp"
#include "omx2d/linres.hpp"
#include "omx2d/omit.hpp"
#include "omx2d/scan_table.hpp"

namespace omx2d {

inline constexpr int config_schema_version = 1;

enum class Task { blockade, omit, spectrum, backaction, cooling };
const char* to_string(Task task);

/// One sweep axis. `values` are in config units (Hz for frequencies), `internal`
/// in the units the physics code takes (rad/s for frequencies).
struct SweepAxis {
  std::string name;
  std::string column;
  std::vector<double> values;
  std::vector<double> internal;
};

/// A validated run. Built only through parse_config / load_config / config_from_json.
struct RunConfig {
  Task task = Task::blockade;
  std::string label;
  SystemParams params;                    // rad/s
  std::optional<double> coupling_G;       // |G| override, rad/s
  std::optional<double> coupling_ratio;   // eps override
  std::vector<SweepAxis> axes;            // outermost first
  HilbertDims truncation{4, 8, 8};
  BlockadeScanOptions blockade;           // solver + gamma binding + convergence check
  ProbeFormula probe_formula = ProbeFormula::as_printed;
  SelfEnergyForm self_energy = SelfEnergyForm::standard;
  PhononNumberOptions quadrature;
  bool fail_fast = false;
  std::string output;
  /// Canonical document (Hz, defaults filled in). Loading it again gives the same run.
  nlohmann::json resolved;

  std::size_t point_count() const;
};

/// JSON pointer -> 1-based line of the key (or array element) in the source text.
using SourceLines = std::map<std::string, int>;

/// Strict JSON parse: duplicate keys are parse errors naming key and line.
nlohmann::json parse_json_strict(const std::string& text, const std::string& source, SourceLines* lines = nullptr);

/// Parses and validates a config document. Accepts either a config or a
/// resolved dump / sidecar (a document with a "config" member).
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);
RunConfig config_from_json(const nlohmann::json& doc, const SourceLines& lines = {},
                           const std::string& source = "<config>");

/// {"config": resolved document, "derived": Kerr coefficients, occupancies, ... in Hz}.
nlohmann::json resolved_dump(const RunConfig& config);

struct RunOptions {
  int workers = 1;
  bool fail_fast = false;  // or-ed with the config's own flag
};

/// Evaluates the task on the full grid (row-major, last axis fastest).
/// A failing point becomes a flagged NaN row unless fail-fast is set, in which
/// case the error of the first failing grid point is rethrown.
ScanTable run_sweep(const RunConfig& config, const RunOptions& options = {});

/// Metadata sidecar written next to a CSV: resolved dump + table metadata.
nlohmann::json sidecar(const RunConfig& config, const ScanTable& table);

}  // namespace omx2d
