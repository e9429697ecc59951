#include "omx2d/presets.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "omx2d/errors.hpp"

namespace omx2d {

namespace fs = std::filesystem;
using nlohmann::json;

std::string preset_directory() { return OMX2D_PRESET_DIR; }

std::vector<std::string> preset_names(const std::string& dir) {
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
  }
  if (ec) throw Error(ErrorKind::configuration, dir + ": cannot list preset directory: " + ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& msg) {
  throw Error(ErrorKind::configuration, where + ": " + msg);
}

// Lines for the merged curve document: override lines win over base lines.
SourceLines curve_lines(const SourceLines& all, std::size_t curve) {
  SourceLines out;
  const std::string base = "/base", over = "/curves/" + std::to_string(curve) + "/override";
  for (const auto& [ptr, line] : all) {
    if (ptr.rfind(base, 0) == 0) out.emplace(ptr.substr(base.size()), line);
  }
  for (const auto& [ptr, line] : all) {
    if (ptr.rfind(over, 0) == 0) out[ptr.substr(over.size())] = line;
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorKind::configuration, path.string() + ": cannot write");
}

}  // namespace

Preset load_preset(const std::string& name, const std::string& dir) {
  const fs::path path = fs::path(dir) / (name + ".json");
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::string known;
    for (const auto& n : preset_names(dir)) known += (known.empty() ? "" : ", ") + n;
    throw Error(ErrorKind::configuration, "unknown preset '" + name + "' (available: " + known + ")");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string source = path.string();
  SourceLines lines;
  Preset p;
  p.document = parse_json_strict(ss.str(), source, &lines);
  const json& doc = p.document;
  if (!doc.is_object()) fail(source, "preset must be a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    static const char* allowed[] = {"preset", "description", "caption_values", "notes", "base", "curves"};
    if (std::find(std::begin(allowed), std::end(allowed), it.key()) == std::end(allowed)) {
      fail(source, "unknown key '" + it.key() + "'");
    }
  }
  if (!doc.contains("preset") || doc["preset"] != name) fail(source, "'preset' must equal the file name '" + name + "'");
  p.name = name;
  if (doc.contains("description")) p.description = doc["description"].get<std::string>();
  if (!doc.contains("base") || !doc["base"].is_object()) fail(source, "missing object 'base'");
  if (!doc.contains("curves") || !doc["curves"].is_array() || doc["curves"].empty()) {
    fail(source, "'curves' must be a nonempty array");
  }
  const json& curves = doc["curves"];
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const json& c = curves[i];
    const std::string where = source + " /curves/" + std::to_string(i);
    if (!c.is_object() || !c.contains("name") || !c["name"].is_string()) fail(where, "curve needs a string 'name'");
    for (auto it = c.begin(); it != c.end(); ++it) {
      if (it.key() != "name" && it.key() != "label" && it.key() != "override") {
        fail(where, "unknown key '" + it.key() + "'");
      }
    }
    json merged = doc["base"];
    if (c.contains("override")) merged.merge_patch(c["override"]);
    PresetCurve curve;
    curve.name = c["name"].get<std::string>();
    curve.label = c.value("label", curve.name);
    if (!merged.contains("label")) merged["label"] = curve.label;
    curve.config = config_from_json(merged, curve_lines(lines, i), source + " [" + curve.name + "]");
    p.curves.push_back(std::move(curve));
  }
  return p;
}

std::vector<PresetRun> run_preset(const Preset& preset, const RunOptions& options) {
  std::vector<PresetRun> out;
  for (const auto& curve : preset.curves) {
    try {
      out.push_back({curve.name, curve.label, run_sweep(curve.config, options)});
    } catch (const Error& e) {
      throw Error(e.kind(), preset.name + "/" + curve.name + ": " + e.detail());
    }
  }
  return out;
}

std::vector<std::string> write_preset_outputs(const Preset& preset, const std::vector<PresetRun>& runs,
                                              const std::string& dir) {
  fs::create_directories(dir);
  std::vector<std::string> written;
  json index = {{"preset", preset.name},
                {"description", preset.description},
                {"document", preset.document},
                {"version", OMX2D_VERSION},
                {"curves", json::array()}};
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const std::string stem = preset.name + "_" + runs[i].name;
    const fs::path csv = fs::path(dir) / (stem + ".csv"), meta = fs::path(dir) / (stem + ".json");
    write_text(csv, runs[i].table.to_csv());
    write_text(meta, sidecar(preset.curves[i].config, runs[i].table).dump(2) + "\n");
    written.push_back(csv.string());
    written.push_back(meta.string());
    index["curves"].push_back({{"name", runs[i].name},
                               {"label", runs[i].label},
                               {"csv", stem + ".csv"},
                               {"flagged_rows", runs[i].table.flagged_rows()},
                               {"warnings", runs[i].table.warnings()},
                               {"config", preset.curves[i].config.resolved}});
  }
  const fs::path top = fs::path(dir) / (preset.name + ".json");
  write_text(top, index.dump(2) + "\n");
  written.push_back(top.string());
  return written;
}

}  // namespace omx2d
