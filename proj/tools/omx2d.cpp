// omx2d: figure presets and config-driven sweeps, CSV out.
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "omx2d/errors.hpp"
#include "omx2d/presets.hpp"
#include "omx2d/run_config.hpp"
#include "omx2d/sweep.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_numeric = 3;
constexpr int exit_partial = 4;

void print_warnings(const std::string& what, const omx2d::ScanTable& table) {
  for (const auto& w : table.warnings()) std::fprintf(stderr, "warning: %s: %s\n", what.c_str(), w.c_str());
}

int report(const omx2d::Error& e) {
  std::fprintf(stderr, "error: %s\n", e.what());
  return e.is_configuration() ? exit_config : exit_numeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Three-mode optomechanics laboratory: blockade, OMIT, spectra, backaction, cooling"};
  app.set_version_flag("--version", std::string(OMX2D_VERSION));
  app.require_subcommand(1);

  int workers = omx2d::default_worker_count();
  bool fail_fast = false;
  std::string preset_dir = omx2d::preset_directory();

  auto* preset = app.add_subcommand("preset", "Run a figure preset, one CSV and sidecar per curve");
  std::string preset_name, out_dir = ".";
  preset->add_option("name", preset_name, "Preset name (see `presets --list`)")->required();
  preset->add_option("--out", out_dir, "Output directory")->capture_default_str();
  preset->add_option("--workers", workers, "Worker threads (default: OMX2D_WORKERS or core count)")
      ->check(CLI::PositiveNumber);
  preset->add_flag("--fail-fast", fail_fast, "Abort on the first failing grid point");
  preset->add_option("--preset-dir", preset_dir, "Directory holding the preset files")->capture_default_str();

  auto* run = app.add_subcommand("run", "Run a sweep from a config file");
  std::string config_path, out_file;
  run->add_option("--config", config_path, "Config JSON")->required();
  run->add_option("--out", out_file, "CSV path (overrides the config's output; '-' for stdout)");
  run->add_option("--workers", workers, "Worker threads (default: OMX2D_WORKERS or core count)")
      ->check(CLI::PositiveNumber);
  run->add_flag("--fail-fast", fail_fast, "Abort on the first failing grid point");

  auto* validate = app.add_subcommand("validate", "Check a config and print the resolved dump");
  validate->add_option("--config", config_path, "Config JSON")->required();

  auto* presets = app.add_subcommand("presets", "List the shipped presets");
  bool list = false;
  presets->add_flag("--list", list, "List preset names with descriptions");
  presets->add_option("--preset-dir", preset_dir, "Directory holding the preset files")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  try {
    if (*presets) {
      for (const auto& name : omx2d::preset_names(preset_dir)) {
        const auto p = omx2d::load_preset(name, preset_dir);
        std::printf("%-6s  %zu curve(s)  %s\n", name.c_str(), p.curves.size(), p.description.c_str());
      }
      return 0;
    }
    if (*validate) {
      const auto config = omx2d::load_config(config_path);
      std::cout << omx2d::resolved_dump(config).dump(2) << "\n";
      return 0;
    }
    const omx2d::RunOptions options{workers, fail_fast};
    if (*preset) {
      const auto p = omx2d::load_preset(preset_name, preset_dir);
      const auto runs = omx2d::run_preset(p, options);
      std::size_t flagged = 0;
      for (const auto& r : runs) {
        print_warnings(p.name + "/" + r.name, r.table);
        flagged += r.table.flagged_rows();
      }
      for (const auto& path : omx2d::write_preset_outputs(p, runs, out_dir)) std::printf("%s\n", path.c_str());
      return flagged ? exit_partial : 0;
    }
    // run
    const auto config = omx2d::load_config(config_path);
    const auto table = omx2d::run_sweep(config, options);
    print_warnings(config_path, table);
    const std::string target = out_file.empty() ? config.output : out_file;
    if (target.empty() || target == "-") {
      table.write_csv(std::cout);
    } else {
      std::ofstream csv(target, std::ios::binary);
      table.write_csv(csv);
      const std::string meta_path = std::filesystem::path(target).replace_extension(".json").string();
      std::ofstream meta(meta_path, std::ios::binary);
      meta << omx2d::sidecar(config, table).dump(2) << "\n";
      if (!csv || !meta) throw omx2d::Error(omx2d::ErrorKind::configuration, target + ": cannot write output");
      std::fprintf(stderr, "wrote %s and %s\n", target.c_str(), meta_path.c_str());
    }
    return table.flagged_rows() ? exit_partial : 0;
  } catch (const omx2d::Error& e) {
    return report(e);
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error: malformed document: %s\n", e.what());
    return exit_config;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_numeric;
  }
}
