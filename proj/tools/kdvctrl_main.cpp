#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "kdvctrl/critical_lengths.hpp"
#include "kdvctrl/csv.hpp"
#include "kdvctrl/tasks.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitTask = 3;

void print_manifest(const kdvctrl::RunManifest& m) {
  std::cout << "run_id: " << m.run_id << "\n";
  for (const auto& [k, v] : m.headline_metrics)
    std::cout << "  " << k << " = " << kdvctrl::format_double(v) << "\n";
  for (const auto& [path, sum] : m.outputs) std::cout << "  artifact " << path << " (" << sum << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary-control toolkit for the KdV equation on a finite interval"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "runs";
  int workers = 0;

  auto* run = app.add_subcommand("run", "execute one task from a config file");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("-o,--out", out_dir, "output directory");

  auto* sweep = app.add_subcommand("sweep", "execute a parameter sweep from a config file");
  sweep->add_option("config", config_path, "config file (task = sweep)")->required();
  sweep->add_option("-o,--out", out_dir, "output directory");

  auto* validate = app.add_subcommand("validate", "schema-check a config file");
  validate->add_option("config", config_path, "config file")->required();

  auto* atlas = app.add_subcommand("atlas", "export the critical-length atlas");
  std::string atlas_set = "S";
  int k_max = 3, seeds = 24;
  double tol = 1e-11;
  std::string atlas_out = "atlas.csv";
  atlas->add_option("--set", atlas_set, "S, N or F");
  atlas->add_option("--k-max", k_max, "pair bound for S");
  atlas->add_option("--seeds", seeds, "Newton seeds per axis for N/F");
  atlas->add_option("--tol", tol, "Newton residual tolerance");
  atlas->add_option("-o,--out", atlas_out, "output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) {
      const auto cfg = kdvctrl::Config::parse_file(config_path);
      if (cfg.get_string("task", "") == "sweep") {
        print_manifest(kdvctrl::run_sweep(cfg, cfg.get_string("output.dir", out_dir), workers));
      } else {
        print_manifest(kdvctrl::run_task(cfg, cfg.get_string("output.dir", out_dir)));
      }
    } else if (sweep->parsed()) {
      const auto cfg = kdvctrl::Config::parse_file(config_path);
      print_manifest(kdvctrl::run_sweep(cfg, cfg.get_string("output.dir", out_dir), workers));
    } else if (validate->parsed()) {
      kdvctrl::validate_config(kdvctrl::Config::parse_file(config_path));
      std::cout << "ok\n";
    } else if (atlas->parsed()) {
      std::vector<kdvctrl::CriticalRoot> roots;
      if (atlas_set == "S") {
        for (const auto& w : kdvctrl::enumerate_S(k_max)) roots.push_back(w.root);
      } else if (atlas_set == "N" || atlas_set == "F") {
        roots = kdvctrl::find_critical_lengths(
            atlas_set == "N" ? kdvctrl::SetTag::N : kdvctrl::SetTag::F, kdvctrl::SearchBox{},
            seeds, tol);
      } else {
        std::cerr << "atlas: --set must be S, N or F\n";
        return kExitConfig;
      }
      kdvctrl::write_atlas_csv(atlas_out, roots);
      std::cout << atlas_out << ": " << roots.size() << " roots\n";
    }
  } catch (const kdvctrl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "task error: " << e.what() << "\n";
    return kExitTask;
  }
  return kExitOk;
}
