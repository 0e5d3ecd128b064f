// Command-line front end: curve, optimize, compare, plots.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include "stpcache/experiment.hpp"

namespace fs = std::filesystem;
using namespace stpcache;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> profile;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "experiment config file")->required();
  cmd->add_option("--out", c.out, "output directory (overrides experiment.output_dir)");
  cmd->add_option("--seed", c.seed, "master seed (overrides experiment.master_seed)");
  cmd->add_option("--profile", c.profile, "simulation profile")->check(CLI::IsMember({"desk", "paper"}));
}

ExperimentConfig effective_config(const Common& c) {
  ExperimentConfig cfg = load_config(c.config_path);
  if (c.out) cfg.output_dir = *c.out;
  if (c.seed) cfg.master_seed = *c.seed;
  if (c.profile) cfg.profile = parse_profile(*c.profile);
  cfg.validate();
  return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed for '" + path.string() + "'");
  std::cout << "wrote " << path.string() << "\n";
}

fs::path prepare_output(const ExperimentConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
  write_file(dir / (cfg.name + ".config"), serialize_config(cfg));
  return dir;
}

fs::path csv_path(const ExperimentConfig& cfg, std::string_view kind) {
  return fs::path(cfg.output_dir) / (cfg.name + "_" + std::string(kind) + ".csv");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_plot(const fs::path& csv) {
  fs::path script = csv;
  script.replace_extension(".gp");
  fs::path image = csv.filename();
  image.replace_extension(".png");
  write_file(script, emit_plots(read_file(csv), image.string()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Successful transmission probability of cache-enabled cooperative cellular networks"};
  app.require_subcommand(1);

  Common curve_opts, optimize_opts, compare_opts, plots_opts;
  std::optional<std::string> plots_csv;
  auto* curve = app.add_subcommand("curve", "analytic STP curves with Monte Carlo validation");
  auto* optimize = app.add_subcommand("optimize", "optimal placement probabilities");
  auto* compare = app.add_subcommand("compare", "optimal placement versus MPC, IIDC and UDC");
  auto* plots = app.add_subcommand("plots", "gnuplot scripts for CSVs written by the other commands");
  add_common(curve, curve_opts);
  add_common(optimize, optimize_opts);
  add_common(compare, compare_opts);
  add_common(plots, plots_opts);
  plots->add_option("--csv", plots_csv, "a single CSV to plot (default: every CSV of the config in --out)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (curve->parsed()) {
      const auto cfg = effective_config(curve_opts);
      prepare_output(cfg);
      write_file(csv_path(cfg, "curve"), curve_csv(cfg, run_curve(cfg)));
    } else if (optimize->parsed()) {
      const auto cfg = effective_config(optimize_opts);
      const auto dir = prepare_output(cfg);
      const auto rows = run_optimize(cfg);
      for (const auto& row : rows) write_file(dir / placement_file_name(cfg, row), serialize_placement(row.result.t_star));
      write_file(csv_path(cfg, "optimize"), optimize_csv(cfg, rows));
    } else if (compare->parsed()) {
      const auto cfg = effective_config(compare_opts);
      prepare_output(cfg);
      write_file(csv_path(cfg, "compare"), compare_csv(cfg, run_baseline_comparison(cfg)));
    } else if (plots->parsed()) {
      const auto cfg = effective_config(plots_opts);
      if (plots_csv) {
        write_plot(*plots_csv);
      } else {
        int found = 0;
        for (const char* kind : {"curve", "optimize", "compare"}) {
          const auto csv = csv_path(cfg, kind);
          if (fs::exists(csv)) {
            write_plot(csv);
            ++found;
          }
        }
        if (found == 0) {
          throw std::runtime_error("no CSV for config '" + cfg.name + "' in '" + cfg.output_dir +
                                   "'; run curve, optimize or compare first");
        }
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "stpcache: error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
