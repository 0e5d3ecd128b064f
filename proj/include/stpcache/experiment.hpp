#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stpcache/analytic.hpp"
#include "stpcache/optimizer.hpp"
#include "stpcache/simulator.hpp"

namespace stpcache {

enum class SweepAxis { TAU, M, GAMMA, K, N };
enum class PlacementSource { OPTIMAL, MPC, UDC, IIDC, EXPLICIT };
enum class Profile { DESK, PAPER };

std::string_view to_string(SweepAxis axis);
std::string_view to_string(PlacementSource source);
std::string_view to_string(Profile profile);
Profile parse_profile(std::string_view name);

/// One experiment. A single sweep axis; `coop_sizes` may list several M
/// values, which become separate series, unless M is the swept axis.
struct ExperimentConfig {
  std::string name = "custom";
  std::uint64_t master_seed = 1;
  std::string output_dir = "out";

  std::size_t n_files = 8;
  double zipf_exponent = 2.0;
  std::size_t cache_size = 3;

  double bs_density = 0.01;
  double alpha = 4.0;
  std::vector<std::size_t> coop_sizes{1};
  double tau_db = 0.0;

  SweepAxis axis = SweepAxis::TAU;
  std::vector<double> values;  // dB for TAU

  std::vector<Scheme> schemes{Scheme::NCJT};

  PlacementSource placement = PlacementSource::EXPLICIT;
  std::vector<double> explicit_vector;

  bool simulate = true;
  Profile profile = Profile::DESK;
  std::optional<std::size_t> n_realizations;  // overrides the profile
  std::optional<double> window_half_width;    // overrides the profile
  RequestMode request_mode = RequestMode::STRATIFIED;
  unsigned workers = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses the key-value form; `placement.file` is resolved relative to
/// `base_dir` and its vector inlined.
ExperimentConfig parse_config(std::string_view text, const std::string& base_dir = ".");
std::string serialize_config(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

/// FNV-1a of the serialized config, ignoring output_dir and workers.
std::uint64_t config_hash(const ExperimentConfig& config);

std::vector<std::string> preset_names();
ExperimentConfig preset(std::string_view name);

/// Simulator settings for one point of the sweep.
SimConfig simulator_settings(const ExperimentConfig& config, const NetworkConfig& net);

/// One evaluated point of the sweep.
struct SweepPoint {
  double value = 0.0;  // in the axis unit (dB for tau)
  std::size_t coop_size = 1;
  NetworkConfig net;
  Catalog catalog;
  std::size_t cache_size = 0;
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig& config);

struct CurveRow {
  double value = 0.0;
  std::size_t coop_size = 1;
  Scheme scheme = Scheme::NCJT;
  std::optional<double> analytic;
  std::optional<StpEstimate> mc;
};

struct OptimizeRow {
  double value = 0.0;
  std::size_t coop_size = 1;
  Scheme scheme = Scheme::NCJT;
  OptimizerResult result;
};

struct CompareRow {
  double value = 0.0;
  std::size_t coop_size = 1;
  Scheme scheme = Scheme::NCJT;
  std::string strategy;  // optimal, mpc, iidc, udc
  double analytic = 0.0;
  std::optional<StpEstimate> mc;
};

std::vector<CurveRow> run_curve(const ExperimentConfig& config);
std::vector<OptimizeRow> run_optimize(const ExperimentConfig& config);
std::vector<CompareRow> run_baseline_comparison(const ExperimentConfig& config);

std::string curve_csv(const ExperimentConfig& config, const std::vector<CurveRow>& rows);
std::string optimize_csv(const ExperimentConfig& config, const std::vector<OptimizeRow>& rows);
std::string compare_csv(const ExperimentConfig& config, const std::vector<CompareRow>& rows);

/// Placement file name for one optimizer row, and its contents.
std::string placement_file_name(const ExperimentConfig& config, const OptimizeRow& row);

/// Self-contained gnuplot script (data inlined) for a CSV written by one of
/// the runners. `image_name` is the PNG the script renders to.
std::string emit_plots(std::string_view csv_text, std::string_view image_name);

}  // namespace stpcache
