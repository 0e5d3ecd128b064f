#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "stpcache/analytic.hpp"
#include "stpcache/catalog.hpp"

namespace stpcache {

enum class RequestMode { SAMPLED, STRATIFIED };

struct SimConfig {
  NetworkConfig net;
  double window_half_width = 300.0;  // meters; user at the center
  std::size_t n_realizations = 20000;
  std::uint64_t master_seed = 1;
  RequestMode request_mode = RequestMode::STRATIFIED;
  unsigned workers = 0;  // 0: hardware concurrency

  /// Throws unless the window holds >= 10 M BSs on average and at least 100
  /// realizations are requested.
  void validate() const;
};

struct StpEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// One snapshot of the network, fully materialized. Used for hand-built
/// scenes and for cross-checking the streaming estimator.
struct Realization {
  std::vector<Point> bs_positions;
  std::vector<CacheRealization> caches;
  std::size_t requested_file = 1;  // 1-based
  std::vector<std::complex<double>> fading;
};

struct Assignment {
  std::size_t case_m = 0;  // |C_n|
  bool miss = false;       // case 0 and no holder anywhere
  std::vector<std::size_t> serving;
  std::vector<std::size_t> interferers;
  std::vector<std::size_t> silenced;
};

/// Homogeneous PPP on [-h, h]^2.
std::vector<Point> sample_ppp(double density, double half_width, std::mt19937_64& stream);

/// Cooperative serving rule. Indices refer to `real.bs_positions`.
Assignment classify_and_serve(const Realization& real, const NetworkConfig& net);

/// Received SIR at the origin. Signal: |sum r^(-a/2) h|^2 (NC-JT) or
/// (sum r^(-a/2) |h|)^2 (coherent JT); interference: sum r^(-a) |h|^2.
double sir(const Realization& real, const Assignment& assignment, Scheme scheme, const NetworkConfig& net);

/// How each BS decides its cache in the simulator.
struct CachePolicy {
  enum class Kind { GRAPHICAL, IIDC };

  Kind kind = Kind::GRAPHICAL;
  PlacementVector placement;  // GRAPHICAL only
  std::size_t cache_size = 0;

  static CachePolicy graphical(PlacementVector placement);
  static CachePolicy iidc(std::size_t cache_size);
};

/// Several policies, schemes and thresholds evaluated on the same
/// realizations (common random numbers).
struct SweepSpec {
  std::vector<CachePolicy> policies;
  std::vector<Scheme> schemes;       // NCJT and/or CJT_EXACT
  std::vector<double> thresholds;    // linear; empty means net.sir_threshold
};

class StpGrid {
 public:
  StpGrid() = default;
  StpGrid(std::size_t policies, std::size_t schemes, std::size_t thresholds)
      : n_schemes_(schemes), n_thresholds_(thresholds), cells_(policies * schemes * thresholds) {}

  [[nodiscard]] const StpEstimate& at(std::size_t policy, std::size_t scheme, std::size_t threshold) const {
    return cells_.at((policy * n_schemes_ + scheme) * n_thresholds_ + threshold);
  }
  StpEstimate& at(std::size_t policy, std::size_t scheme, std::size_t threshold) {
    return cells_.at((policy * n_schemes_ + scheme) * n_thresholds_ + threshold);
  }

 private:
  std::size_t n_schemes_ = 0;
  std::size_t n_thresholds_ = 0;
  std::vector<StpEstimate> cells_;
};

struct SimStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;  // windows with fewer than M + 2 BSs, redrawn
};

/// Monte Carlo STP for every (policy, scheme, threshold). Realization i uses
/// the substream derive_seed(master_seed, i, attempt), so results do not
/// depend on the worker count. If `trace` is given, one CSV row per
/// (realization, evaluated file) is written for the first policy, scheme
/// and threshold.
StpGrid estimate_stp_grid(const Catalog& catalog, const SimConfig& sim, const SweepSpec& sweep,
                          SimStats* stats = nullptr, std::ostream* trace = nullptr);

StpEstimate estimate_stp(const PlacementVector& placement, const Catalog& catalog, const SimConfig& sim,
                         Scheme scheme);

/// Conditional STP with |C_n| forced to `serving`: for serving >= 1 a
/// uniformly chosen subset of the M nearest BSs transmits; for serving = 0
/// the M nearest are silent and each other BS holds the file independently
/// with probability t. Monte Carlo counterpart of q_{c,m} and q_n0(t).
StpEstimate estimate_conditional(std::size_t serving, double t, const SimConfig& sim, Scheme scheme);

/// Rebuilds realization `index` of the streaming estimator (all caches
/// drawn, requested file as in SAMPLED mode).
Realization draw_realization(const CachePolicy& policy, const Catalog& catalog, const SimConfig& sim,
                             std::uint64_t index);

std::string_view to_string(RequestMode mode);
RequestMode parse_request_mode(std::string_view name);

}  // namespace stpcache
