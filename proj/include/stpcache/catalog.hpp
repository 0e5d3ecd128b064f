#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace stpcache {

/// File catalog with Zipf request popularity. Files are indexed 1..N in the
/// public API; `popularity[0]` is the weight of file 1.
struct Catalog {
  std::size_t n_files = 0;
  double zipf_exponent = 0.0;
  std::vector<double> popularity;
};

/// Marginal caching probabilities T (one per file) with cache budget K.
class PlacementVector {
 public:
  PlacementVector() = default;

  [[nodiscard]] std::span<const double> probs() const noexcept { return probs_; }
  [[nodiscard]] double operator[](std::size_t i) const { return probs_[i]; }
  [[nodiscard]] std::size_t size() const noexcept { return probs_.size(); }
  [[nodiscard]] std::size_t cache_size() const noexcept { return cache_size_; }

  // Running sums S_0 = 0, S_n = T_1 + ... + T_n with S_N forced to K.
  [[nodiscard]] std::span<const double> cumulative() const noexcept { return cumulative_; }

 private:
  friend PlacementVector validate_placement(std::vector<double> probs, std::size_t cache_size);

  std::vector<double> probs_;
  std::vector<double> cumulative_;
  std::size_t cache_size_ = 0;
};

/// Files held by one base station, as sorted 1-based indices.
struct CacheRealization {
  std::vector<std::size_t> files;

  [[nodiscard]] bool contains(std::size_t file) const;
};

Catalog zipf_popularity(std::size_t n_files, double gamma);

/// Checks 0 <= T_n <= 1, |sum T - K| <= 1e-9 and K < N. Throws
/// std::invalid_argument on violation.
PlacementVector validate_placement(std::vector<double> probs, std::size_t cache_size);

/// Graphical (systematic) sampler: segments of length T_n are packed left to
/// right over [0, K); the cache holds the files covering u + j, j = 0..K-1.
CacheRealization sample_cache_graphical(const PlacementVector& placement, double uniform_draw);

/// Membership test equivalent to `sample_cache_graphical(p, u).contains(file)`
/// in O(1).
bool graphical_contains(const PlacementVector& placement, double uniform_draw, std::size_t file);

PlacementVector baseline_mpc(const Catalog& catalog, std::size_t cache_size);
PlacementVector baseline_udc(const Catalog& catalog, std::size_t cache_size);

/// Sequential popularity-proportional sampling of K distinct files: each
/// draw picks among the files not yet chosen with probability proportional
/// to popularity. Implemented by rejection on the full table, switching to
/// an explicit scan of the remaining weights when a draw keeps colliding.
class IidcSampler {
 public:
  IidcSampler(const Catalog& catalog, std::size_t cache_size);

  CacheRealization operator()(std::mt19937_64& stream) const;

 private:
  std::vector<double> weight_;
  std::vector<double> cdf_;
  std::size_t cache_size_;
};

CacheRealization baseline_iidc(const Catalog& catalog, std::size_t cache_size, std::mt19937_64& stream);

/// Monte Carlo estimate of the per-file inclusion probabilities of
/// `baseline_iidc`, renormalized so the result is a valid placement.
PlacementVector iidc_marginals(const Catalog& catalog, std::size_t cache_size, std::size_t samples,
                               std::uint64_t seed);

// Plain-text form:
//   [placement]
//   cache_size = 3
//   vector = [0.9, 0.8, ...]
std::string serialize_placement(const PlacementVector& placement);
PlacementVector parse_placement(const std::string& text);

}  // namespace stpcache
