#include "stpcache/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "stpcache/keyvalue.hpp"

namespace stpcache {

bool CacheRealization::contains(std::size_t file) const {
  return std::binary_search(files.begin(), files.end(), file);
}

Catalog zipf_popularity(std::size_t n_files, double gamma) {
  if (n_files == 0) throw std::invalid_argument("zipf_popularity: n_files must be >= 1");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("zipf_popularity: gamma must be >= 0");

  Catalog cat{n_files, gamma, std::vector<double>(n_files)};
  for (std::size_t n = 0; n < n_files; ++n) cat.popularity[n] = std::pow(static_cast<double>(n + 1), -gamma);
  // Sum smallest terms first.
  double total = 0.0;
  for (std::size_t n = n_files; n-- > 0;) total += cat.popularity[n];
  for (auto& a : cat.popularity) a /= total;
  return cat;
}

PlacementVector validate_placement(std::vector<double> probs, std::size_t cache_size) {
  const std::size_t n = probs.size();
  if (n == 0) throw std::invalid_argument("placement: empty vector");
  if (cache_size == 0) throw std::invalid_argument("placement: cache size K must be >= 1");
  if (cache_size >= n) {
    throw std::invalid_argument("placement: cache size K=" + std::to_string(cache_size) +
                                " must be smaller than the number of files N=" + std::to_string(n));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = probs[i];
    if (!(t >= 0.0 && t <= 1.0)) {
      throw std::invalid_argument("placement: T_" + std::to_string(i + 1) + " = " + kv::format_number(t) +
                                  " outside [0, 1]");
    }
    sum += t;
  }
  if (std::abs(sum - static_cast<double>(cache_size)) > 1e-9) {
    throw std::invalid_argument("placement: sum of T is " + kv::format_number(sum) + ", expected K = " +
                                std::to_string(cache_size));
  }

  PlacementVector p;
  p.probs_ = std::move(probs);
  p.cache_size_ = cache_size;
  p.cumulative_.resize(n + 1, 0.0);
  std::partial_sum(p.probs_.begin(), p.probs_.end(), p.cumulative_.begin() + 1);
  p.cumulative_.back() = static_cast<double>(cache_size);
  // Keep the running sums monotone after forcing the last one.
  for (std::size_t i = n; i-- > 0;) p.cumulative_[i] = std::min(p.cumulative_[i], p.cumulative_[i + 1]);
  return p;
}

CacheRealization sample_cache_graphical(const PlacementVector& placement, double uniform_draw) {
  if (!(uniform_draw >= 0.0 && uniform_draw < 1.0)) {
    throw std::invalid_argument("sample_cache_graphical: draw must lie in [0, 1)");
  }
  const auto cum = placement.cumulative();
  const std::size_t n_files = placement.size();
  CacheRealization out;
  out.files.reserve(placement.cache_size());
  std::size_t prev = 0;
  for (std::size_t j = 0; j < placement.cache_size(); ++j) {
    const double pos = uniform_draw + static_cast<double>(j);
    // First running sum strictly above pos; that index is the 1-based file.
    auto file = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), pos) - cum.begin());
    file = std::min(file, n_files);
    // Rounding can make a unit segment cover two positions; move on to the
    // next file with positive mass so the realization stays distinct.
    while (file <= prev && file < n_files) ++file;
    while (file < n_files && placement[file - 1] == 0.0) ++file;
    out.files.push_back(file);
    prev = file;
  }
  return out;
}

bool graphical_contains(const PlacementVector& placement, double uniform_draw, std::size_t file) {
  const auto cum = placement.cumulative();
  const double lo = cum[file - 1];
  const double hi = cum[file];
  if (!(hi > lo)) return false;
  const double k = std::max(0.0, std::ceil(lo - uniform_draw));
  if (k > static_cast<double>(placement.cache_size() - 1)) return false;
  const double pos = uniform_draw + k;
  return pos >= lo && pos < hi;
}

PlacementVector baseline_mpc(const Catalog& catalog, std::size_t cache_size) {
  std::vector<double> t(catalog.n_files, 0.0);
  std::fill_n(t.begin(), std::min(cache_size, t.size()), 1.0);
  return validate_placement(std::move(t), cache_size);
}

PlacementVector baseline_udc(const Catalog& catalog, std::size_t cache_size) {
  const double share = static_cast<double>(cache_size) / static_cast<double>(catalog.n_files);
  return validate_placement(std::vector<double>(catalog.n_files, share), cache_size);
}

IidcSampler::IidcSampler(const Catalog& catalog, std::size_t cache_size)
    : weight_(catalog.popularity), cache_size_(cache_size) {
  if (cache_size == 0 || cache_size >= catalog.n_files) {
    throw std::invalid_argument("baseline_iidc: K must satisfy 1 <= K < N");
  }
  std::size_t positive = 0;
  double running = 0.0;
  cdf_.reserve(weight_.size());
  for (double w : weight_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("baseline_iidc: popularity must be finite and >= 0");
    positive += w > 0.0 ? 1 : 0;
    running += w;
    cdf_.push_back(running);
  }
  if (positive < cache_size) throw std::invalid_argument("baseline_iidc: fewer than K files with positive popularity");
}

CacheRealization IidcSampler::operator()(std::mt19937_64& stream) const {
  constexpr int kMaxRejections = 32;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<char> chosen(weight_.size(), 0);
  CacheRealization out;
  out.files.reserve(cache_size_);
  double removed = 0.0;
  for (std::size_t k = 0; k < cache_size_; ++k) {
    std::size_t pick = weight_.size();
    for (int attempt = 0; attempt < kMaxRejections && pick == weight_.size(); ++attempt) {
      const double target = uniform(stream) * cdf_.back();
      auto i = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), target) - cdf_.begin());
      i = std::min(i, weight_.size() - 1);
      if (!chosen[i] && weight_[i] > 0.0) pick = i;
    }
    if (pick == weight_.size()) {
      // Scan of the remaining mass; the last positive entry absorbs round-off.
      double target = uniform(stream) * (cdf_.back() - removed);
      for (std::size_t i = 0; i < weight_.size(); ++i) {
        if (chosen[i] || !(weight_[i] > 0.0)) continue;
        pick = i;
        if (target < weight_[i]) break;
        target -= weight_[i];
      }
    }
    chosen[pick] = 1;
    removed += weight_[pick];
    out.files.push_back(pick + 1);
  }
  std::sort(out.files.begin(), out.files.end());
  return out;
}

CacheRealization baseline_iidc(const Catalog& catalog, std::size_t cache_size, std::mt19937_64& stream) {
  return IidcSampler(catalog, cache_size)(stream);
}

PlacementVector iidc_marginals(const Catalog& catalog, std::size_t cache_size, std::size_t samples,
                               std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("iidc_marginals: samples must be positive");
  std::mt19937_64 stream(seed);
  std::vector<std::size_t> count(catalog.n_files, 0);
  const IidcSampler sampler(catalog, cache_size);
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto f : sampler(stream).files) ++count[f - 1];
  }
  std::vector<double> t(catalog.n_files);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(count[i]) / static_cast<double>(samples);
  // Counts sum to K * samples exactly; fix the last ulp.
  const double sum = std::accumulate(t.begin(), t.end(), 0.0);
  for (auto& v : t) v = std::min(1.0, v * static_cast<double>(cache_size) / sum);
  return validate_placement(std::move(t), cache_size);
}

std::string serialize_placement(const PlacementVector& placement) {
  std::string out = "[placement]\ncache_size = " + std::to_string(placement.cache_size()) + "\nvector = [";
  for (std::size_t i = 0; i < placement.size(); ++i) {
    if (i) out += ", ";
    out += kv::format_number(placement[i]);
  }
  out += "]\n";
  return out;
}

PlacementVector parse_placement(const std::string& text) {
  const auto doc = kv::Document::parse(text);
  const auto* k = doc.find("placement", "cache_size");
  const auto* v = doc.find("placement", "vector");
  if (k == nullptr) throw std::invalid_argument("placement.cache_size: missing");
  if (v == nullptr) throw std::invalid_argument("placement.vector: missing");
  const long long cache_size = kv::to_integer(*k);
  if (cache_size <= 0) throw std::invalid_argument("placement.cache_size: must be positive");
  std::vector<double> probs;
  for (const auto& tok : kv::to_list(*v)) {
    kv::Entry e = *v;
    e.value = tok;
    probs.push_back(kv::to_number(e));
  }
  return validate_placement(std::move(probs), static_cast<std::size_t>(cache_size));
}

}  // namespace stpcache
