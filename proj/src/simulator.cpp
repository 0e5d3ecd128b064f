#include "stpcache/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "stpcache/random.hpp"

namespace stpcache {

void SimConfig::validate() const {
  net.validate();
  if (!(window_half_width > 0.0) || !std::isfinite(window_half_width)) {
    throw std::invalid_argument("simulator: window_half_width must be > 0");
  }
  const double expected = net.bs_density * 4.0 * window_half_width * window_half_width;
  if (expected < 10.0 * static_cast<double>(net.coop_size)) {
    throw std::invalid_argument("simulator: window holds " + std::to_string(expected) +
                                " BSs on average, need at least 10 M = " + std::to_string(10 * net.coop_size));
  }
  if (n_realizations < 100) throw std::invalid_argument("simulator: n_realizations must be >= 100");
}

std::string_view to_string(RequestMode mode) {
  return mode == RequestMode::SAMPLED ? "sampled" : "stratified";
}

RequestMode parse_request_mode(std::string_view name) {
  if (name == "sampled") return RequestMode::SAMPLED;
  if (name == "stratified") return RequestMode::STRATIFIED;
  throw std::invalid_argument("unknown request mode '" + std::string(name) + "' (expected sampled or stratified)");
}

CachePolicy CachePolicy::graphical(PlacementVector placement) {
  CachePolicy p;
  p.kind = Kind::GRAPHICAL;
  p.cache_size = placement.cache_size();
  p.placement = std::move(placement);
  return p;
}

CachePolicy CachePolicy::iidc(std::size_t cache_size) {
  CachePolicy p;
  p.kind = Kind::IIDC;
  p.cache_size = cache_size;
  return p;
}

std::vector<Point> sample_ppp(double density, double half_width, std::mt19937_64& stream) {
  if (!(density > 0.0)) throw std::invalid_argument("sample_ppp: density must be > 0");
  if (!(half_width > 0.0)) throw std::invalid_argument("sample_ppp: half_width must be > 0");
  std::poisson_distribution<std::size_t> count(density * 4.0 * half_width * half_width);
  std::uniform_real_distribution<double> coord(-half_width, half_width);
  std::vector<Point> pts(count(stream));
  for (auto& p : pts) {
    p.x = coord(stream);
    p.y = coord(stream);
  }
  return pts;
}

namespace {

double squared_norm(const Point& p) { return p.x * p.x + p.y * p.y; }

std::vector<std::size_t> order_by_distance(const std::vector<Point>& pts) {
  std::vector<std::size_t> order(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double da = squared_norm(pts[a]);
    const double db = squared_norm(pts[b]);
    return da < db || (da == db && a < b);
  });
  return order;
}

void require_simulable(Scheme scheme) {
  if (scheme == Scheme::CJT_UPPER || scheme == Scheme::CJT_APPROX) {
    throw std::invalid_argument("simulator: scheme '" + std::string(to_string(scheme)) +
                                "' is an analytic bound; simulate ncjt or cjt_exact");
  }
}

}  // namespace

Assignment classify_and_serve(const Realization& real, const NetworkConfig& net) {
  const std::size_t M = net.coop_size;
  const std::size_t count = real.bs_positions.size();
  if (count < M) throw std::invalid_argument("classify_and_serve: fewer BSs than the cooperation size");
  if (real.caches.size() != count) throw std::invalid_argument("classify_and_serve: one cache per BS required");
  const auto order = order_by_distance(real.bs_positions);
  const std::size_t file = real.requested_file;

  Assignment a;
  for (std::size_t k = 0; k < M; ++k) {
    if (real.caches[order[k]].contains(file)) {
      a.serving.push_back(order[k]);
    } else {
      a.silenced.push_back(order[k]);
    }
  }
  a.case_m = a.serving.size();
  std::size_t server = count;
  if (a.case_m == 0) {
    for (std::size_t k = M; k < count; ++k) {
      if (real.caches[order[k]].contains(file)) {
        server = order[k];
        break;
      }
    }
    if (server == count) {
      a.miss = true;
    } else {
      a.serving.push_back(server);
    }
  }
  for (std::size_t k = M; k < count; ++k) {
    if (order[k] != server) a.interferers.push_back(order[k]);
  }
  return a;
}

double sir(const Realization& real, const Assignment& assignment, Scheme scheme, const NetworkConfig& net) {
  require_simulable(scheme);
  if (assignment.serving.empty()) throw std::invalid_argument("sir: empty serving set (cache miss)");
  if (assignment.interferers.empty()) throw std::invalid_argument("sir: empty interferer set");
  const double half_alpha = 0.5 * net.alpha.value();
  auto amplitude = [&](std::size_t i) { return std::pow(squared_norm(real.bs_positions[i]), -0.5 * half_alpha); };

  double signal = 0.0;
  if (scheme == Scheme::NCJT) {
    std::complex<double> sum{0.0, 0.0};
    for (auto i : assignment.serving) sum += amplitude(i) * real.fading[i];
    signal = std::norm(sum);
  } else {
    double sum = 0.0;
    for (auto i : assignment.serving) sum += amplitude(i) * std::abs(real.fading[i]);
    signal = sum * sum;
  }
  double interference = 0.0;
  for (auto i : assignment.interferers) {
    interference += std::pow(squared_norm(real.bs_positions[i]), -half_alpha) * std::norm(real.fading[i]);
  }
  return signal / interference;
}

namespace {

constexpr std::uint64_t kSelectorKey = 0x5e1ec7ULL;

// Geometry and fading of one accepted realization. BSs are ranked by
// distance lazily: only as deep as a case-0 search actually looks. The draw
// order here defines the stream layout and is mirrored by draw_realization.
class Scene {
 public:
  std::uint64_t seed = 0;
  std::vector<Point> pts;        // generation order
  std::vector<double> power;     // |h|^2
  std::vector<double> cache_u;   // graphical offset
  std::vector<double> phase;     // ranks < M
  std::size_t requested = 1;
  double outer_sum = 0.0;        // received power summed over ranks >= M

  [[nodiscard]] std::size_t count() const { return pts.size(); }

  // Generation index of the BS with distance rank k.
  std::size_t index(std::size_t k) {
    if (k >= sorted_) extend(k + 1);
    return ranked_[k].second;
  }

  // Received power P r^-alpha of rank k.
  double rx(std::size_t k) { return rx_of(index(k)); }

  void rank(double half_alpha, std::size_t coop) {
    half_alpha_ = half_alpha;
    const std::size_t n = count();
    ranked_.resize(n);
    for (std::size_t i = 0; i < n; ++i) ranked_[i] = {std::max(squared_norm(pts[i]), 1e-12), static_cast<std::uint32_t>(i)};
    sorted_ = 0;
    extend(std::min(n, std::max<std::size_t>(coop, 16)));
    // Interference from everything outside the cooperative set, summed in
    // generation order so it does not depend on how far ranking went.
    std::vector<char> inner(n, 0);
    for (std::size_t k = 0; k < coop; ++k) inner[ranked_[k].second] = 1;
    outer_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!inner[i]) outer_sum += rx_of(i);
    }
  }

 private:
  double rx_of(std::size_t i) const {
    const double d2 = std::max(squared_norm(pts[i]), 1e-12);
    return power[i] * (half_alpha_ == 2.0 ? 1.0 / (d2 * d2) : std::pow(d2, -half_alpha_));
  }

  void extend(std::size_t upto) {
    const std::size_t n = ranked_.size();
    std::size_t target = std::min(n, std::max(upto, 2 * sorted_));
    auto first = ranked_.begin() + static_cast<std::ptrdiff_t>(sorted_);
    auto mid = ranked_.begin() + static_cast<std::ptrdiff_t>(target);
    if (target < n) std::nth_element(first, mid, ranked_.end());
    std::sort(first, mid);
    sorted_ = target;
  }

  double half_alpha_ = 2.0;
  std::vector<std::pair<double, std::uint32_t>> ranked_;
  std::size_t sorted_ = 0;
};

class SceneBuilder {
 public:
  SceneBuilder(const SimConfig& sim, const Catalog* catalog)
      : sim_(sim),
        M_(sim.net.coop_size),
        coord_(-sim.window_half_width, sim.window_half_width),
        count_(sim.net.bs_density * 4.0 * sim.window_half_width * sim.window_half_width) {
    if (catalog != nullptr) {
      request_ = std::discrete_distribution<std::size_t>(catalog->popularity.begin(), catalog->popularity.end());
    }
  }

  // Draws until the window holds at least M + 2 BSs; returns the number of
  // rejected attempts.
  std::size_t build(std::uint64_t index, Scene& s) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      s.seed = derive_seed(sim_.master_seed, index, attempt);
      std::mt19937_64 rng(s.seed);
      // The Poisson sampler caches a spare normal variate; a realization
      // must depend on its own substream only.
      count_.reset();
      const std::size_t n = count_(rng);
      if (n < M_ + 2) continue;
      s.pts.resize(n);
      s.power.resize(n);
      s.cache_u.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        s.pts[i].x = coord_(rng);
        s.pts[i].y = coord_(rng);
        s.power[i] = exp_(rng);
        s.cache_u[i] = unit_(rng);
      }
      s.rank(0.5 * sim_.net.alpha.value(), M_);
      s.phase.resize(M_);
      for (auto& ph : s.phase) ph = 2.0 * std::numbers::pi * unit_(rng);
      s.requested = request_.probabilities().size() > 1 ? request_(rng) + 1 : 1;
      return attempt;
    }
  }

 private:
  const SimConfig& sim_;
  std::size_t M_;
  std::uniform_real_distribution<double> coord_;
  std::poisson_distribution<std::size_t> count_;
  std::exponential_distribution<double> exp_{1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::discrete_distribution<std::size_t> request_;
};

// Cache membership for one policy within one scene, by rank.
class CacheView {
 public:
  CacheView(const CachePolicy& policy, const IidcSampler* sampler, const Catalog& catalog, Scene& scene)
      : policy_(policy), sampler_(sampler), catalog_(catalog), scene_(scene) {
    if (policy.kind == CachePolicy::Kind::IIDC) memo_.assign(scene.count(), {});
  }

  bool holds(std::size_t rank, std::size_t file) {
    const std::size_t i = scene_.index(rank);
    if (policy_.kind == CachePolicy::Kind::GRAPHICAL) return graphical_contains(policy_.placement, scene_.cache_u[i], file);
    auto& slot = memo_[i];
    if (slot.files.empty()) {
      std::mt19937_64 rng(derive_seed(scene_.seed, i));
      slot = (*sampler_)(rng);
    }
    return slot.contains(file);
  }

  [[nodiscard]] bool never_cached(std::size_t file) const {
    return policy_.kind == CachePolicy::Kind::GRAPHICAL ? !(policy_.placement[file - 1] > 0.0)
                                                         : !(catalog_.popularity[file - 1] > 0.0);
  }

 private:
  const CachePolicy& policy_;
  const IidcSampler* sampler_;
  const Catalog& catalog_;
  Scene& scene_;
  std::vector<CacheRealization> memo_;
};

struct LinkOutcome {
  bool miss = true;
  std::size_t case_m = 0;
  double signal_ncjt = 0.0;
  double signal_cjt = 0.0;
  double interference = 0.0;

  [[nodiscard]] double sir(Scheme scheme) const {
    if (miss) return 0.0;
    return (scheme == Scheme::NCJT ? signal_ncjt : signal_cjt) / interference;
  }
};

// Joint transmission from the ranks flagged in `mask` (all < M).
LinkOutcome cooperative_link(Scene& s, unsigned mask, std::size_t M) {
  LinkOutcome out;
  out.miss = false;
  std::complex<double> coherent{0.0, 0.0};
  double amplitude_sum = 0.0;
  for (std::size_t k = 0; k < M; ++k) {
    if (!(mask >> k & 1U)) continue;
    ++out.case_m;
    const double a = std::sqrt(s.rx(k));
    coherent += std::polar(a, s.phase[k]);
    amplitude_sum += a;
  }
  out.signal_ncjt = std::norm(coherent);
  out.signal_cjt = amplitude_sum * amplitude_sum;
  out.interference = s.outer_sum;
  return out;
}

// Case 0: the nearest holder of rank >= M serves alone.
LinkOutcome fallback_link(Scene& s, std::size_t rank) {
  LinkOutcome out;
  out.miss = false;
  out.signal_ncjt = out.signal_cjt = s.rx(rank);
  out.interference = s.outer_sum - out.signal_ncjt;
  return out;
}

LinkOutcome serve(Scene& s, CacheView& view, std::size_t file, std::size_t M) {
  unsigned mask = 0;
  for (std::size_t k = 0; k < M; ++k) {
    if (view.holds(k, file)) mask |= 1U << k;
  }
  if (mask != 0) return cooperative_link(s, mask, M);
  if (view.never_cached(file)) return {};
  for (std::size_t k = M; k < s.count(); ++k) {
    if (view.holds(k, file)) return fallback_link(s, k);
  }
  return {};
}

// Per-block sums of the per-realization values v_r and v_r^2.
struct BlockSums {
  std::vector<double> sum;
  std::vector<double> sum_sq;
  std::size_t rejected = 0;
  std::string trace;
};

constexpr std::size_t kBlock = 64;

template <class Body>
void run_blocks(std::size_t n_realizations, unsigned workers, std::vector<BlockSums>& blocks, Body&& body) {
  const std::size_t n_blocks = (n_realizations + kBlock - 1) / kBlock;
  blocks.assign(n_blocks, {});
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    try {
      for (std::size_t b = next++; b < n_blocks && !failed; b = next++) {
        const std::size_t lo = b * kBlock;
        const std::size_t hi = std::min(n_realizations, lo + kBlock);
        body(lo, hi, blocks[b]);
      }
    } catch (...) {
      if (!failed.exchange(true)) failure = std::current_exception();
    }
  };
  unsigned n_threads = workers != 0 ? workers : std::max(1U, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n_blocks));
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_threads; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

StpEstimate finish_estimate(double sum, double sum_sq, std::size_t n, RequestMode mode) {
  StpEstimate e;
  e.n = n;
  const double dn = static_cast<double>(n);
  e.mean = sum / dn;
  if (mode == RequestMode::SAMPLED) {
    e.std_error = std::sqrt(std::max(0.0, e.mean * (1.0 - e.mean)) / dn);
  } else {
    const double var = n > 1 ? std::max(0.0, (sum_sq - sum * sum / dn) / (dn - 1.0)) : 0.0;
    e.std_error = std::sqrt(var / dn);
  }
  return e;
}

void append_trace(std::string& out, std::uint64_t index, std::size_t file, const LinkOutcome& link, double sir_value,
                  bool success) {
  std::ostringstream row;
  row.precision(10);
  row << index << ',' << file << ',' << (link.miss ? -1 : static_cast<long>(link.case_m)) << ',';
  if (link.miss) {
    row << "-inf";
  } else {
    row << linear_to_db(sir_value);
  }
  row << ',' << (success ? 1 : 0) << '\n';
  out += row.str();
}

}  // namespace

StpGrid estimate_stp_grid(const Catalog& catalog, const SimConfig& sim, const SweepSpec& sweep, SimStats* stats,
                          std::ostream* trace) {
  sim.validate();
  if (sweep.policies.empty()) throw std::invalid_argument("simulator: no cache policy given");
  if (sweep.schemes.empty()) throw std::invalid_argument("simulator: no scheme given");
  for (auto s : sweep.schemes) require_simulable(s);
  if (catalog.popularity.size() != catalog.n_files || catalog.n_files == 0) {
    throw std::invalid_argument("simulator: malformed catalog");
  }
  for (const auto& p : sweep.policies) {
    if (p.kind == CachePolicy::Kind::GRAPHICAL && p.placement.size() != catalog.n_files) {
      throw std::invalid_argument("simulator: placement has " + std::to_string(p.placement.size()) +
                                  " entries but the catalog has " + std::to_string(catalog.n_files) + " files");
    }
    if (p.cache_size == 0 || p.cache_size >= catalog.n_files) {
      throw std::invalid_argument("simulator: cache size must satisfy 1 <= K < N");
    }
  }
  if (sim.net.coop_size > 31) throw std::invalid_argument("simulator: coop_size above 31 is not supported");
  std::vector<double> taus = sweep.thresholds;
  if (taus.empty()) taus.push_back(sim.net.sir_threshold);
  for (double t : taus) {
    if (!(t > 0.0)) throw std::invalid_argument("simulator: SIR thresholds must be > 0");
  }

  const std::size_t P = sweep.policies.size();
  const std::size_t S = sweep.schemes.size();
  const std::size_t T = taus.size();
  const std::size_t cells = P * S * T;
  const std::size_t M = sim.net.coop_size;
  const bool stratified = sim.request_mode == RequestMode::STRATIFIED;

  std::vector<BlockSums> blocks;
  run_blocks(sim.n_realizations, sim.workers, blocks, [&](std::size_t lo, std::size_t hi, BlockSums& out) {
    out.sum.assign(cells, 0.0);
    out.sum_sq.assign(cells, 0.0);
    SceneBuilder builder(sim, &catalog);
    Scene scene;
    std::vector<double> v(cells);
    std::vector<std::optional<IidcSampler>> samplers(P);
    for (std::size_t p = 0; p < P; ++p) {
      if (sweep.policies[p].kind == CachePolicy::Kind::IIDC) samplers[p].emplace(catalog, sweep.policies[p].cache_size);
    }
    for (std::size_t r = lo; r < hi; ++r) {
      out.rejected += builder.build(r, scene);
      std::fill(v.begin(), v.end(), 0.0);
      for (std::size_t p = 0; p < P; ++p) {
        CacheView view(sweep.policies[p], samplers[p] ? &*samplers[p] : nullptr, catalog, scene);
        const std::size_t first = stratified ? 1 : scene.requested;
        const std::size_t last = stratified ? catalog.n_files : scene.requested;
        for (std::size_t file = first; file <= last; ++file) {
          const double weight = stratified ? catalog.popularity[file - 1] : 1.0;
          const LinkOutcome link = serve(scene, view, file, M);
          for (std::size_t s = 0; s < S; ++s) {
            const double value = link.sir(sweep.schemes[s]);
            for (std::size_t t = 0; t < T; ++t) {
              const bool success = !link.miss && value >= taus[t];
              if (success) v[(p * S + s) * T + t] += weight;
              if (trace != nullptr && p == 0 && s == 0 && t == 0) append_trace(out.trace, r, file, link, value, success);
            }
          }
        }
      }
      for (std::size_t c = 0; c < cells; ++c) {
        out.sum[c] += v[c];
        out.sum_sq[c] += v[c] * v[c];
      }
    }
  });

  std::vector<double> sum(cells, 0.0);
  std::vector<double> sum_sq(cells, 0.0);
  std::size_t rejected = 0;
  if (trace != nullptr) *trace << "realization,file,case,sir_db,success\n";
  for (const auto& b : blocks) {
    for (std::size_t c = 0; c < cells; ++c) {
      sum[c] += b.sum[c];
      sum_sq[c] += b.sum_sq[c];
    }
    rejected += b.rejected;
    if (trace != nullptr) *trace << b.trace;
  }
  if (stats != nullptr) {
    stats->accepted = sim.n_realizations;
    stats->rejected = rejected;
  }

  StpGrid grid(P, S, T);
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t c = (p * S + s) * T + t;
        grid.at(p, s, t) = finish_estimate(sum[c], sum_sq[c], sim.n_realizations, sim.request_mode);
      }
    }
  }
  return grid;
}

StpEstimate estimate_stp(const PlacementVector& placement, const Catalog& catalog, const SimConfig& sim,
                         Scheme scheme) {
  SweepSpec sweep;
  sweep.policies.push_back(CachePolicy::graphical(placement));
  sweep.schemes.push_back(scheme);
  return estimate_stp_grid(catalog, sim, sweep).at(0, 0, 0);
}

StpEstimate estimate_conditional(std::size_t serving, double t, const SimConfig& sim, Scheme scheme) {
  sim.validate();
  require_simulable(scheme);
  const std::size_t M = sim.net.coop_size;
  if (serving > M) throw std::invalid_argument("estimate_conditional: serving count exceeds M");
  if (serving == 0 && !(t > 0.0 && t <= 1.0)) {
    throw std::invalid_argument("estimate_conditional: t must lie in (0, 1] when no cooperative BS holds the file");
  }
  if (M > 31) throw std::invalid_argument("estimate_conditional: coop_size above 31 is not supported");

  std::vector<BlockSums> blocks;
  run_blocks(sim.n_realizations, sim.workers, blocks, [&](std::size_t lo, std::size_t hi, BlockSums& out) {
    out.sum.assign(1, 0.0);
    out.sum_sq.assign(1, 0.0);
    SceneBuilder builder(sim, nullptr);
    Scene scene;
    std::vector<std::size_t> ranks(M);
    for (std::size_t r = lo; r < hi; ++r) {
      builder.build(r, scene);
      LinkOutcome link;
      if (serving > 0) {
        std::mt19937_64 pick(derive_seed(scene.seed, kSelectorKey));
        for (std::size_t k = 0; k < M; ++k) ranks[k] = k;
        std::shuffle(ranks.begin(), ranks.end(), pick);
        unsigned mask = 0;
        for (std::size_t k = 0; k < serving; ++k) mask |= 1U << ranks[k];
        link = cooperative_link(scene, mask, M);
      } else {
        for (std::size_t k = M; k < scene.count(); ++k) {
          if (scene.cache_u[scene.index(k)] < t) {
            link = fallback_link(scene, k);
            break;
          }
        }
      }
      const double value = link.miss || link.sir(scheme) < sim.net.sir_threshold ? 0.0 : 1.0;
      out.sum[0] += value;
      out.sum_sq[0] += value;
    }
  });
  double sum = 0.0;
  for (const auto& b : blocks) sum += b.sum[0];
  return finish_estimate(sum, sum, sim.n_realizations, RequestMode::SAMPLED);
}

Realization draw_realization(const CachePolicy& policy, const Catalog& catalog, const SimConfig& sim,
                             std::uint64_t index) {
  sim.validate();
  SceneBuilder builder(sim, &catalog);
  Scene s;
  builder.build(index, s);
  Realization real;
  real.bs_positions = s.pts;
  real.requested_file = s.requested;
  real.fading.resize(s.count());
  for (std::size_t i = 0; i < s.count(); ++i) real.fading[i] = std::sqrt(s.power[i]);
  for (std::size_t k = 0; k < sim.net.coop_size; ++k) {
    const std::size_t i = s.index(k);
    real.fading[i] = std::polar(std::sqrt(s.power[i]), s.phase[k]);
  }
  real.caches.resize(s.count());
  std::optional<IidcSampler> sampler;
  if (policy.kind == CachePolicy::Kind::IIDC) sampler.emplace(catalog, policy.cache_size);
  for (std::size_t i = 0; i < s.count(); ++i) {
    if (policy.kind == CachePolicy::Kind::GRAPHICAL) {
      real.caches[i] = sample_cache_graphical(policy.placement, s.cache_u[i]);
    } else {
      std::mt19937_64 rng(derive_seed(s.seed, i));
      real.caches[i] = (*sampler)(rng);
    }
  }
  return real;
}

}  // namespace stpcache
