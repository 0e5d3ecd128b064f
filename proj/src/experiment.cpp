#include "stpcache/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "stpcache/keyvalue.hpp"
#include "stpcache/random.hpp"

namespace stpcache {

namespace {

constexpr std::size_t kMaxCoop = 16;
constexpr std::size_t kIidcSamples = 200000;
constexpr std::uint64_t kIidcKey = 0x11dcULL;

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw std::invalid_argument(field + ": " + what);
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  return kv::format_number(v);
}

bool is_integer(double v) { return std::isfinite(v) && std::floor(v) == v; }

}  // namespace

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::TAU: return "tau";
    case SweepAxis::M: return "M";
    case SweepAxis::GAMMA: return "gamma";
    case SweepAxis::K: return "K";
    case SweepAxis::N: return "N";
  }
  return "?";
}

std::string_view to_string(PlacementSource source) {
  switch (source) {
    case PlacementSource::OPTIMAL: return "optimal";
    case PlacementSource::MPC: return "mpc";
    case PlacementSource::UDC: return "udc";
    case PlacementSource::IIDC: return "iidc";
    case PlacementSource::EXPLICIT: return "explicit";
  }
  return "?";
}

std::string_view to_string(Profile profile) { return profile == Profile::DESK ? "desk" : "paper"; }

Profile parse_profile(std::string_view name) {
  if (name == "desk") return Profile::DESK;
  if (name == "paper") return Profile::PAPER;
  throw std::invalid_argument("unknown profile '" + std::string(name) + "' (expected desk or paper)");
}

namespace {

SweepAxis parse_axis(std::string_view name) {
  for (auto a : {SweepAxis::TAU, SweepAxis::M, SweepAxis::GAMMA, SweepAxis::K, SweepAxis::N}) {
    if (to_string(a) == name) return a;
  }
  throw std::invalid_argument("unknown sweep axis '" + std::string(name) + "' (expected tau, M, gamma, K or N)");
}

PlacementSource parse_source(std::string_view name) {
  for (auto s : {PlacementSource::OPTIMAL, PlacementSource::MPC, PlacementSource::UDC, PlacementSource::IIDC,
                 PlacementSource::EXPLICIT}) {
    if (to_string(s) == name) return s;
  }
  throw std::invalid_argument("unknown placement source '" + std::string(name) +
                              "' (expected optimal, mpc, udc, iidc or explicit)");
}

// Column label of the swept quantity in CSV output.
std::string axis_column(SweepAxis axis) { return axis == SweepAxis::TAU ? "tau_db" : std::string(to_string(axis)); }

}  // namespace

void ExperimentConfig::validate() const {
  if (name.empty()) bad("experiment.name", "must not be empty");
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) {
      bad("experiment.name", "only letters, digits, '_', '-' and '.' are allowed");
    }
  }
  if (output_dir.empty()) bad("experiment.output_dir", "must not be empty");
  if (n_files < 2) bad("catalog.n_files", "must be >= 2");
  if (!(zipf_exponent >= 0.0) || !std::isfinite(zipf_exponent)) bad("catalog.zipf_exponent", "must be finite and >= 0");
  if (cache_size < 1 || cache_size >= n_files) bad("catalog.cache_size", "must satisfy 1 <= K < n_files");
  if (!(bs_density > 0.0) || !std::isfinite(bs_density)) bad("network.bs_density", "must be > 0");
  if (!(alpha > 2.0) || !std::isfinite(alpha)) bad("network.alpha", "must be finite and > 2");
  if (coop_sizes.empty()) bad("network.coop_size", "empty list");
  for (auto m : coop_sizes) {
    if (m < 1 || m > kMaxCoop) bad("network.coop_size", "each M must lie in 1.." + std::to_string(kMaxCoop));
  }
  if (std::set<std::size_t>(coop_sizes.begin(), coop_sizes.end()).size() != coop_sizes.size()) {
    bad("network.coop_size", "duplicate entries");
  }
  if (!std::isfinite(tau_db)) bad("network.tau", "must be finite");

  if (values.empty()) bad("sweep.values", "empty list");
  for (double v : values) {
    switch (axis) {
      case SweepAxis::TAU:
        if (!std::isfinite(v)) bad("sweep.values", "thresholds must be finite");
        break;
      case SweepAxis::M:
        if (!is_integer(v) || v < 1 || v > static_cast<double>(kMaxCoop)) {
          bad("sweep.values", "M values must be integers in 1.." + std::to_string(kMaxCoop));
        }
        break;
      case SweepAxis::GAMMA:
        if (!(v >= 0.0) || !std::isfinite(v)) bad("sweep.values", "gamma values must be finite and >= 0");
        break;
      case SweepAxis::K:
        if (!is_integer(v) || v < 1 || v >= static_cast<double>(n_files)) {
          bad("sweep.values", "K values must be integers with 1 <= K < n_files");
        }
        break;
      case SweepAxis::N:
        if (!is_integer(v) || v <= static_cast<double>(cache_size)) {
          bad("sweep.values", "N values must be integers greater than cache_size");
        }
        break;
    }
  }
  if (std::set<double>(values.begin(), values.end()).size() != values.size()) bad("sweep.values", "duplicate entries");
  if (axis == SweepAxis::M && coop_sizes.size() != 1) {
    bad("network.coop_size", "must be a single value when sweep.axis = \"M\"");
  }

  if (schemes.empty()) bad("run.schemes", "empty list");
  if (std::set<Scheme>(schemes.begin(), schemes.end()).size() != schemes.size()) bad("run.schemes", "duplicate entries");

  if (placement == PlacementSource::EXPLICIT) {
    if (explicit_vector.empty()) bad("placement.vector", "required when placement.source = \"explicit\"");
    if (axis == SweepAxis::N || axis == SweepAxis::K) {
      bad("placement.source", "an explicit vector cannot be combined with a sweep over N or K");
    }
    if (explicit_vector.size() != n_files) {
      bad("placement.vector", "has " + std::to_string(explicit_vector.size()) + " entries but catalog.n_files is " +
                                  std::to_string(n_files));
    }
    try {
      validate_placement(explicit_vector, cache_size);
    } catch (const std::invalid_argument& e) {
      bad("placement.vector", e.what());
    }
  } else if (!explicit_vector.empty()) {
    bad("placement.vector", "only allowed when placement.source = \"explicit\"");
  }

  if (n_realizations && *n_realizations < 100) bad("simulation.n_realizations", "must be >= 100");
  if (window_half_width && !(*window_half_width > 0.0 && std::isfinite(*window_half_width))) {
    bad("simulation.window_half_width", "must be > 0");
  }
  if (simulate) {
    std::size_t max_m = *std::max_element(coop_sizes.begin(), coop_sizes.end());
    if (axis == SweepAxis::M) max_m = static_cast<std::size_t>(*std::max_element(values.begin(), values.end()));
    NetworkConfig net;
    net.bs_density = bs_density;
    net.coop_size = max_m;
    try {
      simulator_settings(*this, net).validate();
    } catch (const std::invalid_argument& e) {
      bad("simulation", e.what());
    }
  }
}

ExperimentConfig parse_config(std::string_view text, const std::string& base_dir) {
  const auto doc = kv::Document::parse(text);
  static const std::set<std::pair<std::string, std::string>> known = {
      {"experiment", "name"},       {"experiment", "master_seed"}, {"experiment", "output_dir"},
      {"catalog", "n_files"},       {"catalog", "zipf_exponent"},  {"catalog", "cache_size"},
      {"network", "bs_density"},    {"network", "alpha"},          {"network", "coop_size"},
      {"network", "tau"},           {"sweep", "axis"},             {"sweep", "values"},
      {"run", "schemes"},           {"placement", "source"},       {"placement", "vector"},
      {"placement", "file"},        {"simulation", "enabled"},     {"simulation", "profile"},
      {"simulation", "n_realizations"}, {"simulation", "window_half_width"}, {"simulation", "request_mode"},
      {"simulation", "workers"}};
  for (const auto& e : doc.entries()) {
    if (!known.count({e.section, e.key})) {
      throw std::invalid_argument(kv::field_name(e) + " (line " + std::to_string(e.line) + "): unknown field");
    }
  }
  auto with_field = [](const kv::Entry& e, auto&& fn) {
    try {
      return fn();
    } catch (const std::invalid_argument& err) {
      const std::string msg = err.what();
      const std::string field = kv::field_name(e);
      if (msg.rfind(field, 0) == 0) throw;
      throw std::invalid_argument(field + " (line " + std::to_string(e.line) + "): " + msg);
    }
  };
  auto positive_size = [](const kv::Entry& e, long long v) {
    if (v < 0) throw std::invalid_argument(kv::field_name(e) + ": must be >= 0");
    return static_cast<std::size_t>(v);
  };

  ExperimentConfig c;
  if (const auto* e = doc.find("experiment", "name")) c.name = kv::to_string(*e);
  if (const auto* e = doc.find("experiment", "master_seed")) c.master_seed = kv::to_u64(*e);
  if (const auto* e = doc.find("experiment", "output_dir")) c.output_dir = kv::to_string(*e);
  if (const auto* e = doc.find("catalog", "n_files")) c.n_files = positive_size(*e, kv::to_integer(*e));
  if (const auto* e = doc.find("catalog", "zipf_exponent")) c.zipf_exponent = kv::to_number(*e);
  if (const auto* e = doc.find("catalog", "cache_size")) c.cache_size = positive_size(*e, kv::to_integer(*e));
  if (const auto* e = doc.find("network", "bs_density")) c.bs_density = kv::to_number(*e);
  if (const auto* e = doc.find("network", "alpha")) c.alpha = kv::to_number(*e);
  if (const auto* e = doc.find("network", "coop_size")) {
    c.coop_sizes.clear();
    for (const auto& tok : kv::to_list(*e)) c.coop_sizes.push_back(positive_size(*e, kv::to_integer(tok, *e)));
  }
  if (const auto* e = doc.find("network", "tau")) c.tau_db = kv::to_decibels(e->value, *e);
  if (const auto* e = doc.find("sweep", "axis")) c.axis = with_field(*e, [&] { return parse_axis(kv::to_string(*e)); });
  if (const auto* e = doc.find("sweep", "values")) {
    for (const auto& tok : kv::to_list(*e)) {
      c.values.push_back(c.axis == SweepAxis::TAU ? kv::to_decibels(tok, *e) : kv::to_number(tok, *e));
    }
  }
  if (const auto* e = doc.find("run", "schemes")) {
    c.schemes.clear();
    for (const auto& tok : kv::to_list(*e)) {
      kv::Entry item = *e;
      item.value = tok;
      c.schemes.push_back(with_field(*e, [&] { return parse_scheme(kv::to_string(item)); }));
    }
  }
  if (const auto* e = doc.find("placement", "source")) {
    c.placement = with_field(*e, [&] { return parse_source(kv::to_string(*e)); });
  }
  const auto* vec = doc.find("placement", "vector");
  const auto* file = doc.find("placement", "file");
  if (vec != nullptr && file != nullptr) {
    throw std::invalid_argument("placement.file: give either placement.vector or placement.file, not both");
  }
  if (vec != nullptr) {
    for (const auto& tok : kv::to_list(*vec)) c.explicit_vector.push_back(kv::to_number(tok, *vec));
  }
  if (file != nullptr) {
    std::string path = kv::to_string(*file);
    if (!path.empty() && path.front() != '/') path = base_dir + "/" + path;
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("placement.file: cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const PlacementVector p = with_field(*file, [&] { return parse_placement(buf.str()); });
    c.explicit_vector.assign(p.probs().begin(), p.probs().end());
    if (p.cache_size() != c.cache_size) {
      throw std::invalid_argument("placement.file: cache size " + std::to_string(p.cache_size()) +
                                  " differs from catalog.cache_size " + std::to_string(c.cache_size));
    }
  }
  if (const auto* e = doc.find("simulation", "enabled")) {
    if (e->value == "true") {
      c.simulate = true;
    } else if (e->value == "false") {
      c.simulate = false;
    } else {
      throw std::invalid_argument("simulation.enabled (line " + std::to_string(e->line) + "): expected true or false");
    }
  }
  if (const auto* e = doc.find("simulation", "profile")) {
    c.profile = with_field(*e, [&] { return parse_profile(kv::to_string(*e)); });
  }
  if (const auto* e = doc.find("simulation", "n_realizations")) c.n_realizations = positive_size(*e, kv::to_integer(*e));
  if (const auto* e = doc.find("simulation", "window_half_width")) c.window_half_width = kv::to_number(*e);
  if (const auto* e = doc.find("simulation", "request_mode")) {
    c.request_mode = with_field(*e, [&] { return parse_request_mode(kv::to_string(*e)); });
  }
  if (const auto* e = doc.find("simulation", "workers")) {
    c.workers = static_cast<unsigned>(positive_size(*e, kv::to_integer(*e)));
  }
  c.validate();
  return c;
}

std::string serialize_config(const ExperimentConfig& c) {
  auto list = [](const auto& xs, auto&& fmt) {
    std::string s = "[";
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt(xs[i]);
    return s + "]";
  };
  auto quoted = [](std::string_view v) { return "\"" + std::string(v) + "\""; };
  std::ostringstream out;
  out << "[experiment]\n"
      << "name = " << quoted(c.name) << "\n"
      << "master_seed = " << c.master_seed << "\n"
      << "output_dir = " << quoted(c.output_dir) << "\n\n"
      << "[catalog]\n"
      << "n_files = " << c.n_files << "\n"
      << "zipf_exponent = " << num(c.zipf_exponent) << "\n"
      << "cache_size = " << c.cache_size << "\n\n"
      << "[network]\n"
      << "bs_density = " << num(c.bs_density) << "\n"
      << "alpha = " << num(c.alpha) << "\n"
      << "coop_size = " << list(c.coop_sizes, [](std::size_t m) { return std::to_string(m); }) << "\n"
      << "tau = " << num(c.tau_db) << "dB\n\n"
      << "[sweep]\n"
      << "axis = " << quoted(to_string(c.axis)) << "\n"
      << "values = "
      << list(c.values, [&](double v) { return c.axis == SweepAxis::TAU ? num(v) + "dB" : num(v); }) << "\n\n"
      << "[run]\n"
      << "schemes = " << list(c.schemes, [&](Scheme s) { return quoted(to_string(s)); }) << "\n\n"
      << "[placement]\n"
      << "source = " << quoted(to_string(c.placement)) << "\n";
  if (!c.explicit_vector.empty()) out << "vector = " << list(c.explicit_vector, num) << "\n";
  out << "\n[simulation]\n"
      << "enabled = " << (c.simulate ? "true" : "false") << "\n"
      << "profile = " << quoted(to_string(c.profile)) << "\n";
  if (c.n_realizations) out << "n_realizations = " << *c.n_realizations << "\n";
  if (c.window_half_width) out << "window_half_width = " << num(*c.window_half_width) << "\n";
  out << "request_mode = " << quoted(to_string(c.request_mode)) << "\n"
      << "workers = " << c.workers << "\n";
  return out.str();
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const auto slash = path.find_last_of('/');
  return parse_config(buf.str(), slash == std::string::npos ? "." : path.substr(0, slash));
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  // Neither the output location nor the worker count changes the results.
  ExperimentConfig c = config;
  c.output_dir = "-";
  c.workers = 0;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(c)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> preset_names() {
  return {"fig2", "fig3", "fig4a", "fig4b", "fig5", "fig6a", "fig6b", "fig6c", "fig6d", "fig6e"};
}

ExperimentConfig preset(std::string_view name) {
  ExperimentConfig c;
  c.name = std::string(name);
  c.output_dir = "out/" + c.name;
  c.bs_density = 0.01;
  c.alpha = 4.0;
  const std::vector<double> tau_grid{-10, -5, 0, 5, 10};
  auto small_catalog = [&] {
    c.n_files = 8;
    c.cache_size = 3;
    c.zipf_exponent = 2.0;
  };
  auto large_catalog = [&] {
    c.n_files = 100;
    c.cache_size = 25;
    c.zipf_exponent = 0.8;
    c.coop_sizes = {3};
    c.tau_db = 0.0;
    c.schemes = {Scheme::NCJT, Scheme::CJT_APPROX};
    c.placement = PlacementSource::OPTIMAL;
  };
  if (name == "fig2" || name == "fig3") {
    small_catalog();
    c.axis = SweepAxis::TAU;
    c.values = tau_grid;
    c.placement = PlacementSource::EXPLICIT;
    c.explicit_vector = {0.9, 0.8, 0.6, 0.4, 0.2, 0.1, 0.0, 0.0};
    if (name == "fig2") {
      c.coop_sizes = {1, 2, 3};
      c.schemes = {Scheme::NCJT};
    } else {
      c.coop_sizes = {2, 3};
      c.schemes = {Scheme::CJT_UPPER, Scheme::CJT_APPROX};
    }
  } else if (name == "fig4a") {
    small_catalog();
    c.axis = SweepAxis::M;
    c.values = {1, 2, 3, 4, 5};
    c.coop_sizes = {1};
    c.tau_db = 0.0;
    c.schemes = {Scheme::NCJT, Scheme::CJT_APPROX};
    c.placement = PlacementSource::OPTIMAL;
  } else if (name == "fig4b" || name == "fig5") {
    small_catalog();
    c.axis = SweepAxis::TAU;
    c.values = tau_grid;
    c.coop_sizes = {3};
    c.schemes = {Scheme::NCJT, Scheme::CJT_APPROX};
    c.placement = PlacementSource::OPTIMAL;
    if (name == "fig5") c.simulate = false;
  } else if (name == "fig6a") {
    large_catalog();
    c.axis = SweepAxis::M;
    c.values = {1, 2, 3, 4, 5};
    c.coop_sizes = {1};
  } else if (name == "fig6b") {
    large_catalog();
    c.axis = SweepAxis::TAU;
    c.values = {-15, -10, -5, 0, 5, 10};
  } else if (name == "fig6c") {
    large_catalog();
    c.axis = SweepAxis::GAMMA;
    c.values = {0.4, 0.6, 0.8, 1.0, 1.2, 1.4};
  } else if (name == "fig6d") {
    large_catalog();
    c.axis = SweepAxis::K;
    c.values = {10, 15, 20, 25, 30, 35};
  } else if (name == "fig6e") {
    large_catalog();
    c.axis = SweepAxis::N;
    c.values = {60, 80, 100, 120, 140};
  } else {
    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown preset '" + std::string(name) + "' (known: " + known + ")");
  }
  c.validate();
  return c;
}

SimConfig simulator_settings(const ExperimentConfig& config, const NetworkConfig& net) {
  SimConfig sim;
  sim.net = net;
  sim.window_half_width = config.profile == Profile::DESK ? 300.0 : 500.0;
  sim.n_realizations = config.profile == Profile::DESK ? 20000 : 100000;
  if (config.window_half_width) sim.window_half_width = *config.window_half_width;
  if (config.n_realizations) sim.n_realizations = *config.n_realizations;
  sim.master_seed = config.master_seed;
  sim.request_mode = config.request_mode;
  sim.workers = config.workers;
  return sim;
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& config) {
  config.validate();
  std::vector<SweepPoint> out;
  for (double v : config.values) {
    const std::vector<std::size_t> series =
        config.axis == SweepAxis::M ? std::vector<std::size_t>{static_cast<std::size_t>(v)} : config.coop_sizes;
    for (std::size_t m : series) {
      SweepPoint p;
      p.value = v;
      p.coop_size = m;
      p.net.bs_density = config.bs_density;
      p.net.alpha = PathLossExponent(config.alpha);
      p.net.coop_size = m;
      p.net.sir_threshold = db_to_linear(config.axis == SweepAxis::TAU ? v : config.tau_db);
      const std::size_t n = config.axis == SweepAxis::N ? static_cast<std::size_t>(v) : config.n_files;
      const double gamma = config.axis == SweepAxis::GAMMA ? v : config.zipf_exponent;
      p.cache_size = config.axis == SweepAxis::K ? static_cast<std::size_t>(v) : config.cache_size;
      p.catalog = zipf_popularity(n, gamma);
      out.push_back(std::move(p));
    }
  }
  return out;
}

namespace {

bool analytic_scheme(Scheme s) { return s != Scheme::CJT_EXACT; }

// Monte Carlo counterpart of an analytic scheme.
Scheme simulated_scheme(Scheme s) { return s == Scheme::NCJT ? Scheme::NCJT : Scheme::CJT_EXACT; }

// Objective used to optimize placements for a scheme.
Scheme objective_scheme(Scheme s) { return s == Scheme::CJT_EXACT ? Scheme::CJT_APPROX : s; }

void require_analytic(const ExperimentConfig& config, std::string_view command) {
  for (auto s : config.schemes) {
    if (!analytic_scheme(s)) {
      throw std::invalid_argument("run.schemes: " + std::string(command) +
                                  " needs an analytic objective; cjt_exact is simulation only, use cjt_approx");
    }
  }
}

// Per-point cache of analytic models, keyed by scheme.
class ModelCache {
 public:
  explicit ModelCache(const NetworkConfig& net) : net_(net) {}

  const FileStpModel& get(Scheme s) {
    auto it = models_.find(s);
    if (it == models_.end()) it = models_.emplace(s, FileStpModel(s, net_)).first;
    return it->second;
  }

 private:
  NetworkConfig net_;
  std::map<Scheme, FileStpModel> models_;
};

struct Strategy {
  std::string name;
  PlacementVector marginals;  // analytic input
  CachePolicy policy;         // simulator input
};

Strategy make_strategy(PlacementSource source, const SweepPoint& pt, const ExperimentConfig& config,
                       ModelCache& models, Scheme scheme) {
  Strategy s;
  s.name = std::string(to_string(source));
  switch (source) {
    case PlacementSource::OPTIMAL:
      s.marginals = optimize_placement(pt.catalog, pt.cache_size, models.get(objective_scheme(scheme))).t_star;
      break;
    case PlacementSource::MPC: s.marginals = baseline_mpc(pt.catalog, pt.cache_size); break;
    case PlacementSource::UDC: s.marginals = baseline_udc(pt.catalog, pt.cache_size); break;
    case PlacementSource::IIDC:
      s.marginals =
          iidc_marginals(pt.catalog, pt.cache_size, kIidcSamples, derive_seed(config.master_seed, kIidcKey));
      s.policy = CachePolicy::iidc(pt.cache_size);
      return s;
    case PlacementSource::EXPLICIT: s.marginals = validate_placement(config.explicit_vector, pt.cache_size); break;
  }
  s.policy = CachePolicy::graphical(s.marginals);
  return s;
}

// Runs one Monte Carlo pass over the given policies, simulating only the
// schemes that are needed.
struct McPass {
  StpGrid grid;
  std::vector<Scheme> schemes;

  [[nodiscard]] StpEstimate at(std::size_t policy, Scheme analytic, std::size_t threshold = 0) const {
    const Scheme s = simulated_scheme(analytic);
    const auto idx = static_cast<std::size_t>(std::find(schemes.begin(), schemes.end(), s) - schemes.begin());
    return grid.at(policy, idx, threshold);
  }
};

McPass simulate(const ExperimentConfig& config, const SweepPoint& pt, std::vector<CachePolicy> policies,
              std::vector<double> thresholds = {}) {
  McPass pass;
  for (auto s : config.schemes) {
    const Scheme sim = simulated_scheme(s);
    if (std::find(pass.schemes.begin(), pass.schemes.end(), sim) == pass.schemes.end()) pass.schemes.push_back(sim);
  }
  SweepSpec spec;
  spec.policies = std::move(policies);
  spec.schemes = pass.schemes;
  spec.thresholds = thresholds.empty() ? std::vector<double>{pt.net.sir_threshold} : std::move(thresholds);
  pass.grid = estimate_stp_grid(pt.catalog, simulator_settings(config, pt.net), spec);
  return pass;
}

std::string csv_preamble(const ExperimentConfig& config, std::string_view kind) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(config)));
  return "# stpcache-csv v1 kind=" + std::string(kind) + " axis=" + std::string(to_string(config.axis)) +
         " config=" + config.name + " config_hash=" + hash + " seed=" + std::to_string(config.master_seed) + "\n";
}

}  // namespace

std::vector<CurveRow> run_curve(const ExperimentConfig& config) {
  config.validate();
  std::vector<CurveRow> rows;
  // A fixed placement under a tau sweep: every threshold is scored on the
  // same realizations, so one pass per M serves the whole sweep.
  const bool shared_tau = config.axis == SweepAxis::TAU && config.placement != PlacementSource::OPTIMAL;
  std::vector<double> all_thresholds;
  for (double v : config.values) all_thresholds.push_back(db_to_linear(v));
  std::map<std::size_t, McPass> shared;
  for (const auto& pt : sweep_points(config)) {
    ModelCache models(pt.net);
    // Placements may differ per scheme (optimal); share identical ones.
    std::vector<Strategy> strategies;
    std::vector<std::size_t> strategy_of;
    for (auto s : config.schemes) {
      if (config.placement != PlacementSource::OPTIMAL && !strategies.empty()) {
        strategy_of.push_back(0);
        continue;
      }
      Strategy st = make_strategy(config.placement, pt, config, models, s);
      std::size_t idx = strategies.size();
      for (std::size_t i = 0; i < strategies.size(); ++i) {
        const auto a = strategies[i].marginals.probs();
        const auto b = st.marginals.probs();
        if (std::equal(a.begin(), a.end(), b.begin(), b.end())) idx = i;
      }
      if (idx == strategies.size()) strategies.push_back(std::move(st));
      strategy_of.push_back(idx);
    }
    std::optional<McPass> mc;
    std::size_t threshold = 0;
    if (config.simulate) {
      std::vector<CachePolicy> policies;
      for (const auto& st : strategies) policies.push_back(st.policy);
      if (shared_tau) {
        threshold = static_cast<std::size_t>(std::find(config.values.begin(), config.values.end(), pt.value) -
                                             config.values.begin());
        auto it = shared.find(pt.coop_size);
        if (it == shared.end()) {
          it = shared.emplace(pt.coop_size, simulate(config, pt, std::move(policies), all_thresholds)).first;
        }
        mc = it->second;
      } else {
        mc = simulate(config, pt, std::move(policies));
      }
    }
    for (std::size_t i = 0; i < config.schemes.size(); ++i) {
      const Scheme s = config.schemes[i];
      CurveRow row;
      row.value = pt.value;
      row.coop_size = pt.coop_size;
      row.scheme = s;
      if (analytic_scheme(s)) row.analytic = models.get(s).q_total(strategies[strategy_of[i]].marginals, pt.catalog);
      if (mc) row.mc = mc->at(strategy_of[i], s, threshold);
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<OptimizeRow> run_optimize(const ExperimentConfig& config) {
  config.validate();
  require_analytic(config, "optimize");
  std::vector<OptimizeRow> rows;
  for (const auto& pt : sweep_points(config)) {
    for (auto s : config.schemes) {
      const FileStpModel model(s, pt.net);
      rows.push_back({pt.value, pt.coop_size, s, optimize_placement(pt.catalog, pt.cache_size, model)});
    }
  }
  return rows;
}

std::vector<CompareRow> run_baseline_comparison(const ExperimentConfig& config) {
  config.validate();
  require_analytic(config, "compare");
  std::vector<CompareRow> rows;
  const std::vector<PlacementSource> baselines{PlacementSource::MPC, PlacementSource::IIDC, PlacementSource::UDC};
  for (const auto& pt : sweep_points(config)) {
    ModelCache models(pt.net);
    // Policies: one optimal placement per scheme, then the shared baselines.
    std::vector<Strategy> strategies;
    for (auto s : config.schemes) strategies.push_back(make_strategy(PlacementSource::OPTIMAL, pt, config, models, s));
    for (auto b : baselines) strategies.push_back(make_strategy(b, pt, config, models, Scheme::NCJT));
    std::optional<McPass> mc;
    if (config.simulate) {
      std::vector<CachePolicy> policies;
      for (const auto& st : strategies) policies.push_back(st.policy);
      mc = simulate(config, pt, std::move(policies));
    }
    for (std::size_t i = 0; i < config.schemes.size(); ++i) {
      const Scheme s = config.schemes[i];
      const FileStpModel& model = models.get(s);
      std::vector<std::size_t> used{i};
      for (std::size_t b = 0; b < baselines.size(); ++b) used.push_back(config.schemes.size() + b);
      for (auto idx : used) {
        CompareRow row;
        row.value = pt.value;
        row.coop_size = pt.coop_size;
        row.scheme = s;
        row.strategy = strategies[idx].name;
        row.analytic = model.q_total(strategies[idx].marginals, pt.catalog);
        if (mc) row.mc = mc->at(idx, s);
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::string curve_csv(const ExperimentConfig& config, const std::vector<CurveRow>& rows) {
  std::string out = csv_preamble(config, "curve");
  out += axis_column(config.axis) + ",coop_size,scheme,analytic,mc_mean,mc_stderr\n";
  for (const auto& r : rows) {
    out += num(r.value) + "," + std::to_string(r.coop_size) + "," + std::string(to_string(r.scheme)) + "," +
           (r.analytic ? num(*r.analytic) : "nan") + "," + (r.mc ? num(r.mc->mean) : "nan") + "," +
           (r.mc ? num(r.mc->std_error) : "nan") + "\n";
  }
  return out;
}

std::string optimize_csv(const ExperimentConfig& config, const std::vector<OptimizeRow>& rows) {
  std::size_t width = 0;
  for (const auto& r : rows) width = std::max(width, r.result.t_star.size());
  std::string out = csv_preamble(config, "optimize");
  out += axis_column(config.axis) + ",coop_size,scheme,method,concavity_holds,nu,kkt_residual,stp,sum_t";
  for (std::size_t n = 1; n <= width; ++n) out += ",t" + std::to_string(n);
  out += "\n";
  for (const auto& r : rows) {
    const auto& res = r.result;
    double sum = 0.0;
    for (double t : res.t_star.probs()) sum += t;
    out += num(r.value) + "," + std::to_string(r.coop_size) + "," + std::string(to_string(r.scheme)) + "," +
           std::string(to_string(res.method)) + "," + (res.concavity_holds ? "1" : "0") + "," + num(res.nu) + "," +
           num(res.kkt_residual) + "," + num(res.stp) + "," + num(sum);
    for (std::size_t n = 0; n < width; ++n) out += "," + (n < res.t_star.size() ? num(res.t_star[n]) : "nan");
    out += "\n";
  }
  return out;
}

std::string compare_csv(const ExperimentConfig& config, const std::vector<CompareRow>& rows) {
  std::string out = csv_preamble(config, "compare");
  out += axis_column(config.axis) + ",coop_size,scheme,strategy,analytic,mc_mean,mc_stderr\n";
  for (const auto& r : rows) {
    out += num(r.value) + "," + std::to_string(r.coop_size) + "," + std::string(to_string(r.scheme)) + "," +
           r.strategy + "," + num(r.analytic) + "," + (r.mc ? num(r.mc->mean) : "nan") + "," +
           (r.mc ? num(r.mc->std_error) : "nan") + "\n";
  }
  return out;
}

std::string placement_file_name(const ExperimentConfig& config, const OptimizeRow& row) {
  return config.name + "_" + std::string(to_string(config.axis)) + num(row.value) + "_M" +
         std::to_string(row.coop_size) + "_" + std::string(to_string(row.scheme)) + ".placement";
}

// ---- plotting ----

namespace {

struct CsvTable {
  std::map<std::string, std::string> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::invalid_argument("plots: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto p = line.find(sep, start);
    out.push_back(line.substr(start, p == std::string::npos ? std::string::npos : p - start));
    if (p == std::string::npos) return out;
    start = p + 1;
  }
}

CsvTable read_csv(std::string_view text) {
  CsvTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("# stpcache-csv v1", 0) != 0) {
    throw std::invalid_argument("plots: not a stpcache CSV (first line must start with '# stpcache-csv v1')");
  }
  for (const auto& tok : split(line.substr(2), ' ')) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) t.meta[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  if (!t.meta.count("kind")) throw std::invalid_argument("plots: header comment lacks kind=");
  if (!std::getline(in, line) || line.empty()) throw std::invalid_argument("plots: missing column header line");
  t.header = split(line, ',');
  int line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != t.header.size()) {
      throw std::invalid_argument("plots: line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                  " fields, expected " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (t.rows.empty()) throw std::invalid_argument("plots: no data rows");
  return t;
}

std::string axis_label(const std::string& axis) {
  if (axis == "tau") return "SIR threshold {/Symbol t} (dB)";
  if (axis == "M") return "cooperative BSs M";
  if (axis == "gamma") return "Zipf exponent {/Symbol g}";
  if (axis == "K") return "cache size K";
  if (axis == "N") return "number of files N";
  throw std::invalid_argument("plots: unknown axis '" + axis + "'");
}

// Groups rows by a key, keeping first-appearance order.
template <class KeyFn>
std::vector<std::pair<std::string, std::vector<std::size_t>>> group_rows(const CsvTable& t, KeyFn key) {
  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const std::string k = key(t.rows[i]);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == k; });
    if (it == groups.end()) {
      groups.push_back({k, {i}});
    } else {
      it->second.push_back(i);
    }
  }
  return groups;
}

bool all_nan(const CsvTable& t, const std::vector<std::size_t>& rows, std::size_t col) {
  return std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return t.rows[r][col] == "nan"; });
}

std::string preamble(const CsvTable& t, std::string_view image, const std::string& xlabel, const std::string& ylabel) {
  std::string s;
  s += "# gnuplot script for " + t.meta.at("kind") + " data of config '" +
       (t.meta.count("config") ? t.meta.at("config") : std::string("?")) + "'";
  if (t.meta.count("config_hash")) s += " (config_hash " + t.meta.at("config_hash") + ")";
  s += "\nset terminal pngcairo size 960,640 enhanced\n";
  s += "set output \"" + std::string(image) + "\"\n";
  s += "set datafile separator \",\"\nset datafile missing \"nan\"\n";
  s += "set grid\nset key outside right top\n";
  s += "set xlabel \"" + xlabel + "\"\nset ylabel \"" + ylabel + "\"\n";
  return s;
}

}  // namespace

std::string emit_plots(std::string_view csv_text, std::string_view image_name) {
  const CsvTable t = read_csv(csv_text);
  const std::string kind = t.meta.at("kind");
  const std::string axis = t.meta.count("axis") ? t.meta.at("axis") : "";
  const std::string xcol = axis == "tau" ? "tau_db" : axis;
  std::string script;
  std::string blocks;
  std::vector<std::string> plots;
  int block_id = 0;

  auto add_series = [&](const std::string& title, const std::vector<std::size_t>& rows, std::size_t x,
                        std::size_t analytic, std::optional<std::size_t> mean, std::optional<std::size_t> se) {
    const std::string name = "$d" + std::to_string(++block_id);
    blocks += name + " << EOD\n";
    for (auto r : rows) {
      blocks += t.rows[r][x] + "," + t.rows[r][analytic];
      if (mean) blocks += "," + t.rows[r][*mean] + "," + t.rows[r][*se];
      blocks += "\n";
    }
    blocks += "EOD\n";
    const int color = block_id;
    if (!all_nan(t, rows, analytic)) {
      plots.push_back(name + " using 1:2 with lines lw 2 lc " + std::to_string(color) + " title \"" + title +
                      " (analytic)\"");
    }
    if (mean && !all_nan(t, rows, *mean)) {
      plots.push_back(name + " using 1:3:4 with yerrorbars pt 7 lc " + std::to_string(color) + " title \"" + title +
                      " (MC)\"");
    }
  };

  if (kind == "curve") {
    const std::size_t x = t.column(xcol);
    const std::size_t m = t.column("coop_size");
    const std::size_t s = t.column("scheme");
    const std::size_t an = t.column("analytic");
    const std::size_t mean = t.column("mc_mean");
    const std::size_t se = t.column("mc_stderr");
    script = preamble(t, image_name, axis_label(axis), "STP");
    for (const auto& [key, rows] : group_rows(t, [&](const auto& f) { return "M=" + f[m] + " " + f[s]; })) {
      add_series(key, rows, x, an, mean, se);
    }
  } else if (kind == "compare") {
    const std::size_t x = t.column(xcol);
    const std::size_t s = t.column("scheme");
    const std::size_t st = t.column("strategy");
    const std::size_t an = t.column("analytic");
    const std::size_t mean = t.column("mc_mean");
    const std::size_t se = t.column("mc_stderr");
    (void)t.column("coop_size");
    script = preamble(t, image_name, axis_label(axis), "STP");
    for (const auto& [key, rows] : group_rows(t, [&](const auto& f) { return f[st] + " " + f[s]; })) {
      add_series(key, rows, x, an, mean, se);
    }
  } else if (kind == "optimize") {
    const std::size_t x = t.column(xcol);
    const std::size_t m = t.column("coop_size");
    const std::size_t s = t.column("scheme");
    (void)t.column("sum_t");
    std::vector<std::size_t> tcols;
    for (std::size_t n = 1;; ++n) {
      const auto it = std::find(t.header.begin(), t.header.end(), "t" + std::to_string(n));
      if (it == t.header.end()) break;
      tcols.push_back(static_cast<std::size_t>(it - t.header.begin()));
    }
    if (tcols.empty()) throw std::invalid_argument("plots: missing column 't1'");
    script = preamble(t, image_name, "file index n", "placement probability T_n");
    script += "set yrange [0:1.05]\n";
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      const auto& f = t.rows[r];
      const std::string name = "$d" + std::to_string(++block_id);
      blocks += name + " << EOD\n";
      for (std::size_t n = 0; n < tcols.size(); ++n) {
        if (f[tcols[n]] != "nan") blocks += std::to_string(n + 1) + "," + f[tcols[n]] + "\n";
      }
      blocks += "EOD\n";
      plots.push_back(name + " using 1:2 with linespoints lw 2 lc " + std::to_string(block_id) + " title \"" + xcol +
                      "=" + f[x] + " M=" + f[m] + " " + f[s] + "\"");
    }
  } else {
    throw std::invalid_argument("plots: unknown kind '" + kind + "'");
  }

  script += blocks;
  script += "plot ";
  for (std::size_t i = 0; i < plots.size(); ++i) script += (i ? ", \\\n     " : "") + plots[i];
  script += "\n";
  return script;
}

}  // namespace stpcache
