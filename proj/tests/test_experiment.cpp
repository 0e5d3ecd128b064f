#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "stpcache/experiment.hpp"

using namespace stpcache;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

std::string error_of(std::string_view text) {
  try {
    (void)parse_config(text);
  } catch (const std::invalid_argument& e) {
    return e.what();
  }
  return "";
}

// A fast explicit-placement experiment.
ExperimentConfig tiny() {
  ExperimentConfig c = preset("fig2");
  c.name = "tiny";
  c.coop_sizes = {1, 2};
  c.values = {-5.0, 5.0};
  c.schemes = {Scheme::NCJT, Scheme::CJT_APPROX};
  c.n_realizations = 300;
  c.window_half_width = 100.0;
  return c;
}

}  // namespace

TEST_CASE("presets round-trip through the text form") {
  for (const auto& name : preset_names()) {
    const auto c = preset(name);
    const auto text = serialize_config(c);
    CAPTURE(name);
    CHECK(parse_config(text) == c);
    CHECK(serialize_config(parse_config(text)) == text);
  }
  CHECK_THROWS_AS(preset("fig7"), std::invalid_argument);
}

TEST_CASE("shipped config files equal their presets") {
  for (const auto& name : preset_names()) {
    const std::string path = std::string(STPCACHE_SOURCE_DIR) + "/configs/" + name + ".toml";
    CAPTURE(path);
    REQUIRE(std::filesystem::exists(path));
    CHECK(load_config(path) == preset(name));
  }
}

TEST_CASE("presets carry the figure parameters") {
  const auto f2 = preset("fig2");
  CHECK(f2.n_files == 8);
  CHECK(f2.cache_size == 3);
  CHECK(f2.zipf_exponent == 2.0);
  CHECK(f2.bs_density == 0.01);
  CHECK(f2.explicit_vector == std::vector<double>{0.9, 0.8, 0.6, 0.4, 0.2, 0.1, 0.0, 0.0});
  CHECK(f2.coop_sizes == std::vector<std::size_t>{1, 2, 3});
  for (const char* name : {"fig6a", "fig6b", "fig6c", "fig6d", "fig6e"}) {
    const auto c = preset(name);
    CHECK(c.placement == PlacementSource::OPTIMAL);
    CHECK(c.n_files == 100);
    CHECK(c.cache_size == 25);
    CHECK(c.zipf_exponent == 0.8);
  }
  CHECK(preset("fig6e").axis == SweepAxis::N);
}

TEST_CASE("config with every optional field round-trips") {
  const std::string text = R"(
[experiment]
name = "full"
master_seed = 18446744073709551615
output_dir = "runs/full"
[catalog]
n_files = 5
zipf_exponent = 0.75
cache_size = 2
[network]
bs_density = 0.002
alpha = 3.5
coop_size = 2
tau = -3dB
[sweep]
axis = "gamma"
values = [0.5, 1, 1.5]
[run]
schemes = ["cjt_exact", "ncjt"]
[placement]
source = "iidc"
[simulation]
enabled = false
profile = "paper"
n_realizations = 1234
window_half_width = 250
request_mode = "sampled"
workers = 2
)";
  const auto c = parse_config(text);
  CHECK(c.master_seed == 18446744073709551615ULL);
  CHECK(c.tau_db == -3.0);
  CHECK(c.alpha == 3.5);
  CHECK(c.schemes == std::vector<Scheme>{Scheme::CJT_EXACT, Scheme::NCJT});
  CHECK(c.n_realizations == 1234u);
  CHECK(c.request_mode == RequestMode::SAMPLED);
  CHECK(parse_config(serialize_config(c)) == c);
  const auto sim = simulator_settings(c, NetworkConfig{});
  CHECK(sim.n_realizations == 1234);
  CHECK(sim.window_half_width == 250.0);
  ExperimentConfig d = c;
  d.n_realizations.reset();
  d.window_half_width.reset();
  CHECK(simulator_settings(d, NetworkConfig{}).window_half_width == 500.0);
  d.profile = Profile::DESK;
  CHECK(simulator_settings(d, NetworkConfig{}).n_realizations == 20000);
}

TEST_CASE("config errors name the offending field") {
  CHECK(error_of("[sweep]\naxis = \"tau\"\nvalues = []\n").find("sweep.values") == 0);
  CHECK(error_of("[network]\nalpah = 4\n[sweep]\nvalues = [0dB]\n").find("network.alpah") == 0);
  CHECK(error_of("[network]\nalpha = 2\n[sweep]\nvalues = [0dB]\n").find("network.alpha") == 0);
  CHECK(error_of("[sweep]\naxis = \"beta\"\nvalues = [1]\n").find("sweep.axis") == 0);
  CHECK(error_of("[sweep]\nvalues = [0dB]\n[run]\nschemes = [\"cjt\"]\n").find("run.schemes") == 0);
  CHECK(error_of("[sweep]\nvalues = [0dB]\n[placement]\nvector = [1, 1]\n").find("placement.vector") == 0);
  CHECK(error_of("[sweep]\naxis = \"M\"\nvalues = [1, 2]\n[network]\ncoop_size = [1, 2]\n[placement]\nsource = "
                 "\"mpc\"\n")
            .find("network.coop_size") == 0);
  CHECK(error_of("[sweep]\naxis = \"K\"\nvalues = [3, 9]\n[placement]\nsource = \"mpc\"\n").find("sweep.values") ==
        0);
  CHECK(error_of("[sweep]\nvalues = [0dB]\n[placement]\nsource = \"udc\"\n[simulation]\nn_realizations = 10\n")
            .find("simulation.n_realizations") == 0);
  CHECK(error_of("[sweep]\nvalues = [0dB]\n[placement]\nsource = \"udc\"\n[simulation]\nwindow_half_width = 5\n")
            .find("simulation") == 0);
  CHECK(error_of("[sweep]\nvalues = [0dB]\n[placement]\nsource = \"udc\"\n[simulation]\nenabled = yes\n")
            .find("simulation.enabled") == 0);
  CHECK(error_of("[experiment]\nname = \"a/b\"\n").find("experiment.name") == 0);
}

TEST_CASE("placement files are inlined relative to the config") {
  const auto dir = std::filesystem::temp_directory_path() / "stpcache_test_placement";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "p.placement") << serialize_placement(validate_placement({0.5, 0.5, 0.5, 0.5}, 2));
  std::ofstream(dir / "c.toml") << "[catalog]\nn_files = 4\ncache_size = 2\n[sweep]\nvalues = [0dB]\n"
                                   "[placement]\nsource = \"explicit\"\nfile = \"p.placement\"\n";
  const auto c = load_config((dir / "c.toml").string());
  CHECK(c.explicit_vector == std::vector<double>{0.5, 0.5, 0.5, 0.5});
  std::ofstream(dir / "bad.toml") << "[catalog]\nn_files = 4\ncache_size = 1\n[sweep]\nvalues = [0dB]\n"
                                     "[placement]\nsource = \"explicit\"\nfile = \"p.placement\"\n";
  CHECK_THROWS_AS(load_config((dir / "bad.toml").string()), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("config hash tracks content but not the output location") {
  auto a = preset("fig2");
  auto b = a;
  b.output_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.master_seed = 2;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("sweep points follow the axis") {
  auto c = preset("fig6e");
  const auto pts = sweep_points(c);
  REQUIRE(pts.size() == 5);
  CHECK(pts[0].catalog.n_files == 60);
  CHECK(pts[4].catalog.n_files == 140);
  CHECK(pts[2].cache_size == 25);
  const auto m = sweep_points(preset("fig4a"));
  REQUIRE(m.size() == 5);
  CHECK(m[4].net.coop_size == 5);
  const auto t = sweep_points(preset("fig2"));
  REQUIRE(t.size() == 15);
  CHECK(t[0].net.sir_threshold == doctest::Approx(0.1));
  CHECK(t[1].coop_size == 2);
}

TEST_CASE("curve CSV is byte-reproducible and independent of the worker count") {
  auto c = tiny();
  const auto first = curve_csv(c, run_curve(c));
  c.workers = 1;
  CHECK(curve_csv(c, run_curve(c)) == first);
  c.workers = 3;
  CHECK(curve_csv(c, run_curve(c)) == first);
  CHECK(first.rfind("# stpcache-csv v1 kind=curve axis=tau config=tiny config_hash=", 0) == 0);
  CHECK(count_of(first, "\n") == 2 + 2 * 2 * 2);
  CHECK(first.find("tau_db,coop_size,scheme,analytic,mc_mean,mc_stderr\n") != std::string::npos);
}

TEST_CASE("a shared tau pass gives the same numbers as per-point passes") {
  auto c = tiny();
  c.coop_sizes = {2};
  const auto all = run_curve(c);
  for (std::size_t i = 0; i < c.values.size(); ++i) {
    auto one = c;
    one.values = {c.values[i]};
    const auto rows = run_curve(one);
    CHECK(rows[0].mc->mean == all[2 * i].mc->mean);
    CHECK(rows[1].mc->mean == all[2 * i + 1].mc->mean);
  }
}

TEST_CASE("curve rows: exact coherent JT is simulation only") {
  auto c = tiny();
  c.schemes = {Scheme::CJT_EXACT};
  c.coop_sizes = {2};
  c.values = {0.0};
  const auto rows = run_curve(c);
  REQUIRE(rows.size() == 1);
  CHECK_FALSE(rows[0].analytic.has_value());
  CHECK(rows[0].mc.has_value());
  CHECK(curve_csv(c, rows).find(",cjt_exact,nan,") != std::string::npos);
  CHECK_THROWS_AS(run_optimize(c), std::invalid_argument);
}

TEST_CASE("optimize rows are feasible and their placements reusable") {
  auto c = preset("fig5");
  c.values = {-10.0, 10.0};
  const auto rows = run_optimize(c);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    double sum = 0.0;
    for (double t : r.result.t_star.probs()) sum += t;
    CHECK(std::abs(sum - 3.0) < 1e-6);
    auto reuse = preset("fig2");
    reuse.explicit_vector.assign(r.result.t_star.probs().begin(), r.result.t_star.probs().end());
    CHECK_NOTHROW(reuse.validate());
    const auto back = parse_placement(serialize_placement(r.result.t_star));
    CHECK(std::equal(back.probs().begin(), back.probs().end(), r.result.t_star.probs().begin()));
  }
  CHECK(placement_file_name(c, rows[0]) == "fig5_tau-10_M3_ncjt.placement");
  const auto csv = optimize_csv(c, rows);
  CHECK(csv.find("method,concavity_holds,nu,kkt_residual,stp,sum_t,t1,") != std::string::npos);
}

TEST_CASE("UDC is flat along a popularity sweep") {
  auto c = preset("fig6c");
  c.n_files = 12;
  c.cache_size = 3;
  c.simulate = false;
  c.schemes = {Scheme::NCJT};
  const auto rows = run_baseline_comparison(c);
  REQUIRE(rows.size() == 6 * 4);
  double udc = -1.0;
  for (const auto& r : rows) {
    if (r.strategy != "udc") continue;
    if (udc < 0.0) udc = r.analytic;
    CHECK(r.analytic == doctest::Approx(udc).epsilon(1e-12));
  }
  for (std::size_t i = 0; i < rows.size(); i += 4) {
    CHECK(rows[i].strategy == "optimal");
    for (std::size_t j = 1; j < 4; ++j) CHECK(rows[i].analytic >= rows[i + j].analytic - 1e-9);
  }
}

TEST_CASE("plot scripts: layout, idempotence and errors") {
  auto c = tiny();
  c.coop_sizes = {1, 2, 3};
  c.values = {0.0};
  c.schemes = {Scheme::NCJT};
  const auto csv = curve_csv(c, run_curve(c));
  const auto script = emit_plots(csv, "tiny_curve.png");
  CHECK(script == emit_plots(csv, "tiny_curve.png"));
  CHECK(count_of(script, "with lines") == 3);
  CHECK(count_of(script, "with yerrorbars") == 3);
  CHECK(script.find("set output \"tiny_curve.png\"") != std::string::npos);
  CHECK(script.find("set terminal pngcairo") != std::string::npos);

  auto broken = csv;
  broken.replace(broken.find("mc_mean"), 7, "mc_avg");
  try {
    (void)emit_plots(broken, "x.png");
    FAIL("expected a throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("missing column 'mc_mean'") != std::string::npos);
  }
  CHECK_THROWS_AS(emit_plots("a,b\n1,2\n", "x.png"), std::invalid_argument);
  CHECK_THROWS_AS(emit_plots(csv + "1,2\n", "x.png"), std::invalid_argument);
}
