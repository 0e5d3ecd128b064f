#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stpcache/simulator.hpp"

using namespace stpcache;

namespace {

SimConfig small_sim(std::size_t m, double tau, std::size_t n = 4000) {
  SimConfig sim;
  sim.net.coop_size = m;
  sim.net.sir_threshold = tau;
  sim.window_half_width = 200.0;
  sim.n_realizations = n;
  sim.master_seed = 99;
  return sim;
}

CacheRealization holds(std::vector<std::size_t> files) { return CacheRealization{std::move(files)}; }

// Five BSs on a line at distances 1..5 from the user, listed out of order.
Realization line_scene() {
  Realization r;
  r.bs_positions = {{3, 0}, {0, 1}, {-5, 0}, {0, -2}, {4, 0}};
  r.fading = {{1, 0}, {0, 1}, {0.5, 0.5}, {-1, 0}, {2, 0}};
  r.caches = {holds({2}), holds({1}), holds({1}), holds({2}), holds({3})};
  r.requested_file = 1;
  return r;
}

NetworkConfig net(std::size_t m, double tau = 1.0) {
  NetworkConfig n;
  n.coop_size = m;
  n.sir_threshold = tau;
  return n;
}

}  // namespace

TEST_CASE("PPP count has the Poisson mean and points stay in the window") {
  std::mt19937_64 rng(5);
  const double density = 0.01, h = 50.0;
  const double mean = density * 4 * h * h;
  double total = 0.0;
  const int trials = 400;
  for (int i = 0; i < trials; ++i) {
    const auto pts = sample_ppp(density, h, rng);
    total += static_cast<double>(pts.size());
    for (const auto& p : pts) {
      REQUIRE(std::abs(p.x) <= h);
      REQUIRE(std::abs(p.y) <= h);
    }
  }
  CHECK(std::abs(total / trials - mean) < 4.0 * std::sqrt(mean / trials));
}

TEST_CASE("hand-built scene: cooperative service") {
  const auto r = line_scene();
  // M = 2: BSs at distance 1 (index 1) and 2 (index 3). Only the nearest holds file 1.
  const auto a = classify_and_serve(r, net(2));
  CHECK(a.case_m == 1);
  CHECK_FALSE(a.miss);
  CHECK(a.serving == std::vector<std::size_t>{1});
  CHECK(a.silenced == std::vector<std::size_t>{3});
  CHECK(a.interferers == std::vector<std::size_t>{0, 4, 2});
  // Signal 1^-4 * |i|^2, interference 3^-4 * 1 + 4^-4 * 4 + 5^-4 * 0.5.
  const double interference = 1.0 / 81 + 4.0 / 256 + 0.5 / 625;
  CHECK(sir(r, a, Scheme::NCJT, net(2)) == doctest::Approx(1.0 / interference).epsilon(1e-14));
  CHECK(sir(r, a, Scheme::CJT_EXACT, net(2)) == doctest::Approx(1.0 / interference).epsilon(1e-14));
}

TEST_CASE("hand-built scene: two cooperating transmitters") {
  auto r = line_scene();
  r.caches[3] = holds({1, 2});
  const auto a = classify_and_serve(r, net(2));
  CHECK(a.case_m == 2);
  CHECK(a.serving == std::vector<std::size_t>{1, 3});
  CHECK(a.silenced.empty());
  const double interference = 1.0 / 81 + 4.0 / 256 + 0.5 / 625;
  // Non-coherent: |1 * i + (1/4) * (-1)|^2; coherent: (1 + 1/4)^2.
  const double ncjt = std::norm(std::complex<double>(-0.25, 1.0));
  CHECK(sir(r, a, Scheme::NCJT, net(2)) == doctest::Approx(ncjt / interference).epsilon(1e-14));
  CHECK(sir(r, a, Scheme::CJT_EXACT, net(2)) == doctest::Approx(1.5625 / interference).epsilon(1e-14));
}

TEST_CASE("hand-built scene: fallback to the nearest holder outside the cooperative set") {
  auto r = line_scene();
  r.requested_file = 3;  // only the BS at distance 4 holds it
  const auto a = classify_and_serve(r, net(3));
  CHECK(a.case_m == 0);
  CHECK_FALSE(a.miss);
  CHECK(a.serving == std::vector<std::size_t>{4});
  CHECK(a.silenced == std::vector<std::size_t>{1, 3, 0});
  CHECK(a.interferers == std::vector<std::size_t>{2});
  CHECK(sir(r, a, Scheme::NCJT, net(3)) == doctest::Approx((4.0 / 256) / (0.5 / 625)).epsilon(1e-14));

  r.requested_file = 4;
  const auto miss = classify_and_serve(r, net(3));
  CHECK(miss.miss);
  CHECK(miss.serving.empty());
  CHECK_THROWS_AS(sir(r, miss, Scheme::NCJT, net(3)), std::invalid_argument);
  CHECK_THROWS_AS(sir(r, a, Scheme::CJT_UPPER, net(3)), std::invalid_argument);
}

TEST_CASE("streaming estimator agrees with fully materialized realizations") {
  const Catalog cat = zipf_popularity(8, 2.0);
  const auto p = validate_placement({0.9, 0.8, 0.6, 0.4, 0.2, 0.1, 0.0, 0.0}, 3);
  for (auto policy : {CachePolicy::graphical(p), CachePolicy::iidc(3)}) {
    auto sim = small_sim(3, 1.0, 200);
    sim.request_mode = RequestMode::SAMPLED;
    SweepSpec spec{{policy}, {Scheme::NCJT}, {}};
    std::ostringstream trace;
    (void)estimate_stp_grid(cat, sim, spec, nullptr, &trace);
    std::istringstream in(trace.str());
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      if (line.rfind("realization", 0) == 0) continue;
      std::istringstream f(line);
      std::string idx, file, cs, sdb, ok;
      std::getline(f, idx, ',');
      std::getline(f, file, ',');
      std::getline(f, cs, ',');
      std::getline(f, sdb, ',');
      std::getline(f, ok, ',');
      const auto real = draw_realization(policy, cat, sim, std::stoull(idx));
      REQUIRE(real.requested_file == std::stoul(file));
      const auto a = classify_and_serve(real, sim.net);
      CAPTURE(line);
      if (a.miss) {
        CHECK(cs == "-1");
        CHECK(ok == "0");
      } else {
        CHECK(std::stol(cs) == static_cast<long>(a.case_m));
        const double value = sir(real, a, Scheme::NCJT, sim.net);
        CHECK(std::stod(sdb) == doctest::Approx(10.0 * std::log10(value)).epsilon(1e-8));
        CHECK((ok == "1") == (value >= 1.0));
      }
      ++rows;
    }
    CHECK(rows == 200);
  }
}

TEST_CASE("estimates do not depend on the worker count") {
  const Catalog cat = zipf_popularity(8, 2.0);
  const auto p = validate_placement({0.9, 0.8, 0.6, 0.4, 0.2, 0.1, 0.0, 0.0}, 3);
  SweepSpec spec{{CachePolicy::graphical(p), CachePolicy::iidc(3)}, {Scheme::NCJT, Scheme::CJT_EXACT}, {0.5, 2.0}};
  auto sim = small_sim(2, 1.0, 1000);
  sim.workers = 1;
  const auto one = estimate_stp_grid(cat, sim, spec);
  sim.workers = 3;
  const auto three = estimate_stp_grid(cat, sim, spec);
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      for (std::size_t c = 0; c < 2; ++c) {
        CHECK(one.at(a, b, c).mean == three.at(a, b, c).mean);
        CHECK(one.at(a, b, c).std_error == three.at(a, b, c).std_error);
      }
    }
  }
  sim.master_seed = 100;
  CHECK(estimate_stp_grid(cat, sim, spec).at(0, 0, 0).mean != one.at(0, 0, 0).mean);
}

TEST_CASE("conditional Monte Carlo reproduces the analytic coefficients") {
  const auto sim = small_sim(3, 1.0, 6000);
  const auto ncjt = coefficient_table(Scheme::NCJT, sim.net);
  const auto upper = coefficient_table(Scheme::CJT_UPPER, sim.net);
  for (std::size_t m = 1; m <= 3; ++m) {
    const auto nc = estimate_conditional(m, 0.0, sim, Scheme::NCJT);
    const auto co = estimate_conditional(m, 0.0, sim, Scheme::CJT_EXACT);
    CAPTURE(m);
    CHECK(std::abs(nc.mean - ncjt.at(m)) < 4.0 * nc.std_error);
    CHECK(co.mean <= upper.at(m) + 3.0 * co.std_error);
  }
  for (double t : {0.2, 0.5, 1.0}) {
    const auto est = estimate_conditional(0, t, sim, Scheme::NCJT);
    CAPTURE(t);
    CHECK(std::abs(est.mean - q_n0(t, sim.net)) < std::max(4.0 * est.std_error, 0.01));
  }
}

TEST_CASE("stratified and sampled requests estimate the same STP") {
  const Catalog cat = zipf_popularity(8, 2.0);
  const auto p = validate_placement({0.9, 0.8, 0.6, 0.4, 0.2, 0.1, 0.0, 0.0}, 3);
  auto sim = small_sim(2, 1.0, 6000);
  const auto strat = estimate_stp(p, cat, sim, Scheme::NCJT);
  sim.request_mode = RequestMode::SAMPLED;
  const auto sampled = estimate_stp(p, cat, sim, Scheme::NCJT);
  CHECK(strat.std_error < sampled.std_error);
  CHECK(std::abs(strat.mean - sampled.mean) < 4.0 * std::hypot(strat.std_error, sampled.std_error));
  CHECK(std::abs(strat.mean - q_total(p, cat, Scheme::NCJT, sim.net)) < 4.0 * strat.std_error);
}

TEST_CASE("IIDC caching matches the analytic STP at its marginals") {
  const Catalog cat = zipf_popularity(8, 1.0);
  const auto sim = small_sim(2, 1.0, 6000);
  SweepSpec spec{{CachePolicy::iidc(3)}, {Scheme::NCJT}, {}};
  const auto est = estimate_stp_grid(cat, sim, spec).at(0, 0, 0);
  const auto marg = iidc_marginals(cat, 3, 200000, 17);
  CHECK(std::abs(est.mean - q_total(marg, cat, Scheme::NCJT, sim.net)) < 4.0 * est.std_error + 2e-3);
}

TEST_CASE("simulator configuration is validated") {
  auto sim = small_sim(2, 1.0);
  sim.window_half_width = 10.0;  // 4 BSs expected
  CHECK_THROWS_AS(sim.validate(), std::invalid_argument);
  sim = small_sim(2, 1.0, 50);
  CHECK_THROWS_AS(sim.validate(), std::invalid_argument);
  CHECK_THROWS_AS(estimate_conditional(4, 0.0, small_sim(3, 1.0), Scheme::NCJT), std::invalid_argument);
  CHECK_THROWS_AS(estimate_conditional(0, 0.0, small_sim(3, 1.0), Scheme::NCJT), std::invalid_argument);
  const Catalog cat = zipf_popularity(4, 1.0);
  const auto p = validate_placement({1, 1, 0, 0}, 2);
  CHECK_THROWS_AS(estimate_stp(p, cat, small_sim(2, 1.0), Scheme::CJT_APPROX), std::invalid_argument);
  CHECK(parse_request_mode("sampled") == RequestMode::SAMPLED);
  CHECK_THROWS_AS(parse_request_mode("random"), std::invalid_argument);
}
