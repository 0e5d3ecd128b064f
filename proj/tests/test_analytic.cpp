#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "stpcache/analytic.hpp"

using namespace stpcache;

namespace {

NetworkConfig network(std::size_t m, double tau_db, double alpha = 4.0) {
  NetworkConfig n;
  n.coop_size = m;
  n.sir_threshold = db_to_linear(tau_db);
  n.alpha = PathLossExponent(alpha);
  return n;
}

const PlacementVector& fig_placement() {
  static const auto p = validate_placement({0.9, 0.8, 0.6, 0.4, 0.2, 0.1, 0.0, 0.0}, 3);
  return p;
}

}  // namespace

TEST_CASE("single-BS coverage has the arctan closed form at alpha = 4") {
  for (double tau_db : {-10.0, -3.0, 0.0, 4.0, 10.0, 20.0}) {
    const double tau = db_to_linear(tau_db);
    const double closed = 1.0 / (1.0 + std::sqrt(tau) * std::atan(std::sqrt(tau)));
    for (Scheme s : {Scheme::NCJT, Scheme::CJT_UPPER, Scheme::CJT_APPROX}) {
      CAPTURE(tau_db);
      CHECK(std::abs(coefficient_table(s, network(1, tau_db)).at(1) - closed) < 1e-10);
    }
  }
}

TEST_CASE("coefficient tables at tau = 0 dB, M = 3") {
  const auto ncjt = coefficient_table(Scheme::NCJT, network(3, 0.0));
  const auto upper = coefficient_table(Scheme::CJT_UPPER, network(3, 0.0));
  const auto approx = coefficient_table(Scheme::CJT_APPROX, network(3, 0.0));
  CHECK(ncjt.at(1) == doctest::Approx(0.4376).epsilon(2e-4));
  CHECK(ncjt.at(3) == doctest::Approx(0.8073).epsilon(2e-4));
  CHECK(upper.at(3) == doctest::Approx(0.9860).epsilon(2e-4));
  CHECK(approx.at(2) == doctest::Approx(0.8215).epsilon(2e-4));
  // Same serving geometry for one transmitter.
  CHECK(upper.at(1) == doctest::Approx(ncjt.at(1)).epsilon(1e-12));
  CHECK(approx.at(1) == doctest::Approx(ncjt.at(1)).epsilon(1e-12));
}

TEST_CASE("coefficient tables are increasing in m and ordered across schemes") {
  for (std::size_t m : {2u, 3u, 5u}) {
    for (double tau_db : {-10.0, 10.0}) {
      const auto ncjt = coefficient_table(Scheme::NCJT, network(m, tau_db));
      const auto upper = coefficient_table(Scheme::CJT_UPPER, network(m, tau_db));
      const auto approx = coefficient_table(Scheme::CJT_APPROX, network(m, tau_db));
      CAPTURE(m);
      CAPTURE(tau_db);
      CHECK(ncjt.strictly_increasing());
      CHECK(upper.strictly_increasing());
      for (std::size_t j = 1; j <= m; ++j) {
        CHECK(ncjt.at(j) > 0.0);
        CHECK(upper.at(j) < 1.0);
        CHECK(approx.at(j) <= upper.at(j) + 1e-12);
        CHECK(ncjt.at(j) <= approx.at(j) + 1e-12);
      }
    }
  }
}

TEST_CASE("q_n0: exact reduction agrees with the double-integral form") {
  for (std::size_t m : {1u, 2u, 3u}) {
    for (double tau_db : {-10.0, 10.0}) {
      for (double t : {0.2, 1.0}) {
        const auto cfg = network(m, tau_db);
        CAPTURE(m);
        CAPTURE(tau_db);
        CAPTURE(t);
        CHECK(std::abs(q_n0(t, cfg) - q_n0_double_integral(t, cfg)) < 1e-6);
      }
    }
  }
}

TEST_CASE("q_n0 is increasing in t and vanishes at t = 0") {
  const auto cfg = network(3, 0.0);
  const FileStpModel model(Scheme::NCJT, cfg);
  CHECK_THROWS_AS((void)model.q_n0(0.0), std::invalid_argument);
  CHECK(model.q_n0(1e-6) < 1e-5);
  double prev = 0.0;
  for (int i = 1; i <= 50; ++i) {
    const double v = model.q_n0(i / 50.0);
    CHECK(v > prev);
    prev = v;
  }
  // The nearest holder sits beyond M silenced BSs, so it cannot beat q_{c,1}.
  CHECK(model.q_n0(1.0) < model.table().at(1));
}

TEST_CASE("q_file endpoints and derivative") {
  for (Scheme s : {Scheme::NCJT, Scheme::CJT_UPPER, Scheme::CJT_APPROX}) {
    for (std::size_t m : {1u, 2u, 3u}) {
      const FileStpModel model(s, network(m, 3.0));
      CHECK(model.q_file(0.0) == 0.0);
      CHECK(model.q_file(1.0) == doctest::Approx(model.table().at(m)).epsilon(1e-14));
      const double h = 1e-3;
      for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double fd = (-model.q_file(t + 2 * h) + 8 * model.q_file(t + h) - 8 * model.q_file(t - h) +
                           model.q_file(t - 2 * h)) /
                          (12 * h);
        CAPTURE(t);
        CHECK(std::abs(model.derivative(t) - fd) < 1e-7);
      }
      CHECK(std::isfinite(model.derivative(0.0)));
      CHECK(model.derivative(0.0) > 0.0);
    }
  }
}

TEST_CASE("all schemes collapse at M = 1") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> tau_db(-15.0, 15.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Catalog cat = zipf_popularity(6, 1.2);
  for (int trial = 0; trial < 20; ++trial) {
    // Random feasible T for K = 2 via the graphical identity: sorted cuts.
    std::vector<double> raw(6);
    for (auto& r : raw) r = unif(rng);
    double sum = 0.0;
    for (double r : raw) sum += r;
    for (auto& r : raw) r = std::min(1.0, 2.0 * r / sum);
    double s2 = 0.0;
    for (double r : raw) s2 += r;
    if (std::abs(s2 - 2.0) > 1e-12) continue;
    const auto p = validate_placement(raw, 2);
    const auto cfg = network(1, tau_db(rng));
    const double nc = q_total(p, cat, Scheme::NCJT, cfg);
    CHECK(std::abs(q_total(p, cat, Scheme::CJT_UPPER, cfg) - nc) < 1e-9);
    CHECK(std::abs(q_total(p, cat, Scheme::CJT_APPROX, cfg) - nc) < 1e-9);
  }
}

TEST_CASE("STP does not depend on the BS density") {
  auto a = network(3, 0.0);
  auto b = a;
  a.bs_density = 1e-4;
  b.bs_density = 1.0;
  const Catalog cat = zipf_popularity(8, 2.0);
  for (Scheme s : {Scheme::NCJT, Scheme::CJT_APPROX}) {
    CHECK(q_total(fig_placement(), cat, s, a) == q_total(fig_placement(), cat, s, b));
  }
}

TEST_CASE("refining the quadrature changes nothing visible") {
  const Catalog cat = zipf_popularity(8, 2.0);
  const QuadratureSpec base;
  const auto fine = base.refined();
  for (std::size_t m : {2u, 3u}) {
    for (Scheme s : {Scheme::NCJT, Scheme::CJT_UPPER, Scheme::CJT_APPROX}) {
      const auto cfg = network(m, 5.0);
      CAPTURE(m);
      CHECK(std::abs(q_total(fig_placement(), cat, s, cfg, base) - q_total(fig_placement(), cat, s, cfg, fine)) < 1e-8);
    }
  }
  // Quasi-Monte Carlo on the 4-cube.
  const auto cfg = network(4, 5.0);
  CHECK(std::abs(q_total(fig_placement(), cat, Scheme::NCJT, cfg, base) -
                 q_total(fig_placement(), cat, Scheme::NCJT, cfg, fine)) < 1e-4);
}

TEST_CASE("STP decreases with the threshold") {
  const Catalog cat = zipf_popularity(8, 2.0);
  double prev = 1.0;
  for (double tau_db = -15.0; tau_db <= 15.0; tau_db += 2.5) {
    const double v = q_total(fig_placement(), cat, Scheme::NCJT, network(2, tau_db));
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("dB conversion and scheme names") {
  CHECK(db_to_linear(10.0) == doctest::Approx(10.0).epsilon(1e-15));
  CHECK(linear_to_db(db_to_linear(-7.5)) == doctest::Approx(-7.5).epsilon(1e-14));
  for (Scheme s : {Scheme::NCJT, Scheme::CJT_UPPER, Scheme::CJT_APPROX, Scheme::CJT_EXACT}) {
    CHECK(parse_scheme(to_string(s)) == s);
  }
  CHECK_THROWS_AS(parse_scheme("cjt"), std::invalid_argument);
  NetworkConfig bad = network(0, 0.0);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(coefficient_table(Scheme::CJT_EXACT, network(2, 0.0)), std::invalid_argument);
}
