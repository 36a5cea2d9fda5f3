#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "disclab/phase_thresholds.hpp"
#include "test_support.hpp"

using namespace disclab;
using phase::Margin;

namespace {
constexpr double kLog2 = 0.6931471805599453;
}

TEST_CASE("binary entropy") {
  CHECK(phase::binary_entropy(0.5) == doctest::Approx(kLog2).epsilon(1e-15));
  CHECK(phase::binary_entropy(0.0) == 0.0);
  CHECK(phase::binary_entropy(1.0) == 0.0);
  // frozen from extended-precision evaluation of -p log p - (1-p) log(1-p)
  CHECK(phase::binary_entropy(0.25) == doctest::Approx(0.5623351446188083).epsilon(1e-14));
  for (double p = 0.05; p < 1.0; p += 0.1)
    CHECK(phase::binary_entropy(p) == doctest::Approx(phase::binary_entropy(1.0 - p)));
  CHECK_THROWS_AS(phase::binary_entropy(-0.01), std::domain_error);
  CHECK_THROWS_AS(phase::binary_entropy(1.01), std::domain_error);
}

TEST_CASE("tau1 values and domain") {
  CHECK(phase::tau1(Margin(2.0)) == 0.0);
  CHECK(phase::tau1(Margin(1.0)) == doctest::Approx(0.128055185).epsilon(1e-8));
  CHECK_THROWS_AS(Margin(0.0), std::domain_error);
  CHECK_THROWS_AS(Margin(2.01), std::domain_error);
  CHECK_THROWS_AS(Margin(-1.0), std::domain_error);
  // diverges as kappa -> 0
  double prev = 0.0;
  for (double k : {1e-2, 1e-4, 1e-6, 1e-8}) {
    const double t = phase::tau1(Margin(k));
    CHECK(t > prev);
    prev = t;
  }
  CHECK(prev > 12.0);
}

TEST_CASE("rate_opnorm and the tau1 identity") {
  CHECK(phase::rate_opnorm(2.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(phase::rate_opnorm(3.0) == 0.0);
  CHECK(phase::rate_opnorm(1.0) == doctest::Approx(-0.0887611).epsilon(1e-5));
  CHECK_THROWS_AS(phase::rate_opnorm(0.0), std::domain_error);
  CHECK_THROWS_AS(phase::rate_opnorm(-2.0), std::domain_error);
  for (int i = 1; i <= 100; ++i) {
    const double k = 2.0 * i / 100.0;
    CHECK(std::abs(phase::tau1(Margin(k)) * std::log(2.0) + phase::rate_opnorm(k)) <= 1e-12);
  }
}

TEST_CASE("delta_eta limits, defining equation, monotonicity") {
  CHECK(phase::delta_eta(1e-8) > 0.999);
  CHECK(phase::delta_eta(1e8) < 1e-3);
  // independent Newton solve of H((1+x)/2) = rhs as the oracle
  {
    const double rhs = 0.5 * kLog2;
    double x = 0.5;
    for (int it = 0; it < 60; ++it) {
      const double h = phase::binary_entropy(0.5 * (1.0 + x)) - rhs;
      const double hp = 0.5 * std::log((1.0 - x) / (1.0 + x));  // dH/dx
      x -= h / hp;
    }
    CHECK(phase::delta_eta(1.0) == doctest::Approx(x).epsilon(1e-10));
  }
  double prev = 2.0;
  for (double eta = 1e-3; eta < 1e4; eta *= 3.7) {
    const double d = phase::delta_eta(eta);
    CHECK(d < prev);
    CHECK(d > 0.0);
    CHECK(d < 1.0);
    prev = d;
  }
  CHECK_THROWS_AS(phase::delta_eta(0.0), std::domain_error);
}

TEST_CASE("ttau branches") {
  const Margin k(1.0);
  // max over branches dominates f everywhere
  for (double eta = 0.01; eta < 1e3; eta *= 4.1)
    CHECK(phase::ttau(eta, k) >= phase::ttau_f_branch(eta, k));
  // eta -> infinity: g approaches 1/2 + (2 - 1/4) kappa^2 + kappa^4 / 32
  for (double kap : {0.5, 1.0, 1.5}) {
    const double limit = 0.5 + 1.75 * kap * kap + std::pow(kap, 4) / 32.0;
    CHECK(phase::ttau_g_branch(1e8, Margin(kap)) == doctest::Approx(limit).epsilon(1e-3));
  }
  // eta -> 0: g diverges
  CHECK(phase::ttau(1e-3, k) > 100.0);
  // monotone branches on a grid (guarantees the root bracketing)
  double prev_g = INFINITY, prev_f = 0.0;
  for (double eta = 0.1; eta < 1e3; eta *= 1.7) {
    const double g = phase::ttau_g_branch(eta, k);
    const double f = phase::ttau_f_branch(eta, k);
    CHECK(g < prev_g);
    CHECK(f > prev_f);
    prev_g = g;
    prev_f = f;
  }
}

TEST_CASE("eta_star crossing and dual-method agreement") {
  for (double kap : {0.5, 1.0, 1.5}) {
    const Margin k(kap);
    const double es = phase::eta_star(k);
    const double f = phase::ttau_f_branch(es, k);
    const double g = phase::ttau_g_branch(es, k);
    CHECK(std::abs(f - g) <= 1e-9 * std::abs(f));
  }
  // golden-section on max(f, g) is the independent route
  {
    const Margin k(1.0);
    const double via_golden = testing::golden_argmin(
        [&](double eta) { return phase::ttau(eta, k); }, 1.0, 1e4, 1e-7);
    CHECK(phase::eta_star(k) == doctest::Approx(via_golden).epsilon(1e-8));
  }
  CHECK_THROWS_AS(phase::eta_star(Margin(2.0)), std::domain_error);
}

TEST_CASE("bartau: branch value, grid+refinement oracle, continuity") {
  for (double kap : {0.3, 0.7, 1.1, 1.5, 1.9}) {
    const Margin k(kap);
    const double bt = phase::bartau(k);
    CHECK(bt >= phase::tau1(k));
    CHECK(bt == doctest::Approx((1.0 + phase::eta_star(k)) * phase::tau1(k)).epsilon(1e-9));
    // continuity
    CHECK(std::abs(phase::bartau(Margin(kap + 1e-4)) - bt) <= 1e-2);
  }
  // independent minimization of ttau over the 10^[-4, 4] log grid plus golden
  // refinement (eta* stays inside that range for kappa up to ~1.8)
  for (double kap : {0.3, 0.7, 1.1, 1.5}) {
    const Margin k(kap);
    double best_eta = 1.0, best = INFINITY;
    for (int i = 0; i <= 2000; ++i) {
      const double eta = std::pow(10.0, -4.0 + 8.0 * i / 2000.0);
      const double v = phase::ttau(eta, k);
      if (v < best) {
        best = v;
        best_eta = eta;
      }
    }
    const double refined_eta = testing::golden_argmin(
        [&](double eta) { return phase::ttau(eta, k); }, best_eta / 4.0, best_eta * 4.0, 1e-9);
    CHECK(phase::bartau(k) == doctest::Approx(phase::ttau(refined_eta, k)).epsilon(1e-6));
  }
}

TEST_CASE("tau2: minimum structure and the value at the right edge") {
  for (double kap : {0.5, 1.0, 1.5})
    CHECK(phase::tau2(Margin(kap)) <= phase::bartau(Margin(kap)) + 1e-12);
  CHECK(phase::tau2(Margin(2.0 - 1e-4)) == doctest::Approx(5.67).epsilon(0.01));
  CHECK(phase::tau2_limit_at_2() == doctest::Approx(5.67).epsilon(0.01));
  CHECK(phase::tau2(Margin(1.9)) >= phase::tau2(Margin(1.99)) - 1e-9);
  double prev = INFINITY;
  for (double kap : {0.2, 0.4, 0.8, 1.2, 1.6, 1.95}) {
    const double t2 = phase::tau2(Margin(kap));
    CHECK(t2 <= prev + 1e-9);
    prev = t2;
  }
  CHECK_THROWS_AS(phase::tau2(Margin(2.0)), std::domain_error);
}

TEST_CASE("tau_f closed form") {
  CHECK(phase::tau_f(Margin(2.0)) == 0.0);
  CHECK(phase::tau_f(Margin(1e-6)) == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(phase::tau_f(Margin(1.0)) == doctest::Approx(0.158203125).epsilon(1e-15));
}

TEST_CASE("crossing of tau1 and tau_f") {
  const auto [lo, hi] = phase::crossing_tau1_tauf();
  CHECK(lo == doctest::Approx(0.718).epsilon(0.005));
  CHECK(hi == doctest::Approx(1.652).epsilon(0.005));
  CHECK(phase::tau1(Margin(1.0)) < phase::tau_f(Margin(1.0)));
  CHECK(phase::tau1(Margin(0.5)) > phase::tau_f(Margin(0.5)));
  CHECK(phase::tau1(Margin(1.8)) > phase::tau_f(Margin(1.8)));
}

TEST_CASE("classify regions and flag") {
  using phase::Region;
  const auto c1 = phase::classify(Margin(2.0), 1.0);
  CHECK(c1.region == Region::UNKNOWN);
  const auto c2 = phase::classify(Margin(1.0), 0.05);
  CHECK(c2.region == Region::UNSAT);
  const auto c3 = phase::classify(Margin(1.0), 0.14);
  CHECK(c3.region == Region::UNKNOWN);
  CHECK(c3.second_moment_fails);
  const auto c4 = phase::classify(Margin(0.5), 10.0);
  CHECK(c4.region == Region::SAT);
  // raising tau never moves SAT -> UNKNOWN or UNKNOWN -> UNSAT
  auto rank = [](Region r) { return r == Region::UNSAT ? 0 : (r == Region::UNKNOWN ? 1 : 2); };
  int prev = 0;
  for (double tau : {0.01, 0.05, 0.1, 0.2, 1.0, 3.0, 5.0, 6.0, 10.0}) {
    const int r = rank(phase::classify(Margin(1.0), tau).region);
    CHECK(r >= prev);
    prev = r;
  }
}

TEST_CASE("phase_table rows and determinism") {
  const std::vector<double> grid{0.5, 1.0, 1.5};
  const auto rows = phase::phase_table(grid);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].kappa == grid[i]);
    CHECK(rows[i].tau1 <= rows[i].bartau);
    CHECK(rows[i].tau2 <= rows[i].bartau + 1e-12);
    CHECK(rows[i].delta_star > 0.0);
    CHECK(rows[i].delta_star < 1.0);
    if (i > 0) CHECK(rows[i].tau2 <= rows[i - 1].tau2);
  }
  const auto rows3 = phase::phase_table(grid, 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows3[i].tau2 == rows[i].tau2);
    CHECK(rows3[i].eta_star == rows[i].eta_star);
  }
  CHECK_THROWS_AS(phase::phase_table({1.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(phase::phase_table({0.5, 2.0}), std::domain_error);
}
