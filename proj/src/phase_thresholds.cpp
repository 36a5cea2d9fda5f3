#include "disclab/phase_thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "disclab/parallel.hpp"

namespace disclab::phase {

namespace {

constexpr double kLog2 = 0.6931471805599453094172321214581766;

// bracketed bisection; f must change sign on [lo, hi].
// Stops on |hi - lo| <= abs_tol + rel_tol * |mid|.
template <typename F>
double bisect(F&& f, double lo, double hi, double abs_tol, double rel_tol) {
  double flo = f(lo);
  if (flo == 0.0) return lo;
  if (f(hi) == 0.0) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= abs_tol + rel_tol * std::abs(mid)) return mid;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((flo < 0.0) == (fm < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// golden-section minimum of a unimodal function on [a, b]
template <typename F>
double golden_min(F&& f, double a, double b, double x_tol) {
  constexpr double inv_phi = 0.6180339887498948482;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > x_tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

Margin::Margin(double kappa) : kappa_(kappa) {
  if (!(kappa > 0.0) || kappa > 2.0)
    throw std::domain_error("Margin: kappa must lie in (0, 2]");
}

std::string to_string(Region r) {
  switch (r) {
    case Region::UNSAT: return "UNSAT";
    case Region::SAT: return "SAT";
    default: return "UNKNOWN";
  }
}

double binary_entropy(double p) {
  if (!(p >= 0.0) || p > 1.0) throw std::domain_error("binary_entropy: p outside [0, 1]");
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
  return h;
}

double tau1(Margin kappa) {
  const double k = kappa.value();
  const double k2 = k * k;
  return (-k2 * k2 / 128.0 + k2 / 8.0 - 0.5 * std::log(k / 2.0) - 0.375) / kLog2;
}

double rate_opnorm(double kappa) {
  if (!(kappa > 0.0)) throw std::domain_error("rate_opnorm: kappa must be positive");
  if (kappa > 2.0) return 0.0;
  const double k2 = kappa * kappa;
  return k2 * k2 / 128.0 - k2 / 8.0 + 0.5 * std::log(kappa / 2.0) + 0.375;
}

double delta_eta(double eta) {
  if (!(eta > 0.0)) throw std::domain_error("delta_eta: eta must be positive");
  const double rhs = eta / (1.0 + eta) * kLog2;
  // H((1+delta)/2) falls from log 2 to 0 as delta runs over (0, 1)
  auto f = [rhs](double delta) { return binary_entropy(0.5 * (1.0 + delta)) - rhs; };
  return bisect(f, 0.0, 1.0, 1e-12, 0.0);
}

double ttau_f_branch(double eta, Margin kappa) { return (1.0 + eta) * tau1(kappa); }

double ttau_g_branch(double eta, Margin kappa) {
  const double k = kappa.value();
  const double d = delta_eta(eta);
  const double d2 = d * d;
  const double om = 1.0 - d2;          // 1 - delta^2
  const double om2 = om * om;
  const double om3 = om2 * om;
  const double om4 = om3 * om;
  const double opd = 1.0 + d;
  const double opd5 = opd * opd * opd * opd * opd;
  const double c0 = (1.0 + d2) / (2.0 * om2);
  const double c1 = d * (1.0 + 6.0 * d + 3.0 * d2 + 2.0 * d2 * d) / (om3 * (1.0 - d));
  const double c2 = 2.0 * opd5 / om4 - (1.0 + 3.0 * d2) / (4.0 * om3);
  const double c4 = (1.0 + 3.0 * d2) / (32.0 * om3);
  return c0 + c1 * k + c2 * k * k + c4 * k * k * k * k;
}

double ttau(double eta, Margin kappa) {
  return std::max(ttau_f_branch(eta, kappa), ttau_g_branch(eta, kappa));
}

double eta_star(Margin kappa) {
  if (tau1(kappa) <= 0.0)
    throw std::domain_error("eta_star: no finite crossing at kappa = 2 (tau1 vanishes)");
  // f - g goes from negative (g blows up as eta -> 0) to positive (f grows linearly)
  auto h = [kappa](double eta) { return ttau_f_branch(eta, kappa) - ttau_g_branch(eta, kappa); };
  // eta_star ~ g(inf)/tau1(kappa), which blows up as kappa -> 2; the bracket
  // expansion must reach ~1e19 for kappa = 2 - 1e-6
  double lo = 1.0, hi = 1.0;
  while (h(lo) >= 0.0) {
    lo *= 0.5;
    if (lo < 1e-15) throw std::runtime_error("eta_star: lower bracket not found");
  }
  while (h(hi) <= 0.0) {
    hi *= 4.0;
    if (hi > 1e40) throw std::runtime_error("eta_star: upper bracket not found");
  }
  return bisect(h, lo, hi, 0.0, 1e-10);
}

namespace {

// tau1 is pure cancellation noise within ~1e-5 of kappa = 2; there eta* -> inf
// and bartau equals the delta -> 0 limit of the g branch
constexpr double kTau1Floor = 1e-13;

double g_branch_limit(double kappa) {
  const double k2 = kappa * kappa;
  return 0.5 + (2.0 - 0.25) * k2 + k2 * k2 / 32.0;
}

}  // namespace

double bartau(Margin kappa) {
  if (tau1(kappa) < kTau1Floor) return g_branch_limit(kappa.value());
  return ttau_f_branch(eta_star(kappa), kappa);
}

namespace {

// min over u in (0, kappa] of bartau(u): coarse scan then golden refinement
double tau2_impl(double kappa) {
  constexpr double step = 1e-3;
  double best_u = kappa;
  double best = bartau(Margin(kappa));
  const long m = static_cast<long>(kappa / step);
  for (long i = 1; i <= m; ++i) {
    const double u = static_cast<double>(i) * step;
    if (u >= kappa) break;
    const double v = bartau(Margin(u));
    if (v < best) {
      best = v;
      best_u = u;
    }
  }
  const double lo = std::max(0.5 * step, best_u - step);
  const double hi = std::min(kappa, best_u + step);
  const double u_ref =
      golden_min([](double u) { return bartau(Margin(u)); }, lo, hi, 1e-6);
  return std::min(best, bartau(Margin(u_ref)));
}

}  // namespace

double tau2(Margin kappa) {
  if (kappa.value() >= 2.0)
    throw std::domain_error("tau2: defined on (0, 2); use tau2_limit_at_2() for the endpoint");
  return tau2_impl(kappa.value());
}

double tau2_limit_at_2() { return tau2_impl(2.0 - 1e-6); }

double tau_f(Margin kappa) {
  const double u = kappa.value() * kappa.value() / 4.0 - 1.0;
  return 0.5 * u * u * u * u;
}

std::pair<double, double> crossing_tau1_tauf() {
  auto h = [](double k) { return tau1(Margin(k)) - tau_f(Margin(k)); };
  // scan for sign changes: expect + - + across (0, 2). Both curves vanish at
  // kappa = 2 (tau1 cubically, tau_f quartically), so within ~1e-5 of the
  // endpoint tau1 is pure cancellation noise; stop the scan at 2 - 1e-4.
  constexpr double a = 1e-3, b = 2.0 - 1e-4;
  constexpr int n = 2000;
  double roots[2];
  int found = 0;
  double x_prev = a, h_prev = h(a);
  for (int i = 1; i <= n; ++i) {
    const double x = a + (b - a) * static_cast<double>(i) / n;
    const double hx = h(x);
    if ((h_prev < 0.0) != (hx < 0.0)) {
      if (found >= 2) throw std::runtime_error("crossing_tau1_tauf: more than two sign changes");
      roots[found++] = bisect(h, x_prev, x, 1e-8, 0.0);
    }
    x_prev = x;
    h_prev = hx;
  }
  if (found != 2) throw std::runtime_error("crossing_tau1_tauf: expected exactly two crossings");
  return {roots[0], roots[1]};
}

Classification classify(Margin kappa, double tau) {
  Classification c;
  const double t1 = tau1(kappa);
  const double t2 = kappa.value() < 2.0 ? tau2(kappa) : tau2_limit_at_2();
  if (tau < t1)
    c.region = Region::UNSAT;
  else if (tau > t2)
    c.region = Region::SAT;
  else
    c.region = Region::UNKNOWN;
  c.second_moment_fails = tau < tau_f(kappa);
  return c;
}

std::vector<PhaseRow> phase_table(const std::vector<double>& kappa_grid, int workers) {
  for (std::size_t i = 0; i < kappa_grid.size(); ++i) {
    if (!(kappa_grid[i] > 0.0) || kappa_grid[i] >= 2.0)
      throw std::domain_error("phase_table: grid values must lie in (0, 2)");
    if (i > 0 && kappa_grid[i] <= kappa_grid[i - 1])
      throw std::invalid_argument("phase_table: grid must be strictly ascending");
  }
  std::vector<PhaseRow> rows(kappa_grid.size());
  parallel_for_indexed(static_cast<long>(kappa_grid.size()), workers, [&](long i) {
    const Margin k(kappa_grid[i]);
    PhaseRow& r = rows[i];
    r.kappa = k.value();
    r.tau1 = tau1(k);
    if (r.tau1 >= kTau1Floor) {
      r.eta_star = eta_star(k);
      r.delta_star = delta_eta(r.eta_star);
      r.bartau = ttau_f_branch(r.eta_star, k);
    } else {
      r.eta_star = INFINITY;
      r.delta_star = 0.0;
      r.bartau = g_branch_limit(r.kappa);
    }
    r.tau2 = tau2(k);
    r.tau_f = tau_f(k);
  });
  // tau2 is a running minimum along an ascending grid; clamp out refinement jitter
  for (std::size_t i = 1; i < rows.size(); ++i)
    rows[i].tau2 = std::min(rows[i].tau2, rows[i - 1].tau2);
  return rows;
}

}  // namespace disclab::phase
