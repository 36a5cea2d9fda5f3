// Acceptance suite: runs every release criterion at its pinned tolerance and
// prints one pass/fail line per criterion. Exit code is the number of
// failures. An optional argv[1] selects a single criterion by number.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "disclab/constrained_spectra.hpp"
#include "disclab/coulomb_mcmc.hpp"
#include "disclab/moment_lab.hpp"
#include "disclab/phase_thresholds.hpp"
#include "disclab/randmat_core.hpp"

#include "../tests/test_support.hpp"

using namespace disclab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

void note(Outcome& o, bool ok, const std::string& what) {
  if (!ok) {
    o.pass = false;
    o.detail += (o.detail.empty() ? "" : "; ") + what;
  }
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// 1. tau1(2) = 0 and the rate identity on a 100-point grid, within 1e-12
Outcome criterion1() {
  Outcome o;
  note(o, std::abs(phase::tau1(phase::Margin(2.0))) <= 1e-12, "tau1(2) != 0");
  double worst = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double k = 2.0 * i / 100.0;
    worst = std::max(worst,
                     std::abs(phase::tau1(phase::Margin(k)) * std::log(2.0) + phase::rate_opnorm(k)));
  }
  note(o, worst <= 1e-12, "identity max err " + fmt(worst));
  o.detail = o.detail.empty() ? "identity max err " + fmt(worst) : o.detail;
  return o;
}

// 2. density oracle suite at kappa in {0.5, 1, 1.5, 2}
Outcome criterion2() {
  Outcome o;
  for (double kappa : {0.5, 1.0, 1.5, 2.0}) {
    const double norm_err = std::abs(spectra::normalization_quadrature(kappa) - 1.0);
    note(o, norm_err <= 1e-8, "normalization " + fmt(norm_err) + " at k=" + fmt(kappa));
    const double m2_err =
        std::abs(spectra::second_moment_quadrature(kappa) - spectra::second_moment_rho(kappa));
    note(o, m2_err <= 1e-8, "second moment " + fmt(m2_err) + " at k=" + fmt(kappa));
    const spectra::TricomiOracle oracle(kappa);
    for (int i = 0; i < 20; ++i) {
      const double x = -0.95 * kappa + 1.9 * kappa * i / 19.0;
      const double pv_err = std::abs(spectra::pv_hilbert(kappa, x) - 0.5 * x);
      note(o, pv_err <= 1e-6, "pv " + fmt(pv_err) + " at (k,x)=(" + fmt(kappa) + "," + fmt(x) + ")");
      const double tri_err = std::abs(oracle(x) - spectra::rho_kappa(kappa, x));
      note(o, tri_err <= 1e-4, "tricomi " + fmt(tri_err) + " at k=" + fmt(kappa));
    }
    const double energy_err = std::abs(spectra::energy_I(spectra::SpectralDensity(kappa)) -
                                       spectra::energy_closed_form(kappa));
    note(o, energy_err <= 1e-4, "energy " + fmt(energy_err) + " at k=" + fmt(kappa));
    if (o.pass) o.detail = "worst energy err " + fmt(energy_err);
  }
  return o;
}

// 3. tau2 near 2 equals 5.67 +- 0.05; crossings at 0.718 / 1.652 +- 0.005
Outcome criterion3() {
  Outcome o;
  const double t2 = phase::tau2(phase::Margin(2.0 - 1e-4));
  note(o, std::abs(t2 - 5.67) <= 0.05, "tau2(2-1e-4) = " + fmt(t2));
  const auto [lo, hi] = phase::crossing_tau1_tauf();
  note(o, std::abs(lo - 0.718) <= 0.005, "low crossing " + fmt(lo));
  note(o, std::abs(hi - 1.652) <= 0.005, "high crossing " + fmt(hi));
  if (o.pass) o.detail = "tau2=" + fmt(t2) + " crossings " + fmt(lo) + "/" + fmt(hi);
  return o;
}

// 4. conditioned spectral law at d = 100 and the d = 2 oracle, all L1 <= 0.05
Outcome criterion4() {
  Outcome o;
  coulomb::ChainConfig cfg;  // default chain settings
  cfg.seed = 10401;
  for (double kappa : {1.0, 2.0}) {
    const auto r = coulomb::conditioned_esd(kappa, 100, cfg);
    note(o, r.diag.converged, "chain not converged at k=" + fmt(kappa));
    note(o, r.l1_to_rho <= 0.05, "L1 " + fmt(r.l1_to_rho) + " at k=" + fmt(kappa));
    if (o.pass) o.detail += (o.detail.empty() ? "L1 " : ", ") + fmt(r.l1_to_rho);
  }
  coulomb::ChainConfig c2 = cfg;
  c2.kept_states = 30000;
  c2.thin = 4;
  c2.burn_sweeps = 500;
  c2.n_chains = 1;
  const auto chain = coulomb::run_chains(1.0, 2, c2);
  coulomb::EsdHistogram hc(1.0, 24), ho(1.0, 24);
  for (double v : chain.lmax) hc.add(v);
  RngStream orng(10402, 0);
  for (double v : testing::rejection_lmax_d2(1.0, 300000, orng)) ho.add(v);
  const double l1 = testing::l1_between(hc, ho);
  note(o, l1 <= 0.05, "d=2 oracle L1 " + fmt(l1));
  if (o.pass) o.detail += ", d=2 oracle " + fmt(l1);
  return o;
}

// 5. curvature estimate within 15% of tau_f(1.2); Haar fourth moments at 3 sigma
Outcome criterion5() {
  Outcome o;
  coulomb::ChainConfig cfg;
  cfg.seed = 10501;
  cfg.kept_states = 4000;
  const auto est = coulomb::estimate_G20(1.2, 60, 1.0, cfg);
  const double predicted = phase::tau_f(phase::Margin(1.2));
  const double rel = std::abs(est.mean - predicted) / predicted;
  note(o, rel <= 0.15, "G''(0) rel err " + fmt(rel));
  RngStream rng(10502, 0);
  for (int d : {4, 8}) {
    const int n = 100000;
    double s4 = 0.0, s4sq = 0.0, s22 = 0.0, s22sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto q = coulomb::haar_orthogonal(d, rng);
      const double a = q(0, 0) * q(0, 0), b = q(0, 1) * q(0, 1);
      s4 += a * a;
      s4sq += a * a * a * a;
      s22 += a * b;
      s22sq += a * a * b * b;
    }
    const double m4 = s4 / n, se4 = std::sqrt((s4sq / n - m4 * m4) / n);
    const double m22 = s22 / n, se22 = std::sqrt((s22sq / n - m22 * m22) / n);
    note(o, std::abs(m4 - 3.0 / (d * (d + 2.0))) <= 3.0 * se4, "O11^4 moment at d=" + fmt(d));
    note(o, std::abs(m22 - 1.0 / (d * (d + 2.0))) <= 3.0 * se22, "O11^2O12^2 moment at d=" + fmt(d));
  }
  if (o.pass) o.detail = "rel err " + fmt(rel) + ", Haar moments in band";
  return o;
}

// 6. first-moment equivalence at (n=10, d=6, kappa=1.8): |z| <= 3
Outcome criterion6() {
  Outcome o;
  const auto rep = moments::first_moment_check(1.8, 10, 6, 200, 100000, 10601);
  note(o, std::abs(rep.z_score) <= 3.0, "z = " + fmt(rep.z_score));
  if (o.pass) o.detail = "z = " + fmt(rep.z_score);
  return o;
}

// 7. overlap decomposition equivalence within combined 3 sigma
Outcome criterion7() {
  Outcome o;
  const auto brute = moments::second_moment_ratio_bruteforce(1.8, 10, 6, 400, 10701);
  const auto rec = moments::overlap_reconstruction(1.8, 10, 6, 200000, 800000, 10702);
  const double z = z_score(brute, rec.value);
  note(o, !brute.zero_hit && !rec.value.zero_hit, "zero-hit estimate");
  note(o, std::abs(z) <= 3.0, "combined z = " + fmt(z));
  if (o.pass)
    o.detail = "ratio " + fmt(brute.mean) + " vs " + fmt(rec.value.mean) + ", z = " + fmt(z);
  return o;
}

// 8. Laplace machinery: exactness at F = 0 and the Gaussian limit
Outcome criterion8() {
  Outcome o;
  for (long n : {10L, 100L, 1000L}) {
    const double err = std::abs(moments::laplace_sum([](double) { return 0.0; }, n) - 1.0);
    note(o, err <= 1e-12, "F=0 err " + fmt(err) + " at n=" + fmt(n));
  }
  const double v = moments::laplace_sum([](double q) { return 0.25 * q * q; }, 4000);
  const double target = std::sqrt(2.0);
  note(o, std::abs(v - target) <= 0.02 * target, "Gaussian limit " + fmt(v));
  if (o.pass) o.detail = "n=4000 value " + fmt(v);
  return o;
}

// 9. log-Sobolev variance bound for P in {X, X^2, XY} at (kappa=1, d=100)
Outcome criterion9() {
  Outcome o;
  coulomb::ChainConfig cfg;
  cfg.seed = 10901;
  const auto rep = moments::variance_bound_check(1.0, 100, cfg);
  note(o, rep.diag.converged, "chain not converged");
  note(o, rep.var_tr_w <= rep.bound_tr_w, "Var[Tr W] " + fmt(rep.var_tr_w));
  note(o, rep.var_tr_w2 <= rep.bound_tr_w2, "Var[Tr W^2] " + fmt(rep.var_tr_w2));
  note(o, rep.var_tr_wy <= rep.bound_tr_wy, "Var[Tr WY] " + fmt(rep.var_tr_wy));
  if (o.pass)
    o.detail = "variances " + fmt(rep.var_tr_w) + "/" + fmt(rep.var_tr_w2) + "/" +
               fmt(rep.var_tr_wy) + " under bounds 2/8/8";
  return o;
}

// 10. byte-identical artifacts for identical RunConfig, independent of --workers
Outcome criterion10() {
  Outcome o;
  const std::string bin = DISCLAB_BIN_PATH;
  const fs::path dir = fs::temp_directory_path() / "disclab_acceptance";
  fs::create_directories(dir);
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  auto shell = [&o](const std::string& cmd) {
    const int rc = std::system(cmd.c_str());
    note(o, WEXITSTATUS(rc) == 0, "command failed: " + cmd);
  };
  auto run_pair = [&](const std::string& args, const std::string& name) {
    const fs::path a = dir / (name + "_a.out"), b = dir / (name + "_b.out");
    shell(bin + " " + args + " --workers 1 --out " + a.string() + " 2>/dev/null");
    shell(bin + " " + args + " --workers 3 --out " + b.string() + " 2>/dev/null");
    const std::string sa = slurp(a), sb = slurp(b);
    note(o, !sa.empty() && sa == sb, name + " differs across workers");
    // and a literal rerun reproduces the bytes
    shell(bin + " " + args + " --workers 1 --out " + a.string() + " 2>/dev/null");
    note(o, slurp(a) == sb, name + " differs across reruns");
  };
  run_pair("phase --grid 0.6:0.9:0.1", "phase");
  run_pair("disc --n 6 --d 4 --grid 1.0:2.0:0.25 --instances 5 --seed 3", "disc");
  run_pair("esd --kappa 1.0 --d 20 --seed 7 --burn 300 --thin 3 --kept 500 --chains 2", "esd");
  if (o.pass) o.detail = "phase/disc/esd artifacts byte-stable";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const int only = argc > 1 ? std::atoi(argv[1]) : 0;
  struct Entry {
    int id;
    const char* title;
    std::function<Outcome()> fn;
  };
  const std::vector<Entry> criteria{
      {1, "closed-form identities (tau1, rate_opnorm)", criterion1},
      {2, "density oracle suite (mass, moment, PV, inversion, energy)", criterion2},
      {3, "phase numbers (tau2 near 2, tau1/tau_f crossings)", criterion3},
      {4, "constrained spectral law (d=100 MCMC, d=2 oracle)", criterion4},
      {5, "second-moment-failure constant and Haar moments", criterion5},
      {6, "first-moment equivalence (enumeration vs 2^n p)", criterion6},
      {7, "overlap decomposition equivalence", criterion7},
      {8, "Laplace machinery (exactness, Gaussian limit)", criterion8},
      {9, "log-Sobolev variance bound", criterion9},
      {10, "byte-identical reruns independent of --workers", criterion10},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %2d: %s (%s) [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.title,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures;
}
