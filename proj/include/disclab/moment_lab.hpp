#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "disclab/coulomb_mcmc.hpp"
#include "disclab/estimate.hpp"
#include "disclab/randmat_core.hpp"
#include "disclab/rng.hpp"

namespace disclab::moments {

// hard cap on exhaustive enumeration: 2^(n-1) signings
inline constexpr int kMaxEnumerationN = 26;

// P[||W||_op <= kappa] for W ~ GOE(d) by direct Monte Carlo, binomial stderr.
// Zero hits produce a one-sided 95% bound (rule of three) with the flag set;
// rare_event_warn is set when the large-deviation prediction says direct MC
// cannot see the event at this sample count.
McEstimate estimate_prob_opnorm(double kappa, int d, long n_samples, RngStream& rng);

// Exhaustive signing count for one instance. Enumerates a Gray code over
// {+-1}^n with eps_1 = +1 fixed (counts doubled by the global-flip symmetry).
struct InstanceResult {
  int n = 0, d = 0;
  std::vector<double> kappa_grid;
  std::vector<long> z_counts;      // signings with margin <= kappa, per gridpoint
  double disc = 0.0;               // minimum margin over all signings
  randmat::Signing argmin{{1}};    // canonical minimizer (eps_1 = +1)
  long fast_path_fallbacks = 0;    // decisions the fast path handed to the full solve
};

InstanceResult exact_instance(std::span<const randmat::SymMatrix> ws,
                              std::span<const double> kappa_grid,
                              bool use_fast_norm_path = false);

// flip position (0-based, in [1, n-1]) for Gray-code step k -> k+1
int gray_flip_position(unsigned long k);

struct FirstMomentReport {
  double kappa = 0.0;
  int n = 0, d = 0, n_instances = 0;
  long mc_samples = 0;
  McEstimate mean_exact_z;   // average of exact Z over instances
  McEstimate predicted;      // 2^n * p_hat
  double z_score = 0.0;
  bool pass = false;  // |z| <= 3
};

// Both sides of E[Z] = 2^n P[||W||_op <= kappa], estimated independently.
FirstMomentReport first_moment_check(double kappa, int n, int d, int n_instances,
                                     long mc_samples, std::uint64_t seed, int workers = 0);

// overlap rate function estimate:
// G_d(q) = (1/n) [ log p_joint(q) - 2 log p_single ], delta-method stderr
McEstimate estimate_Gd(double q, double kappa, int n, int d, long n_samples, RngStream& rng);

// E[Z^2] / E[Z]^2 over exact instances, jackknife error bars
McEstimate second_moment_ratio_bruteforce(double kappa, int n, int d, int n_instances,
                                          std::uint64_t seed, int workers = 0);

// (1/2^n) sum_l C(n,l) p_joint(q_l) / p_single^2 assembled from pair-event
// Monte Carlo at every overlap gridpoint (the endpoints |q| = 1 reduce to
// 1/p_single). Cross-estimator for the brute-force ratio.
struct OverlapReconstruction {
  McEstimate value;
  McEstimate p_single;
  std::vector<double> q_grid;
  std::vector<McEstimate> gd;  // per-gridpoint G_d estimates (endpoints analytic)
};
OverlapReconstruction overlap_reconstruction(double kappa, int n, int d, long pairs_per_q,
                                             long single_samples, std::uint64_t seed,
                                             int workers = 0);

// log of (1/2^n) sum_l C(n,l) exp(n F(q_l)), q_l = 2l/n - 1, evaluated in
// log-space with extended precision; finite for |n F| up to 1e4
double log_laplace_sum(const std::function<double(double)>& f, long n);
double laplace_sum(const std::function<double(double)>& f, long n);

// Var[Tr P(W, Y)] for P in {X, X^2, XY} at q = 0 against the log-Sobolev
// bound 2 (sum_p p kappa^(p-1) |a_p|)^2
struct VarianceBoundReport {
  double kappa = 0.0;
  int d = 0;
  double var_tr_w = 0.0, bound_tr_w = 0.0;
  double var_tr_w2 = 0.0, bound_tr_w2 = 0.0;
  double var_tr_wy = 0.0, bound_tr_wy = 0.0;
  bool pass = false;
  coulomb::ChainDiagnostics diag;
};
VarianceBoundReport variance_bound_check(double kappa, int d,
                                         const coulomb::ChainConfig& config);

// small-scale SAT frequency sweep at n = round(tau d^2)
struct PhaseEmpiricsRow {
  int d = 0;
  int n = 0;
  int n_instances = 0;
  double sat_fraction = 0.0;
};
struct PhaseEmpiricsReport {
  double kappa = 0.0, tau = 0.0;
  std::vector<PhaseEmpiricsRow> rows;
  std::string classification;  // asymptotic region annotation
  std::string caveat;          // finite-size disclaimer, no tolerance claimed
};
PhaseEmpiricsReport phase_empirics(double kappa, double tau, std::span<const int> d_list,
                                   int n_instances, std::uint64_t seed, int workers = 0);

}  // namespace disclab::moments
