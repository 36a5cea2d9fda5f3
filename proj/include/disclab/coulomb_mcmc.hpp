#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "disclab/estimate.hpp"
#include "disclab/rng.hpp"

namespace disclab::coulomb {

// unnormalized log joint density of the eigenvalue gas on [-kappa, kappa]^d:
// sum_{i<j} log|l_i - l_j| - (d/4) sum l_i^2; -inf for out-of-range or
// coincident points
double log_density(std::span<const double> lambdas, double kappa);

struct ChainConfig {
  double proposal_stddev = 0.15;  // initial; adapted during burn-in only
  int burn_sweeps = 2000;
  int thin = 10;
  long kept_states = 4000;  // per chain, after thinning
  double accept_lo = 0.2;
  double accept_hi = 0.5;
  double accept_target = 0.3;
  std::uint64_t seed = 1;
  int n_chains = 2;
  int workers = 0;
  bool keep_configs = false;   // retain full eigenvalue vectors of kept states
  long max_direct_pairs = 2000;  // budget for direct Haar contractions
};

// Eigenvalue configuration evolving under single-site random-walk Metropolis.
class ChainState {
 public:
  ChainState(std::vector<double> lambdas, double kappa);
  static ChainState equispaced(int d, double kappa);  // spread over (-0.95k, 0.95k)

  const std::vector<double>& lambdas() const { return lam_; }
  double kappa() const { return kappa_; }
  double cached_log_density() const { return logdens_; }
  long step_count() const { return steps_; }

  // one sweep of d single-coordinate proposals; returns the number accepted
  int sweep(double sigma, RngStream& rng);

  // recompute the log density from scratch; returns |cached - recomputed|
  // and resets the cache
  double resync_log_density();

 private:
  std::vector<double> lam_;
  double kappa_;
  double logdens_;
  long steps_ = 0;
};

// single Metropolis sweep at the configured proposal width (value semantics)
ChainState mh_sweep(ChainState state, const ChainConfig& config, RngStream& rng);

// histogram with uniform bins over [-kappa, kappa]
class EsdHistogram {
 public:
  EsdHistogram(double kappa, int n_bins);
  void add(double x, double weight = 1.0);
  void merge(const EsdHistogram& other);

  double kappa() const { return kappa_; }
  int n_bins() const { return static_cast<int>(counts_.size()); }
  double bin_left(int b) const;
  double bin_right(int b) const;
  double bin_mid(int b) const { return 0.5 * (bin_left(b) + bin_right(b)); }
  double total() const { return total_; }
  double count(int b) const { return counts_[b]; }
  double density(int b) const;  // normalized so the histogram integrates to 1

  // L1 distance to a reference density evaluated at bin midpoints
  double l1_distance(const std::function<double(double)>& ref) const;

 private:
  double kappa_;
  std::vector<double> counts_;
  double total_ = 0.0;
};

struct ChainDiagnostics {
  double acceptance = 0.0;        // production phase, pooled over chains
  double sigma = 0.0;             // frozen proposal width (last chain)
  double autocorr_time = 0.0;     // integrated, on the Tr W^2 series
  double max_logdens_drift = 0.0; // worst cache drift seen at resync points
  bool converged = false;         // acceptance stayed in the target band
  std::uint64_t seed = 0;
  int n_chains = 0;
  long kept_states = 0;
};

// raw chain output pooled over chains: per-state Tr W and Tr W^2 plus the
// eigenvalue histogram
struct ChainSamples {
  EsdHistogram hist;
  std::vector<double> tr;    // sum of eigenvalues, per kept state
  std::vector<double> tr2;   // sum of squared eigenvalues, per kept state
  std::vector<double> lmax;  // largest eigenvalue, per kept state
  std::vector<std::vector<double>> configs;  // kept states, if requested
  ChainDiagnostics diag;
};

ChainSamples run_chains(double kappa, int d, const ChainConfig& config, int n_bins = 100);

// Tr[Q L Q^T L'] over pairs of kept states (first half vs second half of the
// pool, a fresh Haar Q per pair); requires configs retained in the samples
std::vector<double> direct_contraction_samples(const ChainSamples& samples, int d,
                                               std::uint64_t seed, long max_pairs);

struct EsdResult {
  EsdHistogram hist;
  double l1_to_rho = 0.0;
  ChainDiagnostics diag;
};

// pooled eigenvalue histogram of the conditioned ensemble, with its L1
// distance to rho_kappa at bin midpoints
EsdResult conditioned_esd(double kappa, int d, const ChainConfig& config, int n_bins = 100);

// Haar-distributed orthogonal matrix (QR with positive-diagonal convention)
Eigen::MatrixXd haar_orthogonal(int d, RngStream& rng);

struct ConditionedMoments {
  McEstimate mean_tr_w2;          // E[Tr W^2]
  McEstimate mean_lambda_pair;    // E[lambda_1 lambda_2]
  McEstimate mean_tr_wwp;         // E[Tr W W'], direct contraction (~0 by symmetry)
  McEstimate var_tr_wwp_closed;   // Var[Tr W W'] via the Haar moment combination
  McEstimate var_tr_wwp_direct;   // Var[Tr W W'] via direct contraction of sample pairs
  ChainDiagnostics diag;
};

ConditionedMoments conditioned_moments(double kappa, int d, const ChainConfig& config);

// finite-d second-moment-potential curvature at q = 0, with n = tau d^2:
// d(d+1)/(2n) - (d/n) E[Tr W^2] + (d^2/(4n)) Var[Tr W W'];
// converges to tau_f(kappa)/tau. Error bar by batch jackknife.
McEstimate estimate_G20(double kappa, int d, double tau, const ChainConfig& config);

// integrated autocorrelation time with Sokal windowing
double autocorr_time(std::span<const double> series);

}  // namespace disclab::coulomb
