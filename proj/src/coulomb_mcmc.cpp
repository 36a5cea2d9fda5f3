#include "disclab/coulomb_mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "disclab/constrained_spectra.hpp"
#include "disclab/parallel.hpp"

namespace disclab::coulomb {

namespace {
constexpr double kCoincidenceGuard = 1e-14;
constexpr int kResyncInterval = 1000;  // sweeps between log-density resyncs
}  // namespace

double log_density(std::span<const double> lambdas, double kappa) {
  const int d = static_cast<int>(lambdas.size());
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    if (!(std::abs(lambdas[i]) <= kappa)) return -INFINITY;
    for (int j = i + 1; j < d; ++j) {
      const double gap = std::abs(lambdas[i] - lambdas[j]);
      if (gap == 0.0) return -INFINITY;
      s += std::log(gap);
    }
    s -= 0.25 * d * lambdas[i] * lambdas[i];
  }
  return s;
}

ChainState::ChainState(std::vector<double> lambdas, double kappa)
    : lam_(std::move(lambdas)), kappa_(kappa) {
  if (lam_.empty()) throw std::invalid_argument("ChainState: empty configuration");
  logdens_ = log_density(lam_, kappa_);
  if (logdens_ == -INFINITY)
    throw std::invalid_argument("ChainState: initial configuration infeasible");
}

ChainState ChainState::equispaced(int d, double kappa) {
  std::vector<double> lam(d);
  for (int i = 0; i < d; ++i)
    lam[i] = d == 1 ? 0.0 : -0.95 * kappa + 1.9 * kappa * i / (d - 1.0);
  return ChainState(std::move(lam), kappa);
}

int ChainState::sweep(double sigma, RngStream& rng) {
  const int d = static_cast<int>(lam_.size());
  int accepted = 0;
  for (int i = 0; i < d; ++i) {
    const double old = lam_[i];
    const double prop = old + sigma * rng.next_gaussian();
    if (std::abs(prop) > kappa_) continue;  // hard wall
    // log-gas ratio: product of |prop - l_j| / |old - l_j|, with a log-space
    // fallback if the running product leaves the normal range
    double ratio = 1.0;
    bool coincident = false;
    for (int j = 0; j < d; ++j) {
      if (j == i) continue;
      const double num = std::abs(prop - lam_[j]);
      if (num < kCoincidenceGuard) {
        coincident = true;
        break;
      }
      ratio *= num / std::abs(old - lam_[j]);
    }
    if (coincident) continue;
    double dlog;
    if (ratio > 0.0 && std::isfinite(ratio)) {
      dlog = std::log(ratio);
    } else {
      dlog = 0.0;
      for (int j = 0; j < d; ++j) {
        if (j == i) continue;
        dlog += std::log(std::abs(prop - lam_[j])) - std::log(std::abs(old - lam_[j]));
      }
    }
    dlog -= 0.25 * d * (prop * prop - old * old);
    if (dlog >= 0.0) {
      lam_[i] = prop;
      logdens_ += dlog;
      ++accepted;
    } else {
      const double u = rng.next_double();
      if (u > 0.0 && std::log(u) < dlog) {
        lam_[i] = prop;
        logdens_ += dlog;
        ++accepted;
      }
    }
  }
  ++steps_;
  return accepted;
}

double ChainState::resync_log_density() {
  const double fresh = log_density(lam_, kappa_);
  const double drift = std::abs(fresh - logdens_);
  logdens_ = fresh;
  return drift;
}

ChainState mh_sweep(ChainState state, const ChainConfig& config, RngStream& rng) {
  state.sweep(config.proposal_stddev, rng);
  return state;
}

EsdHistogram::EsdHistogram(double kappa, int n_bins) : kappa_(kappa), counts_(n_bins, 0.0) {
  if (n_bins < 1) throw std::invalid_argument("EsdHistogram: need at least one bin");
}

double EsdHistogram::bin_left(int b) const {
  return -kappa_ + 2.0 * kappa_ * b / static_cast<double>(n_bins());
}

double EsdHistogram::bin_right(int b) const { return bin_left(b + 1); }

void EsdHistogram::add(double x, double weight) {
  int b = static_cast<int>((x + kappa_) / (2.0 * kappa_) * n_bins());
  b = std::clamp(b, 0, n_bins() - 1);
  counts_[b] += weight;
  total_ += weight;
}

void EsdHistogram::merge(const EsdHistogram& other) {
  if (other.n_bins() != n_bins() || other.kappa_ != kappa_)
    throw std::invalid_argument("EsdHistogram::merge: incompatible binning");
  for (int b = 0; b < n_bins(); ++b) counts_[b] += other.counts_[b];
  total_ += other.total_;
}

double EsdHistogram::density(int b) const {
  const double width = 2.0 * kappa_ / n_bins();
  return total_ > 0.0 ? counts_[b] / (total_ * width) : 0.0;
}

double EsdHistogram::l1_distance(const std::function<double(double)>& ref) const {
  const double width = 2.0 * kappa_ / n_bins();
  double s = 0.0;
  for (int b = 0; b < n_bins(); ++b) s += std::abs(density(b) - ref(bin_mid(b))) * width;
  return s;
}

double autocorr_time(std::span<const double> series) {
  const long n = static_cast<long>(series.size());
  if (n < 16) return 1.0;
  double mean = 0.0;
  for (double x : series) mean += x;
  mean /= static_cast<double>(n);
  std::vector<double> c(n / 4, 0.0);
  for (long t = 0; t < static_cast<long>(c.size()); ++t) {
    double s = 0.0;
    for (long i = 0; i + t < n; ++i) s += (series[i] - mean) * (series[i + t] - mean);
    c[t] = s / static_cast<double>(n - t);
  }
  if (c[0] <= 0.0) return 1.0;
  double tau = 1.0;
  for (long t = 1; t < static_cast<long>(c.size()); ++t) {
    tau += 2.0 * c[t] / c[0];
    if (static_cast<double>(t) >= 5.0 * tau) break;  // Sokal window
  }
  return std::max(tau, 1.0);
}

ChainSamples run_chains(double kappa, int d, const ChainConfig& config, int n_bins) {
  if (!(kappa > 0.0)) throw std::domain_error("run_chains: kappa must be positive");
  if (d < 1) throw std::invalid_argument("run_chains: d >= 1");
  if (config.n_chains < 1 || config.kept_states < 1 || config.thin < 1 ||
      config.burn_sweeps < 0)
    throw std::invalid_argument("run_chains: invalid chain configuration");

  struct PerChain {
    EsdHistogram hist;
    std::vector<double> tr, tr2, lmax;
    std::vector<std::vector<double>> configs;
    double acceptance = 0.0;
    double sigma = 0.0;
    double drift = 0.0;
  };
  std::vector<PerChain> per(config.n_chains,
                            PerChain{EsdHistogram(kappa, n_bins), {}, {}, {}, {}});

  parallel_for_indexed(config.n_chains, config.workers, [&](long c) {
    RngStream rng(config.seed, RngStream::mix_index(0xC0A1, static_cast<std::uint64_t>(c)));
    ChainState state = ChainState::equispaced(d, kappa);
    double sigma = config.proposal_stddev;

    // burn-in with proposal-width adaptation toward the target acceptance
    constexpr int kAdaptBlock = 50;
    long acc_block = 0;
    for (int s = 1; s <= config.burn_sweeps; ++s) {
      acc_block += state.sweep(sigma, rng);
      if (s % kAdaptBlock == 0) {
        const double rate = static_cast<double>(acc_block) / (kAdaptBlock * d);
        sigma *= std::exp(0.7 * (rate - config.accept_target));
        sigma = std::clamp(sigma, 1e-4 * kappa, kappa);
        acc_block = 0;
      }
    }
    state.resync_log_density();

    // production with the kernel frozen
    PerChain& out = per[c];
    out.sigma = sigma;
    out.tr.reserve(config.kept_states);
    out.tr2.reserve(config.kept_states);
    out.lmax.reserve(config.kept_states);
    long accepted = 0;
    long proposals = 0;
    for (long k = 0; k < config.kept_states; ++k) {
      for (int t = 0; t < config.thin; ++t) {
        accepted += state.sweep(sigma, rng);
        proposals += d;
        if (state.step_count() % kResyncInterval == 0)
          out.drift = std::max(out.drift, state.resync_log_density());
      }
      double tr = 0.0, tr2 = 0.0, mx = -INFINITY;
      for (double l : state.lambdas()) {
        out.hist.add(l);
        tr += l;
        tr2 += l * l;
        mx = std::max(mx, l);
      }
      out.tr.push_back(tr);
      out.tr2.push_back(tr2);
      out.lmax.push_back(mx);
      if (config.keep_configs) out.configs.push_back(state.lambdas());
    }
    out.acceptance = proposals > 0 ? static_cast<double>(accepted) / proposals : 1.0;
  });

  // pool in chain order (deterministic reduction)
  ChainSamples pooled{EsdHistogram(kappa, n_bins), {}, {}, {}, {}, {}};
  double acc = 0.0;
  bool in_band = true;
  for (PerChain& p : per) {
    pooled.hist.merge(p.hist);
    pooled.tr.insert(pooled.tr.end(), p.tr.begin(), p.tr.end());
    pooled.tr2.insert(pooled.tr2.end(), p.tr2.begin(), p.tr2.end());
    pooled.lmax.insert(pooled.lmax.end(), p.lmax.begin(), p.lmax.end());
    for (auto& cfg : p.configs) pooled.configs.push_back(std::move(cfg));
    acc += p.acceptance;
    in_band = in_band && p.acceptance >= config.accept_lo && p.acceptance <= config.accept_hi;
    pooled.diag.max_logdens_drift = std::max(pooled.diag.max_logdens_drift, p.drift);
  }
  pooled.diag.acceptance = acc / config.n_chains;
  pooled.diag.sigma = per.back().sigma;
  pooled.diag.converged = in_band;
  pooled.diag.seed = config.seed;
  pooled.diag.n_chains = config.n_chains;
  pooled.diag.kept_states = static_cast<long>(pooled.tr.size());
  pooled.diag.autocorr_time = autocorr_time(per.front().tr2);
  return pooled;
}

EsdResult conditioned_esd(double kappa, int d, const ChainConfig& config, int n_bins) {
  if (d < 2) throw std::invalid_argument("conditioned_esd: d >= 2");
  if (!(kappa > 0.0) || kappa > 2.0)
    throw std::domain_error("conditioned_esd: kappa outside (0, 2]");
  ChainSamples s = run_chains(kappa, d, config, n_bins);
  EsdResult r{s.hist, 0.0, s.diag};
  r.l1_to_rho = s.hist.l1_distance(
      [kappa](double x) { return std::abs(x) < kappa ? spectra::rho_kappa(kappa, x) : 0.0; });
  return r;
}

Eigen::MatrixXd haar_orthogonal(int d, RngStream& rng) {
  if (d < 1) throw std::invalid_argument("haar_orthogonal: d >= 1");
  Eigen::MatrixXd g(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) g(i, j) = rng.next_gaussian();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  // sign convention: positive diagonal of R makes the factorization unique
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

namespace {

// exact finite-d Haar combination for Var[Tr W W'] from the eigenvalue moments
// a = E[lambda_1^2], b = E[lambda_1 lambda_2]
double haar_variance_combination(int d, double a, double b) {
  const double dd = d;
  const double t1 = 3.0 / (dd * (dd + 2.0)) * dd * dd * a * a;
  const double t2 = 1.0 / (dd * (dd + 2.0)) * 2.0 * dd * dd * (dd - 1.0) * a * b;
  const double t3 =
      (dd + 1.0) / (dd * (dd - 1.0) * (dd + 2.0)) * dd * dd * (dd - 1.0) * (dd - 1.0) * b * b;
  return t1 + t2 + t3;
}

struct MomentAccumulator {
  double mean_tr2 = 0.0;     // E[Tr W^2]
  double mean_pair = 0.0;    // E[lambda_1 lambda_2]
  double var_closed = 0.0;   // Var[Tr W W'] via Haar combination
};

MomentAccumulator moments_from(const std::vector<double>& tr, const std::vector<double>& tr2,
                               int d, long skip_begin, long skip_end) {
  // means over the pooled states excluding [skip_begin, skip_end)
  double s2 = 0.0, spair = 0.0;
  long n = 0;
  for (long i = 0; i < static_cast<long>(tr.size()); ++i) {
    if (i >= skip_begin && i < skip_end) continue;
    s2 += tr2[i];
    spair += (tr[i] * tr[i] - tr2[i]) / (static_cast<double>(d) * (d - 1.0));
    ++n;
  }
  MomentAccumulator m;
  m.mean_tr2 = s2 / n;
  m.mean_pair = spair / n;
  m.var_closed = haar_variance_combination(d, m.mean_tr2 / d, m.mean_pair);
  return m;
}

}  // namespace

ConditionedMoments conditioned_moments(double kappa, int d, const ChainConfig& config) {
  if (d < 2) throw std::invalid_argument("conditioned_moments: d >= 2");
  ChainConfig cfg = config;
  cfg.keep_configs = true;
  ChainSamples s = run_chains(kappa, d, cfg);
  const long n = static_cast<long>(s.tr.size());

  ConditionedMoments out;
  out.diag = s.diag;
  out.mean_tr_w2 = estimate_batched(s.tr2);
  out.mean_tr_w2.seed = config.seed;
  {
    std::vector<double> pair(n);
    for (long i = 0; i < n; ++i)
      pair[i] = (s.tr[i] * s.tr[i] - s.tr2[i]) / (static_cast<double>(d) * (d - 1.0));
    out.mean_lambda_pair = estimate_batched(pair);
    out.mean_lambda_pair.seed = config.seed;
  }

  // (a) closed combination, error bar by batch jackknife
  {
    const MomentAccumulator full = moments_from(s.tr, s.tr2, d, 0, 0);
    const int n_batches = 20;
    const long len = n / n_batches;
    std::vector<double> jk(n_batches);
    for (int b = 0; b < n_batches; ++b)
      jk[b] = moments_from(s.tr, s.tr2, d, b * len, (b + 1) * len).var_closed;
    double jk_mean = 0.0;
    for (double v : jk) jk_mean += v;
    jk_mean /= n_batches;
    double var = 0.0;
    for (double v : jk) var += (v - jk_mean) * (v - jk_mean);
    out.var_tr_wwp_closed.mean = full.var_closed;
    out.var_tr_wwp_closed.stderr_ =
        std::sqrt(var * (n_batches - 1.0) / n_batches);
    out.var_tr_wwp_closed.n_samples = n;
    out.var_tr_wwp_closed.seed = config.seed;
  }

  // (b) direct Haar contraction over independent state pairs
  {
    const std::vector<double> contraction =
        direct_contraction_samples(s, d, config.seed, config.max_direct_pairs);
    out.mean_tr_wwp = estimate_iid(contraction);
    out.mean_tr_wwp.seed = config.seed;
    const double v = sample_variance(contraction);
    out.var_tr_wwp_direct.mean = v;
    // sampling error of a variance, Gaussian approximation
    out.var_tr_wwp_direct.stderr_ =
        v * std::sqrt(2.0 / (static_cast<double>(contraction.size()) - 1.0));
    out.var_tr_wwp_direct.n_samples = static_cast<long>(contraction.size());
    out.var_tr_wwp_direct.seed = config.seed;
  }
  return out;
}

std::vector<double> direct_contraction_samples(const ChainSamples& samples, int d,
                                               std::uint64_t seed, long max_pairs) {
  // pair the first half of the pool with the second half; with two chains
  // those halves come from distinct chains
  const long n = static_cast<long>(samples.configs.size());
  if (n < 4) throw std::invalid_argument("direct_contraction_samples: configs not retained");
  const long half = n / 2;
  const long n_pairs = std::min(half, max_pairs);
  const long stride = std::max<long>(1, half / n_pairs);
  RngStream haar_rng(seed, RngStream::mix_index(0x4AA7, 1));
  std::vector<double> contraction;
  contraction.reserve(n_pairs);
  Eigen::VectorXd lam(d), lamp(d);
  for (long p = 0; p < n_pairs && p * stride < half; ++p) {
    const auto& a = samples.configs[p * stride];
    const auto& b = samples.configs[half + p * stride];
    for (int i = 0; i < d; ++i) {
      lam(i) = a[i];
      lamp(i) = b[i];
    }
    const Eigen::MatrixXd q = haar_orthogonal(d, haar_rng);
    // Tr[Q L Q^T L'] = sum_{jk} lam'_j Q_jk^2 lam_k
    contraction.push_back(lamp.dot((q.array() * q.array()).matrix() * lam));
  }
  return contraction;
}

McEstimate estimate_G20(double kappa, int d, double tau, const ChainConfig& config) {
  if (!(tau > 0.0)) throw std::domain_error("estimate_G20: tau must be positive");
  if (d < 2) throw std::invalid_argument("estimate_G20: d >= 2");
  ChainSamples s = run_chains(kappa, d, config);
  const long n_states = static_cast<long>(s.tr.size());
  const double n = tau * static_cast<double>(d) * d;

  auto g20 = [&](long skip_b, long skip_e) {
    const MomentAccumulator m = moments_from(s.tr, s.tr2, d, skip_b, skip_e);
    return d * (d + 1.0) / (2.0 * n) - (d / n) * m.mean_tr2 +
           d * static_cast<double>(d) / (4.0 * n) * m.var_closed;
  };

  McEstimate e;
  e.mean = g20(0, 0);
  const int n_batches = 20;
  const long len = n_states / n_batches;
  std::vector<double> jk(n_batches);
  for (int b = 0; b < n_batches; ++b) jk[b] = g20(b * len, (b + 1) * len);
  double jk_mean = 0.0;
  for (double v : jk) jk_mean += v;
  jk_mean /= n_batches;
  double var = 0.0;
  for (double v : jk) var += (v - jk_mean) * (v - jk_mean);
  e.stderr_ = std::sqrt(var * (n_batches - 1.0) / n_batches);
  e.n_samples = n_states;
  e.seed = config.seed;
  return e;
}

}  // namespace disclab::coulomb
