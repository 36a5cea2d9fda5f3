#include "disclab/moment_lab.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "disclab/errors.hpp"
#include "disclab/parallel.hpp"
#include "disclab/phase_thresholds.hpp"

namespace disclab::moments {

namespace {

bool norm_hit(const randmat::SymMatrix& m, double kappa) {
  return randmat::op_norm(m) <= kappa;
}

McEstimate binomial_estimate(long hits, long n) {
  McEstimate e;
  e.n_samples = n;
  if (hits == 0) {
    e.zero_hit = true;
    e.mean = 3.0 / static_cast<double>(n);  // one-sided 95% upper bound
    e.stderr_ = 0.0;
    return e;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  e.mean = p;
  e.stderr_ = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
  return e;
}

}  // namespace

McEstimate estimate_prob_opnorm(double kappa, int d, long n_samples, RngStream& rng) {
  if (!(kappa > 0.0)) throw std::domain_error("estimate_prob_opnorm: kappa must be positive");
  if (n_samples < 1) throw std::invalid_argument("estimate_prob_opnorm: n_samples >= 1");
  long hits = 0;
  for (long i = 0; i < n_samples; ++i)
    if (norm_hit(randmat::sample_goe(d, rng), kappa)) ++hits;
  McEstimate e = binomial_estimate(hits, n_samples);
  e.seed = rng.master_seed();
  e.stream = rng.stream_index();
  // direct MC is hopeless when the predicted hit count is below ~10
  const double log_expected = phase::rate_opnorm(kappa) * d * d;
  if (log_expected < std::log(10.0 / static_cast<double>(n_samples))) e.rare_event_warn = true;
  return e;
}

int gray_flip_position(unsigned long k) {
  return 1 + std::countr_zero(k + 1);
}

InstanceResult exact_instance(std::span<const randmat::SymMatrix> ws,
                              std::span<const double> kappa_grid, bool use_fast_norm_path) {
  const int n = static_cast<int>(ws.size());
  if (n < 1) throw std::invalid_argument("exact_instance: empty family");
  if (n > kMaxEnumerationN)
    throw budget_error("exact_instance: n = " + std::to_string(n) + " exceeds the 2^(n-1) budget");
  const int d = ws.front().dim();
  for (const auto& w : ws)
    if (w.dim() != d) throw std::invalid_argument("exact_instance: dimension mismatch");
  for (std::size_t g = 1; g < kappa_grid.size(); ++g)
    if (kappa_grid[g] < kappa_grid[g - 1])
      throw std::invalid_argument("exact_instance: kappa grid must be ascending");

  InstanceResult out;
  out.n = n;
  out.d = d;
  out.kappa_grid.assign(kappa_grid.begin(), kappa_grid.end());
  // hits_at_least[g] counts signings whose margin is <= kappa_grid[g] but
  // > kappa_grid[g-1]; suffix-summed at the end
  std::vector<long> first_bucket(kappa_grid.size() + 1, 0);

  std::vector<int> eps(n, 1);
  randmat::SymMatrix s(d);
  for (const auto& w : ws) s.mat() += w.mat();

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  randmat::OpNormEstimator fast(d);
  out.disc = INFINITY;
  std::vector<int> argmin = eps;
  long validation_clock = 0;

  const unsigned long total = 1UL << (n - 1);
  for (unsigned long k = 0;; ++k) {
    double nrm;
    if (use_fast_norm_path) {
      nrm = fast.estimate(s);
      // hand decision-critical values to the full solve: anything that could
      // lower the running minimum, anything near a gridpoint, and the 1%
      // validation schedule
      bool decision_critical = nrm / sqrt_n < out.disc + 1e-5;
      for (double g : kappa_grid)
        decision_critical = decision_critical || std::abs(nrm / sqrt_n - g) < 1e-5;
      if (decision_critical || (++validation_clock & 127) == 0) {
        const double full = randmat::op_norm(s);
        if (std::abs(full - nrm) > 1e-6 * std::max(1.0, full)) ++out.fast_path_fallbacks;
        nrm = full;
      }
    } else {
      nrm = randmat::op_norm(s);
    }
    const double m = nrm / sqrt_n;
    if (m < out.disc) {
      out.disc = m;
      argmin = eps;
    }
    const auto it = std::lower_bound(kappa_grid.begin(), kappa_grid.end(), m);
    ++first_bucket[static_cast<std::size_t>(it - kappa_grid.begin())];

    if (k + 1 == total) break;
    const int j = gray_flip_position(k);
    s.mat() -= 2.0 * eps[j] * ws[j].mat();
    eps[j] = -eps[j];
  }

  out.z_counts.assign(kappa_grid.size(), 0);
  long running = 0;
  for (std::size_t g = 0; g < kappa_grid.size(); ++g) {
    running += first_bucket[g];
    out.z_counts[g] = 2 * running;  // global flip doubles every solution
  }
  out.argmin = randmat::Signing(argmin);
  return out;
}

namespace {

std::vector<randmat::SymMatrix> sample_family(int n, int d, RngStream& rng) {
  std::vector<randmat::SymMatrix> ws;
  ws.reserve(n);
  for (int i = 0; i < n; ++i) ws.push_back(randmat::sample_goe(d, rng));
  return ws;
}

}  // namespace

FirstMomentReport first_moment_check(double kappa, int n, int d, int n_instances,
                                     long mc_samples, std::uint64_t seed, int workers) {
  if (n > kMaxEnumerationN) throw budget_error("first_moment_check: enumeration budget");
  FirstMomentReport rep;
  rep.kappa = kappa;
  rep.n = n;
  rep.d = d;
  rep.n_instances = n_instances;
  rep.mc_samples = mc_samples;

  const double kappa_arr[1] = {kappa};
  std::vector<double> z(n_instances);
  parallel_for_indexed(n_instances, workers, [&](long i) {
    RngStream rng(seed, RngStream::mix_index(0x1057, static_cast<std::uint64_t>(i)));
    const auto ws = sample_family(n, d, rng);
    z[i] = static_cast<double>(exact_instance(ws, kappa_arr).z_counts[0]);
  });
  rep.mean_exact_z = estimate_iid(z);
  rep.mean_exact_z.seed = seed;

  RngStream mc_rng(seed, RngStream::mix_index(0x1057, 0xFFFF));
  McEstimate p = estimate_prob_opnorm(kappa, d, mc_samples, mc_rng);
  rep.predicted.mean = std::ldexp(p.mean, n);  // 2^n * p
  rep.predicted.stderr_ = std::ldexp(p.stderr_, n);
  rep.predicted.n_samples = p.n_samples;
  rep.predicted.seed = seed;
  rep.predicted.zero_hit = p.zero_hit;
  rep.predicted.rare_event_warn = p.rare_event_warn;

  rep.z_score = z_score(rep.mean_exact_z, rep.predicted);
  rep.pass = std::abs(rep.z_score) <= 3.0 && !p.zero_hit;
  return rep;
}

McEstimate estimate_Gd(double q, double kappa, int n, int d, long n_samples, RngStream& rng) {
  if (!(std::abs(q) < 1.0)) throw std::domain_error("estimate_Gd: need |q| < 1");
  long joint = 0, single = 0;
  RngStream pair_rng = rng.substream(1);
  RngStream single_rng = rng.substream(2);
  for (long i = 0; i < n_samples; ++i) {
    const auto [w, y] = randmat::correlated_pair(q, d, pair_rng);
    if (norm_hit(w, kappa) && norm_hit(y, kappa)) ++joint;
    if (norm_hit(randmat::sample_goe(d, single_rng), kappa)) ++single;
  }
  McEstimate e;
  e.n_samples = n_samples;
  e.seed = rng.master_seed();
  e.stream = rng.stream_index();
  // the joint event decays at least as fast as the single one squared
  if (2.0 * phase::rate_opnorm(kappa) * d * d < std::log(10.0 / static_cast<double>(n_samples)))
    e.rare_event_warn = true;
  if (joint == 0 || single == 0) {
    e.zero_hit = true;
    e.mean = NAN;
    e.stderr_ = INFINITY;
    return e;
  }
  const double pj = static_cast<double>(joint) / n_samples;
  const double ps = static_cast<double>(single) / n_samples;
  e.mean = (std::log(pj) - 2.0 * std::log(ps)) / n;
  // delta method on the logs
  const double vj = (1.0 - pj) / (static_cast<double>(n_samples) * pj);
  const double vs = (1.0 - ps) / (static_cast<double>(n_samples) * ps);
  e.stderr_ = std::sqrt(vj + 4.0 * vs) / n;
  return e;
}

McEstimate second_moment_ratio_bruteforce(double kappa, int n, int d, int n_instances,
                                          std::uint64_t seed, int workers) {
  if (n > kMaxEnumerationN) throw budget_error("second_moment_ratio_bruteforce: budget");
  if (n_instances < 2) throw std::invalid_argument("second_moment_ratio_bruteforce: need >= 2");
  const double kappa_arr[1] = {kappa};
  std::vector<double> z(n_instances);
  parallel_for_indexed(n_instances, workers, [&](long i) {
    RngStream rng(seed, RngStream::mix_index(0x2057, static_cast<std::uint64_t>(i)));
    z[i] = static_cast<double>(exact_instance(sample_family(n, d, rng), kappa_arr).z_counts[0]);
  });

  double s1 = 0.0, s2 = 0.0;
  for (double v : z) {
    s1 += v;
    s2 += v * v;
  }
  McEstimate e;
  e.n_samples = n_instances;
  e.seed = seed;
  if (s1 == 0.0) {
    e.zero_hit = true;
    e.mean = NAN;
    e.stderr_ = INFINITY;
    return e;
  }
  const double m = n_instances;
  e.mean = (s2 / m) / ((s1 / m) * (s1 / m));
  // leave-one-out jackknife
  double jk_sum = 0.0, jk_sq = 0.0;
  for (double v : z) {
    const double m1 = (s1 - v) / (m - 1.0);
    const double m2 = (s2 - v * v) / (m - 1.0);
    const double r = m2 / (m1 * m1);
    jk_sum += r;
    jk_sq += r * r;
  }
  const double jk_mean = jk_sum / m;
  e.stderr_ = std::sqrt((m - 1.0) / m * std::max(0.0, jk_sq - m * jk_mean * jk_mean));
  return e;
}

namespace {

// log C(n, l) by the multiplicative recurrence, in extended precision
std::vector<long double> log_binomials(long n) {
  std::vector<long double> lc(n + 1);
  lc[0] = 0.0L;
  for (long l = 0; l < n; ++l)
    lc[l + 1] = lc[l] + std::log(static_cast<long double>(n - l) /
                                 static_cast<long double>(l + 1));
  return lc;
}

}  // namespace

double log_laplace_sum(const std::function<double(double)>& f, long n) {
  if (n < 1) throw std::invalid_argument("laplace_sum: n >= 1");
  const auto lc = log_binomials(n);
  const long double ln2 = 0.69314718055994530941723212145818L;
  std::vector<long double> term(n + 1);
  long double peak = -INFINITY;
  for (long l = 0; l <= n; ++l) {
    const double q = 2.0 * static_cast<double>(l) / static_cast<double>(n) - 1.0;
    const double fq = f(q);
    if (std::isnan(fq)) throw std::invalid_argument("laplace_sum: F produced NaN");
    term[l] = lc[l] + static_cast<long double>(n) * static_cast<long double>(fq) -
              static_cast<long double>(n) * ln2;
    peak = std::max(peak, term[l]);
  }
  if (peak == -INFINITY) return -INFINITY;
  long double acc = 0.0L, comp = 0.0L;  // Kahan
  for (long l = 0; l <= n; ++l) {
    const long double y = std::exp(term[l] - peak) - comp;
    const long double t = acc + y;
    comp = (t - acc) - y;
    acc = t;
  }
  return static_cast<double>(peak + std::log(acc));
}

double laplace_sum(const std::function<double(double)>& f, long n) {
  return std::exp(log_laplace_sum(f, n));
}

OverlapReconstruction overlap_reconstruction(double kappa, int n, int d, long pairs_per_q,
                                             long single_samples, std::uint64_t seed,
                                             int workers) {
  if (n > kMaxEnumerationN) throw budget_error("overlap_reconstruction: budget");
  OverlapReconstruction rec;
  rec.q_grid.resize(n + 1);
  for (int l = 0; l <= n; ++l) rec.q_grid[l] = 2.0 * l / static_cast<double>(n) - 1.0;

  // shared single-norm estimate
  RngStream srng(seed, RngStream::mix_index(0x3057, 0));
  rec.p_single = estimate_prob_opnorm(kappa, d, single_samples, srng);
  if (rec.p_single.zero_hit) {
    rec.value.zero_hit = true;
    rec.value.mean = NAN;
    rec.value.stderr_ = INFINITY;
    return rec;
  }
  const double ps = rec.p_single.mean;
  const double var_ps = rec.p_single.stderr_ * rec.p_single.stderr_;

  // joint-event estimates at the interior gridpoints
  std::vector<McEstimate> pj(n + 1);
  parallel_for_indexed(n + 1, workers, [&](long l) {
    const double q = rec.q_grid[l];
    if (std::abs(q) >= 1.0) return;
    RngStream rng(seed, RngStream::mix_index(0x3057, 1 + static_cast<std::uint64_t>(l)));
    long hits = 0;
    for (long i = 0; i < pairs_per_q; ++i) {
      const auto [w, y] = randmat::correlated_pair(q, d, rng);
      if (norm_hit(w, kappa) && norm_hit(y, kappa)) ++hits;
    }
    pj[l] = binomial_estimate(hits, pairs_per_q);
  });

  // R = sum_l c_l p_joint(q_l) / ps^2, endpoints reduce to c_l / ps
  const auto lc = log_binomials(n);
  const double n_log2 = n * std::log(2.0);
  double value = 0.0, var_joint_part = 0.0, dr_dps = 0.0;
  bool zero_hit = false;
  rec.gd.resize(n + 1);
  for (int l = 0; l <= n; ++l) {
    const double c = std::exp(static_cast<double>(lc[l]) - n_log2);
    if (std::abs(rec.q_grid[l]) >= 1.0) {
      value += c / ps;
      dr_dps += -c / (ps * ps);
      McEstimate g;  // analytic endpoint: G_d(+-1) = -(1/n) log p_single
      g.mean = -std::log(ps) / n;
      g.stderr_ = std::sqrt(var_ps) / (ps * n);
      g.n_samples = rec.p_single.n_samples;
      rec.gd[l] = g;
      continue;
    }
    zero_hit = zero_hit || pj[l].zero_hit;
    const double p = pj[l].mean;
    value += c * p / (ps * ps);
    var_joint_part += c * c * pj[l].stderr_ * pj[l].stderr_ / (ps * ps * ps * ps);
    dr_dps += -2.0 * c * p / (ps * ps * ps);
    McEstimate g;
    g.mean = (std::log(p) - 2.0 * std::log(ps)) / n;
    g.stderr_ = std::sqrt(pj[l].stderr_ * pj[l].stderr_ / (p * p) + 4.0 * var_ps / (ps * ps)) / n;
    g.n_samples = pj[l].n_samples;
    g.zero_hit = pj[l].zero_hit;
    rec.gd[l] = g;
  }
  rec.value.mean = value;
  rec.value.stderr_ = std::sqrt(var_joint_part + dr_dps * dr_dps * var_ps);
  rec.value.n_samples = pairs_per_q;
  rec.value.seed = seed;
  rec.value.zero_hit = zero_hit;
  return rec;
}

VarianceBoundReport variance_bound_check(double kappa, int d,
                                         const coulomb::ChainConfig& config) {
  VarianceBoundReport rep;
  rep.kappa = kappa;
  rep.d = d;
  coulomb::ChainConfig cfg = config;
  cfg.keep_configs = true;
  coulomb::ChainSamples s = coulomb::run_chains(kappa, d, cfg);
  rep.diag = s.diag;
  rep.var_tr_w = sample_variance(s.tr);
  rep.var_tr_w2 = sample_variance(s.tr2);
  rep.var_tr_wy =
      sample_variance(coulomb::direct_contraction_samples(s, d, cfg.seed, cfg.max_direct_pairs));

  // bound 2 (1+q) (sum_p p kappa^(p-1) |a|)^2 at q = 0
  rep.bound_tr_w = 2.0;                          // P = X
  rep.bound_tr_w2 = 2.0 * 4.0 * kappa * kappa;   // P = X^2
  rep.bound_tr_wy = 2.0 * 4.0 * kappa * kappa;   // P = XY
  rep.pass = rep.var_tr_w <= rep.bound_tr_w && rep.var_tr_w2 <= rep.bound_tr_w2 &&
             rep.var_tr_wy <= rep.bound_tr_wy;
  return rep;
}

PhaseEmpiricsReport phase_empirics(double kappa, double tau, std::span<const int> d_list,
                                   int n_instances, std::uint64_t seed, int workers) {
  PhaseEmpiricsReport rep;
  rep.kappa = kappa;
  rep.tau = tau;
  rep.caveat = "finite-size run; asymptotic trends only, no tolerance claimed at small d";
  if (kappa <= 2.0) {
    const auto c = phase::classify(phase::Margin(kappa), tau);
    rep.classification = phase::to_string(c.region) +
                         (c.second_moment_fails ? " (second moment fails here)" : "");
  } else {
    rep.classification = "SAT (margin above the bulk edge; random signs suffice)";
  }
  for (int d : d_list) {
    const int n = static_cast<int>(std::lround(tau * d * d));
    if (n < 1 || n > kMaxEnumerationN)
      throw budget_error("phase_empirics: n = " + std::to_string(n) + " out of budget at d = " +
                         std::to_string(d));
    PhaseEmpiricsRow row;
    row.d = d;
    row.n = n;
    row.n_instances = n_instances;
    std::vector<double> sat(n_instances);
    const double kappa_arr[1] = {kappa};
    parallel_for_indexed(n_instances, workers, [&](long i) {
      RngStream rng(seed, RngStream::mix_index(0x4057 + d, static_cast<std::uint64_t>(i)));
      const auto r = exact_instance(sample_family(n, d, rng), kappa_arr);
      sat[i] = r.disc <= kappa ? 1.0 : 0.0;
    });
    row.sat_fraction = sample_mean(sat);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace disclab::moments
