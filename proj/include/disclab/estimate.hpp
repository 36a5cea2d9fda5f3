#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace disclab {

// A Monte-Carlo scalar estimate: mean, standard error, sample count, and the
// seed that produced it. Flags mark results that must not be read as a
// two-sided interval.
struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  long n_samples = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  bool zero_hit = false;       // no event observed; mean is a one-sided 95% bound
  bool rare_event_warn = false;

  bool agrees_with(double value, double n_sigma = 3.0) const {
    return std::abs(mean - value) <= n_sigma * stderr_;
  }
};

// z-score between two independent estimates of the same quantity
inline double z_score(const McEstimate& a, const McEstimate& b) {
  const double s = std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
  if (s == 0.0) return (a.mean == b.mean) ? 0.0 : INFINITY;
  return (a.mean - b.mean) / s;
}

inline double sample_mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double sample_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) throw std::invalid_argument("sample_variance: need n >= 2");
  const double m = sample_mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

// mean +/- stderr for i.i.d. samples
inline McEstimate estimate_iid(const std::vector<double>& xs) {
  McEstimate e;
  e.n_samples = static_cast<long>(xs.size());
  e.mean = sample_mean(xs);
  e.stderr_ = xs.size() >= 2 ? std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()))
                             : INFINITY;
  return e;
}

// mean +/- stderr for a correlated series, via non-overlapping batch means
inline McEstimate estimate_batched(const std::vector<double>& xs, int n_batches = 32) {
  const long n = static_cast<long>(xs.size());
  if (n < 2 * n_batches) return estimate_iid(xs);
  const long len = n / n_batches;
  std::vector<double> batch(n_batches);
  for (int b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (long i = b * len; i < (b + 1) * len; ++i) s += xs[i];
    batch[b] = s / static_cast<double>(len);
  }
  McEstimate e = estimate_iid(batch);
  e.n_samples = n;
  return e;
}

}  // namespace disclab
