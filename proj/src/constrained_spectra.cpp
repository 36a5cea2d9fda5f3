#include "disclab/constrained_spectra.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace disclab::spectra {

namespace {
constexpr double kPi = std::numbers::pi;

// density of rho_kappa in the theta variable (x = kappa sin theta):
// rho(x) dx = nu(theta) d theta with nu = (4 + kappa^2 - 2 kappa^2 sin^2) / (4 pi)
double nu_theta(double kappa, double theta) {
  const double s = std::sin(theta);
  return (4.0 + kappa * kappa - 2.0 * kappa * kappa * s * s) / (4.0 * kPi);
}
}  // namespace

GaussLegendre::GaussLegendre(int n) {
  if (n < 1) throw std::invalid_argument("GaussLegendre: need n >= 1");
  x.resize(n);
  w.resize(n);
  // Newton iteration on the Legendre polynomial, symmetric nodes
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

QuadratureContext::QuadratureContext(double kappa, int n_nodes) : kappa_(kappa) {
  if (!(kappa > 0.0)) throw std::domain_error("QuadratureContext: kappa must be positive");
  GaussLegendre gl(n_nodes);
  theta_.resize(n_nodes);
  w_.resize(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    theta_[i] = 0.5 * kPi * gl.x[i];
    w_[i] = 0.5 * kPi * gl.w[i];
  }
}

double QuadratureContext::integrate(const std::function<double(double)>& f) const {
  double s = 0.0;
  for (std::size_t i = 0; i < theta_.size(); ++i) {
    const double x = kappa_ * std::sin(theta_[i]);
    s += w_[i] * f(x) * kappa_ * std::cos(theta_[i]);
  }
  return s;
}

double QuadratureContext::integrate_against_rho(const std::function<double(double)>& g) const {
  double s = 0.0;
  for (std::size_t i = 0; i < theta_.size(); ++i)
    s += w_[i] * g(kappa_ * std::sin(theta_[i])) * nu_theta(kappa_, theta_[i]);
  return s;
}

double rho_kappa(double kappa, double x) {
  if (!(kappa > 0.0) || kappa > 2.0) throw std::domain_error("rho_kappa: kappa outside (0, 2]");
  if (!(std::abs(x) < kappa)) throw std::domain_error("rho_kappa: x outside (-kappa, kappa)");
  return (4.0 + kappa * kappa - 2.0 * x * x) / (4.0 * kPi * std::sqrt(kappa * kappa - x * x));
}

std::complex<double> stieltjes_kappa(double kappa, std::complex<double> z) {
  if (!(z.imag() > 0.0)) throw std::domain_error("stieltjes_kappa: need Im z > 0");
  std::complex<double> s = std::sqrt(z * z - kappa * kappa);
  if (s.imag() < 0.0) s = -s;  // branch with Im sqrt >= 0
  return 0.5 * z + (4.0 + kappa * kappa - 2.0 * z * z) / (4.0 * s);
}

double pv_hilbert(double kappa, double x, int n_nodes) {
  if (!(std::abs(x) < kappa)) throw std::domain_error("pv_hilbert: x outside (-kappa, kappa)");
  const double rx = rho_kappa(kappa, x);
  // split off rho(x) * P.V. int dy/(x-y) = rho(x) log((kappa+x)/(kappa-x));
  // the remainder is regular after the theta substitution
  double s = rx * std::log((kappa + x) / (kappa - x));
  GaussLegendre gl(n_nodes);
  for (int i = 0; i < n_nodes; ++i) {
    const double theta = 0.5 * kPi * gl.x[i];
    const double wt = 0.5 * kPi * gl.w[i];
    const double ct = std::cos(theta), st = std::sin(theta);
    const double den = x - kappa * st;
    double val;
    if (std::abs(den) < 1e-9) {
      // removable point: L'Hopital on (nu - rho(x) kappa cos) / (x - kappa sin)
      val = kappa * st / kPi - rx * st / ct;
    } else {
      val = (nu_theta(kappa, theta) - rx * kappa * ct) / den;
    }
    s += wt * val;
  }
  return s;
}

double second_moment_rho(double kappa) {
  return kappa * kappa * (8.0 - kappa * kappa) / 16.0;
}

double normalization_quadrature(double kappa, int n_nodes) {
  QuadratureContext q(kappa, n_nodes);
  return q.integrate_against_rho([](double) { return 1.0; });
}

double second_moment_quadrature(double kappa, int n_nodes) {
  QuadratureContext q(kappa, n_nodes);
  return q.integrate_against_rho([](double x) { return x * x; });
}

std::complex<double> stieltjes_quadrature(double kappa, std::complex<double> z, int n_nodes) {
  QuadratureContext q(kappa, n_nodes);
  std::complex<double> s = 0.0;
  for (int i = 0; i < q.n_nodes(); ++i) {
    const double theta = q.theta()[i];
    s += q.weight()[i] * nu_theta(kappa, theta) / (z - kappa * std::sin(theta));
  }
  return s;
}

SpectralDensity::SpectralDensity(double kappa_in) : kappa(kappa_in) {
  if (!(kappa > 0.0) || kappa > 2.0) throw std::domain_error("SpectralDensity: kappa outside (0, 2]");
}

namespace {

// int_{k-1}^{k+1} (1 - |t - k|) log t dt: the exact log-kernel integral over a
// pair of unit cells at separation k (triangular overlap weight). I(0) = -3/2.
double cell_log_integral(int k) {
  auto A = [](double t) { return t > 0.0 ? t * std::log(t) - t : 0.0; };
  auto B = [](double t) { return t > 0.0 ? 0.5 * t * t * std::log(t) - 0.25 * t * t : 0.0; };
  if (k == 0) return -1.5;
  const double km = k - 1.0, kp = k + 1.0, kk = k;
  double s = (1.0 - kk) * (A(kk) - A(km)) + (B(kk) - B(km));
  s += (1.0 + kk) * (A(kp) - A(kk)) - (B(kp) - B(kk));
  return s;
}

}  // namespace

double entropy_sigma_core(double half_width, const std::function<double(double)>& f, int grid) {
  // Sigma = log(s) + double integral of log|sin a - sin b| nu(a) nu(b),
  // using log|sin a - sin b| = log 2 + log|sin((a-b)/2)| + log cos((a+b)/2).
  // Cells within the diagonal band use the exact triangular log integral.
  const int M = grid;
  const double s = half_width;
  const double dth = kPi / M;
  std::vector<double> nu(M), theta(M);
  for (int i = 0; i < M; ++i) {
    theta[i] = -0.5 * kPi + (i + 0.5) * dth;
    nu[i] = f(s * std::sin(theta[i])) * s * std::cos(theta[i]) * dth;  // cell mass
  }
  constexpr int kBand = 8;
  // per-separation constants for the band: log|sin((a-b)/2)| integrated over a
  // cell pair = dth^2 [log(dth) - log 2 + I(k) + sinc correction]
  double band_const[kBand + 1];
  for (int k = 0; k <= kBand; ++k) {
    double c = std::log(dth) - std::log(2.0) + cell_log_integral(k);
    if (k > 0) c += std::log(std::sin(0.5 * k * dth) / (0.5 * k * dth));
    band_const[k] = c + std::log(2.0);  // re-add the split-off log 2
  }
  double total = 0.0;
  for (int i = 0; i < M; ++i) {
    // diagonal
    total += nu[i] * nu[i] * (band_const[0] + std::log(std::cos(theta[i])));
    for (int j = i + 1; j < M; ++j) {
      const int k = j - i;
      double v;
      if (k <= kBand) {
        v = band_const[k] + std::log(std::cos(0.5 * (theta[i] + theta[j])));
      } else {
        v = std::log(std::abs(std::sin(theta[j]) - std::sin(theta[i])));
      }
      total += 2.0 * nu[i] * nu[j] * v;
    }
  }
  double mass = 0.0;
  for (int i = 0; i < M; ++i) mass += nu[i];
  return total + std::log(s) * mass * mass;
}

double entropy_sigma(const SpectralDensity& rho, int grid) {
  return entropy_sigma_core(rho.kappa, [&rho](double x) { return rho(x); }, grid);
}

double energy_I(const SpectralDensity& rho, int grid) {
  const double sigma = entropy_sigma(rho, grid);
  const double m2 = second_moment_quadrature(rho.kappa);
  return -0.5 * sigma + 0.25 * m2 - 0.375;
}

double energy_closed_form(double kappa) {
  const double k2 = kappa * kappa;
  return -k2 * k2 / 128.0 + k2 / 8.0 - 0.5 * std::log(kappa / 2.0) - 0.375;
}

TricomiOracle::TricomiOracle(double kappa, int n_nodes) : kappa_(kappa), c_(0.0), gl_(n_nodes) {
  if (!(kappa > 0.0)) throw std::domain_error("TricomiOracle: kappa must be positive");
  // fix the constant by unit mass: with rho(x) = [C - T(x)/pi] / (pi sqrt(k^2-x^2)),
  // integrating over (-kappa, kappa) gives C = 1 + (1/pi^2) int T(kappa sin t) dt
  double t_int = 0.0;
  for (std::size_t i = 0; i < gl_.x.size(); ++i) {
    const double theta = 0.5 * kPi * gl_.x[i];
    t_int += 0.5 * kPi * gl_.w[i] * pv_weighted(kappa_ * std::sin(theta));
  }
  c_ = 1.0 + t_int / (kPi * kPi);
}

double TricomiOracle::pv_weighted(double x) const {
  // P.V. int sqrt(kappa^2 - y^2) (y/2) / (x - y) dy by singularity subtraction
  auto h = [this](double y) { return std::sqrt(kappa_ * kappa_ - y * y) * 0.5 * y; };
  const double hx = h(x);
  double s = hx * std::log((kappa_ + x) / (kappa_ - x));
  for (std::size_t i = 0; i < gl_.x.size(); ++i) {
    const double phi = 0.5 * kPi * gl_.x[i];
    const double wt = 0.5 * kPi * gl_.w[i];
    const double y = kappa_ * std::sin(phi);
    const double den = x - y;
    double val;
    if (std::abs(den) < 1e-9) {
      val = -0.5 * kappa_ * kappa_ * std::cos(2.0 * phi);
    } else {
      val = (h(y) - hx) * kappa_ * std::cos(phi) / den;
    }
    s += wt * val;
  }
  return s;
}

double TricomiOracle::operator()(double x) const {
  if (!(std::abs(x) < kappa_)) throw std::domain_error("TricomiOracle: x outside support");
  return (c_ - pv_weighted(x) / kPi) / (kPi * std::sqrt(kappa_ * kappa_ - x * x));
}

double tricomi_density(double kappa, double x, int n_nodes) {
  return TricomiOracle(kappa, n_nodes)(x);
}

}  // namespace disclab::spectra
