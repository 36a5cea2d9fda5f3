#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace disclab::spectra {

// Gauss-Legendre nodes/weights on [-1, 1]
struct GaussLegendre {
  std::vector<double> x, w;
  explicit GaussLegendre(int n);
};

// Quadrature over (-kappa, kappa) built on the substitution x = kappa sin(theta),
// which absorbs the inverse-square-root edge factor of the constrained density.
class QuadratureContext {
 public:
  QuadratureContext(double kappa, int n_nodes = 400);

  double kappa() const { return kappa_; }
  int n_nodes() const { return static_cast<int>(theta_.size()); }

  // integral of f over (-kappa, kappa)
  double integrate(const std::function<double(double)>& f) const;
  // integral of g(x) rho_kappa(x) dx
  double integrate_against_rho(const std::function<double(double)>& g) const;

  const std::vector<double>& theta() const { return theta_; }
  const std::vector<double>& weight() const { return w_; }

 private:
  double kappa_;
  std::vector<double> theta_, w_;
};

// equilibrium density of GOE conditioned on ||W||_op <= kappa:
// rho_kappa(x) = (4 + kappa^2 - 2 x^2) / (4 pi sqrt(kappa^2 - x^2)) on (-kappa, kappa)
double rho_kappa(double kappa, double x);

// Stieltjes transform G(z) = z/2 + (4 + kappa^2 - 2 z^2) / (4 sqrt(z^2 - kappa^2)),
// branch with Im sqrt >= 0; defined for Im z > 0, decays like 1/z.
std::complex<double> stieltjes_kappa(double kappa, std::complex<double> z);

// P.V. integral of rho_kappa(y) / (x - y); equals x/2 on the support
// (the equilibrium condition). Singularity-subtraction quadrature.
double pv_hilbert(double kappa, double x, int n_nodes = 400);

// closed form: second moment of rho_kappa = kappa^2 (8 - kappa^2) / 16
double second_moment_rho(double kappa);

// quadrature oracles for the closed forms above
double normalization_quadrature(double kappa, int n_nodes = 400);
double second_moment_quadrature(double kappa, int n_nodes = 400);
// quadrature oracle for the Stieltjes transform at one point
std::complex<double> stieltjes_quadrature(double kappa, std::complex<double> z,
                                          int n_nodes = 800);

struct SpectralDensity {
  explicit SpectralDensity(double kappa);
  double kappa;
  double operator()(double x) const { return rho_kappa(kappa, x); }
};

// non-commutative entropy Sigma(mu) = double integral of log|x - y| d mu d mu,
// for a density f supported on (-half_width, half_width), on the theta grid
// with the diagonal band handled analytically. Declared accuracy ~1e-4.
double entropy_sigma_core(double half_width, const std::function<double(double)>& f,
                          int grid = 4000);
double entropy_sigma(const SpectralDensity& rho, int grid = 4000);

// I(mu) = -1/2 Sigma(mu) + 1/4 int x^2 mu(dx) - 3/8, moments by quadrature
double energy_I(const SpectralDensity& rho, int grid = 4000);

// closed form of inf I over measures on [-kappa, kappa]:
// E_kappa = -kappa^4/128 + kappa^2/8 - (1/2) log(kappa/2) - 3/8
double energy_closed_form(double kappa);

// Independent reconstruction of rho_kappa by numerically inverting the
// equilibrium condition on [-kappa, kappa] (airfoil/finite-Hilbert inversion
// with the constant fixed by unit mass). Oracle for rho_kappa.
class TricomiOracle {
 public:
  explicit TricomiOracle(double kappa, int n_nodes = 400);
  double operator()(double x) const;
  double normalization_constant() const { return c_; }

 private:
  double pv_weighted(double x) const;  // P.V. of sqrt(kappa^2-y^2) (y/2) / (x-y)
  double kappa_;
  double c_;
  GaussLegendre gl_;
};

double tricomi_density(double kappa, double x, int n_nodes = 400);

}  // namespace disclab::spectra
