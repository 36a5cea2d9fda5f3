#pragma once

#include <string>
#include <utility>
#include <vector>

namespace disclab::phase {

// Margin parameter kappa, restricted to the interesting window (0, 2].
// Above 2 a plain random signing already works; rate_opnorm() is the one
// function that accepts any kappa > 0.
class Margin {
 public:
  explicit Margin(double kappa);
  double value() const { return kappa_; }

 private:
  double kappa_;
};

enum class Region { UNSAT, SAT, UNKNOWN };

std::string to_string(Region r);

// One gridpoint of the phase diagram: every threshold curve evaluated at kappa.
struct PhaseRow {
  double kappa = 0.0;
  double tau1 = 0.0;
  double bartau = 0.0;
  double tau2 = 0.0;
  double tau_f = 0.0;
  double eta_star = 0.0;
  double delta_star = 0.0;
};

struct Classification {
  Region region = Region::UNKNOWN;
  bool second_moment_fails = false;
};

// binary entropy H(p) = -p log p - (1-p) log(1-p), natural base, H(0)=H(1)=0
double binary_entropy(double p);

// first-moment threshold of the annealed signing count:
// tau1 = [-(k^4)/128 + k^2/8 - (1/2) log(k/2) - 3/8] / log 2
double tau1(Margin kappa);

// large-deviation rate for P[||W||_op <= kappa] at scale d^2; 0 for kappa > 2.
// Satisfies rate_opnorm(k) = -tau1(k) * log 2 on (0, 2].
double rate_opnorm(double kappa);

// unique delta in (0,1) with H((1+delta)/2) = (eta/(1+eta)) log 2
double delta_eta(double eta);

// the two branches of the second-moment threshold curve in eta
double ttau_f_branch(double eta, Margin kappa);  // (1+eta) tau1(kappa), increasing
double ttau_g_branch(double eta, Margin kappa);  // delta_eta polynomial, decreasing
double ttau(double eta, Margin kappa);           // max of the two

// crossing point f = g; requires kappa < 2 (at kappa = 2, f vanishes identically)
double eta_star(Margin kappa);

// bartau(kappa) = min over eta of ttau(eta, kappa) = ttau(eta_star, kappa)
double bartau(Margin kappa);

// tau2(kappa) = min over u in (0, kappa] of bartau(u); non-increasing in kappa.
// Coarse grid (step 1e-3) plus golden-section refinement around the argmin.
double tau2(Margin kappa);

// tau2 at the kappa -> 2 endpoint, reported as the limit from kappa = 2 - 1e-6
double tau2_limit_at_2();

// second-moment-failure threshold: tau_f = (1/2) (kappa^2/4 - 1)^4
double tau_f(Margin kappa);

// the two roots of tau1 = tau_f in (0, 2); between them tau1 < tau_f
std::pair<double, double> crossing_tau1_tauf();

// UNSAT if tau < tau1, SAT if tau > tau2, else UNKNOWN;
// second_moment_fails = (tau < tau_f), reported independently of the region
Classification classify(Margin kappa, double tau);

// one PhaseRow per gridpoint; grid must be ascending, values in (0, 2).
// Rows may be evaluated in parallel; output order is grid order.
std::vector<PhaseRow> phase_table(const std::vector<double>& kappa_grid, int workers = 0);

}  // namespace disclab::phase
