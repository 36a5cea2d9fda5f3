#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "disclab/rng.hpp"

namespace disclab::randmat {

// Dense d x d real symmetric matrix. The factory methods guarantee exact
// symmetry; entries are plain doubles.
class SymMatrix {
 public:
  explicit SymMatrix(int d) : m_(Eigen::MatrixXd::Zero(d, d)) {}
  static SymMatrix from_upper(int d, std::span<const double> upper);  // row-major upper triangle

  int dim() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  void set(int i, int j, double v) { m_(i, j) = v; m_(j, i) = v; }

  const Eigen::MatrixXd& mat() const { return m_; }
  Eigen::MatrixXd& mat() { return m_; }

  double trace() const { return m_.trace(); }
  double frobenius() const { return m_.norm(); }

 private:
  Eigen::MatrixXd m_;
};

struct Signing {
  explicit Signing(std::vector<int> eps);
  std::vector<int> epsilon;  // entries in {-1, +1}
  Signing flipped() const;
};

// GOE(d): W_ij ~ N(0, (1+delta_ij)/d) independently for i <= j
SymMatrix sample_goe(int d, RngStream& rng);

// ascending eigenvalues (dense symmetric solve)
std::vector<double> eigenvalues(const SymMatrix& m);

// eigenvalues + orthonormal eigenvectors (columns of q)
struct EigenDecomposition {
  std::vector<double> lambda;
  Eigen::MatrixXd q;
};
EigenDecomposition eigendecompose(const SymMatrix& m);

// operator norm: max |eigenvalue|
double op_norm(const SymMatrix& m);

// Warm-startable power-iteration estimate of the operator norm; optional fast
// path, always verifiable against the full solve.
class OpNormEstimator {
 public:
  explicit OpNormEstimator(int d, double tol = 1e-9, int max_iter = 5000);
  double estimate(const SymMatrix& m);

 private:
  double tol_;
  int max_iter_;
  Eigen::VectorXd v_pos_, v_neg_;  // warm-start vectors for both spectrum ends
};

// sum of eps_i W_i
SymMatrix signed_sum(std::span<const SymMatrix> ws, const Signing& eps);

// op_norm(signed_sum) / sqrt(n)
double margin(std::span<const SymMatrix> ws, const Signing& eps);

// (W, q W + sqrt(1-q^2) Z) with W, Z independent GOE(d); both marginals GOE(d)
std::pair<SymMatrix, SymMatrix> correlated_pair(double q, int d, RngStream& rng);

// flat binary fixture: u64 d (little-endian), then row-major upper triangle doubles
void save_matrix(const std::string& path, const SymMatrix& m);
SymMatrix load_matrix(const std::string& path);

}  // namespace disclab::randmat
