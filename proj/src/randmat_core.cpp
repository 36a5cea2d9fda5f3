#include "disclab/randmat_core.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace disclab::randmat {

static_assert(std::endian::native == std::endian::little,
              "matrix fixtures are defined little-endian; add byte swapping for this platform");

SymMatrix SymMatrix::from_upper(int d, std::span<const double> upper) {
  if (static_cast<long>(upper.size()) != static_cast<long>(d) * (d + 1) / 2)
    throw std::invalid_argument("SymMatrix::from_upper: wrong element count");
  SymMatrix m(d);
  std::size_t k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) m.set(i, j, upper[k++]);
  return m;
}

Signing::Signing(std::vector<int> eps) : epsilon(std::move(eps)) {
  for (int e : epsilon)
    if (e != 1 && e != -1) throw std::invalid_argument("Signing: entries must be +-1");
}

Signing Signing::flipped() const {
  std::vector<int> e = epsilon;
  for (int& v : e) v = -v;
  return Signing(std::move(e));
}

SymMatrix sample_goe(int d, RngStream& rng) {
  if (d < 1) throw std::invalid_argument("sample_goe: d >= 1");
  SymMatrix w(d);
  const double off = 1.0 / std::sqrt(static_cast<double>(d));
  const double diag = std::sqrt(2.0 / static_cast<double>(d));
  for (int i = 0; i < d; ++i) {
    w.set(i, i, diag * rng.next_gaussian());
    for (int j = i + 1; j < d; ++j) w.set(i, j, off * rng.next_gaussian());
  }
  return w;
}

std::vector<double> eigenvalues(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigenvalues: symmetric eigensolver did not converge (d = " +
                             std::to_string(m.dim()) + ")");
  return {es.eigenvalues().data(), es.eigenvalues().data() + m.dim()};
}

EigenDecomposition eigendecompose(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.mat());
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecompose: symmetric eigensolver did not converge (d = " +
                             std::to_string(m.dim()) + ")");
  EigenDecomposition out;
  out.lambda.assign(es.eigenvalues().data(), es.eigenvalues().data() + m.dim());
  out.q = es.eigenvectors();
  return out;
}

double op_norm(const SymMatrix& m) {
  const auto lam = eigenvalues(m);
  return std::max(std::abs(lam.front()), std::abs(lam.back()));
}

OpNormEstimator::OpNormEstimator(int d, double tol, int max_iter)
    : tol_(tol), max_iter_(max_iter) {
  v_pos_ = Eigen::VectorXd::Constant(d, 1.0 / std::sqrt(static_cast<double>(d)));
  v_neg_ = v_pos_;
  for (int i = 1; i < d; i += 2) v_neg_(i) = -v_neg_(i);
  v_neg_.normalize();
}

double OpNormEstimator::estimate(const SymMatrix& m) {
  // shifted power iterations from both ends; shift by a norm bound so the
  // iterated matrix is positive semidefinite
  const double shift = m.mat().cwiseAbs().rowwise().sum().maxCoeff();  // >= ||m||_op
  auto extreme = [&](Eigen::VectorXd& v, double sign) {
    double lam = 0.0;
    for (int it = 0; it < max_iter_; ++it) {
      Eigen::VectorXd u = sign * (m.mat() * v) + shift * v;
      const double nrm = u.norm();
      if (nrm == 0.0) return 0.0;
      u /= nrm;
      const double lam_new = sign * (u.dot(m.mat() * u));
      const bool done = std::abs(lam_new - lam) <= tol_ * (std::abs(lam_new) + 1.0);
      lam = lam_new;
      v = u;
      if (done && it > 2) break;
    }
    return lam;
  };
  const double top = extreme(v_pos_, +1.0);
  const double bottom = extreme(v_neg_, -1.0);
  return std::max(std::abs(top), std::abs(bottom));
}

SymMatrix signed_sum(std::span<const SymMatrix> ws, const Signing& eps) {
  if (ws.empty()) throw std::invalid_argument("signed_sum: empty family");
  if (ws.size() != eps.epsilon.size())
    throw std::invalid_argument("signed_sum: |eps| != |Ws|");
  const int d = ws.front().dim();
  SymMatrix s(d);
  for (std::size_t i = 0; i < ws.size(); ++i) {
    if (ws[i].dim() != d) throw std::invalid_argument("signed_sum: dimension mismatch");
    s.mat() += static_cast<double>(eps.epsilon[i]) * ws[i].mat();
  }
  return s;
}

double margin(std::span<const SymMatrix> ws, const Signing& eps) {
  return op_norm(signed_sum(ws, eps)) / std::sqrt(static_cast<double>(ws.size()));
}

std::pair<SymMatrix, SymMatrix> correlated_pair(double q, int d, RngStream& rng) {
  if (!(std::abs(q) < 1.0)) throw std::domain_error("correlated_pair: need |q| < 1");
  SymMatrix w = sample_goe(d, rng);
  SymMatrix z = sample_goe(d, rng);
  SymMatrix y(d);
  y.mat() = q * w.mat() + std::sqrt(1.0 - q * q) * z.mat();
  return {std::move(w), std::move(y)};
}

void save_matrix(const std::string& path, const SymMatrix& m) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("save_matrix: cannot open " + path);
  const std::uint64_t d = static_cast<std::uint64_t>(m.dim());
  std::fwrite(&d, sizeof(d), 1, f);
  for (int i = 0; i < m.dim(); ++i)
    for (int j = i; j < m.dim(); ++j) {
      const double v = m(i, j);
      std::fwrite(&v, sizeof(v), 1, f);
    }
  std::fclose(f);
}

SymMatrix load_matrix(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("load_matrix: cannot open " + path);
  std::uint64_t d = 0;
  if (std::fread(&d, sizeof(d), 1, f) != 1) {
    std::fclose(f);
    throw std::runtime_error("load_matrix: truncated header in " + path);
  }
  const std::size_t count = static_cast<std::size_t>(d) * (d + 1) / 2;
  std::vector<double> upper(count);
  const std::size_t got = std::fread(upper.data(), sizeof(double), count, f);
  std::fclose(f);
  if (got != count) throw std::runtime_error("load_matrix: truncated payload in " + path);
  return SymMatrix::from_upper(static_cast<int>(d), upper);
}

}  // namespace disclab::randmat
