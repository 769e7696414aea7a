#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "errors.hpp"

namespace qbn::linalg {

// Solves A X + X A^T + D = 0 for real A, D (Bartels-Stewart on the complex
// Schur form). A must have no pair of eigenvalues with λ_i + conj(λ_j) = 0.
template <typename Derived1, typename Derived2>
Eigen::Matrix<typename Derived1::Scalar, Eigen::Dynamic, Eigen::Dynamic> solve_lyapunov(
    const Eigen::MatrixBase<Derived1>& A, const Eigen::MatrixBase<Derived2>& D,
    double pivot_tol = 1e-300) {
  using Real = typename Derived1::Scalar;
  using C = std::complex<Real>;
  using CM = Eigen::Matrix<C, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = A.rows();

  Eigen::ComplexSchur<CM> schur(A.template cast<C>());
  const CM& T = schur.matrixT();
  const CM& U = schur.matrixU();
  CM F = -(U.adjoint() * D.template cast<C>() * U);

  // T Y + Y T^H = F, column j depends on columns k > j.
  CM Y = CM::Zero(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    Eigen::Matrix<C, Eigen::Dynamic, 1> rhs = F.col(j);
    for (Eigen::Index k = j + 1; k < n; ++k) rhs -= std::conj(T(j, k)) * Y.col(k);
    CM Tj = T;
    Tj.diagonal().array() += std::conj(T(j, j));
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(Tj(i, i)) <= pivot_tol)
        throw error(errc::singular_drift, "Lyapunov operator is singular");
    Y.col(j) = Tj.template triangularView<Eigen::Upper>().solve(rhs);
  }
  Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> X = (U * Y * U.adjoint()).real();
  return (X + X.transpose()) / Real(2);
}

// Exact one-step propagator of dm/dt = A m + f, dS/dt = A S + S A^T + D:
//   m(t+h) = Φ m(t) + g,   S(t+h) = Φ S(t) Φ^T + Q.
struct step_propagator {
  Eigen::MatrixXd phi;
  Eigen::VectorXd g;
  Eigen::MatrixXd Q;
  double h = 0.0;
};

inline step_propagator make_propagator(const Eigen::MatrixXd& A, const Eigen::VectorXd& f,
                                       const Eigen::MatrixXd& D, double h) {
  const Eigen::Index n = A.rows();
  step_propagator p;
  p.h = h;
  if (h == 0.0) {
    p.phi = Eigen::MatrixXd::Identity(n, n);
    p.g = Eigen::VectorXd::Zero(n);
    p.Q = Eigen::MatrixXd::Zero(n, n);
    return p;
  }
  // Work on a short base step then double; Van Loan blocks stay well scaled.
  const double norm = A.cwiseAbs().rowwise().sum().maxCoeff() + D.cwiseAbs().rowwise().sum().maxCoeff();
  int doublings = 0;
  double h0 = h;
  while (h0 * norm > 0.5 && doublings < 60) {
    h0 /= 2.0;
    ++doublings;
  }

  // exp([[-A, D], [0, A^T]] h0) = [[., G12], [0, F22]]; Φ = F22^T, Q = Φ G12.
  Eigen::MatrixXd vl = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  vl.topLeftCorner(n, n) = -A * h0;
  vl.topRightCorner(n, n) = D * h0;
  vl.bottomRightCorner(n, n) = A.transpose() * h0;
  Eigen::MatrixXd E = vl.exp();
  p.phi = E.bottomRightCorner(n, n).transpose();
  p.Q = p.phi * E.topRightCorner(n, n);
  p.Q = (p.Q + p.Q.transpose()) / 2.0;

  // exp([[A, f], [0, 0]] h0) gives the forced response.
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = A * h0;
  aug.topRightCorner(n, 1) = f * h0;
  p.g = aug.exp().topRightCorner(n, 1);

  for (int k = 0; k < doublings; ++k) {
    p.g = p.g + p.phi * p.g;
    p.Q = p.Q + p.phi * p.Q * p.phi.transpose();
    p.Q = (p.Q + p.Q.transpose()) / 2.0;
    p.phi = p.phi * p.phi;
  }
  return p;
}

// Symplectic eigenvalues of a real covariance matrix with Ω = ⊕ [[0, 1], [-1, 0]].
inline Eigen::VectorXd symplectic_eigenvalues(const Eigen::MatrixXd& S) {
  const Eigen::Index n = S.rows() / 2;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(S.rows(), S.cols());
  for (Eigen::Index m = 0; m < n; ++m) {
    W(2 * m, 2 * m + 1) = 1.0;
    W(2 * m + 1, 2 * m) = -1.0;
  }
  Eigen::VectorXcd ev = (Eigen::MatrixXcd(W.cast<std::complex<double>>()) *
                         S.cast<std::complex<double>>()).eigenvalues();
  Eigen::VectorXd nu(n);
  std::vector<double> mags;
  for (Eigen::Index i = 0; i < ev.size(); ++i) mags.push_back(std::abs(ev(i)));
  std::sort(mags.begin(), mags.end());
  for (Eigen::Index m = 0; m < n; ++m) nu(m) = mags[2 * m];
  return nu;
}

}  // namespace qbn::linalg
