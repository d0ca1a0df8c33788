#include "pdctl/value.hpp"

#include <cmath>

namespace pdctl {
namespace {

void check_cost_matrices(const Matrix& A, const Matrix& B, const Matrix& Q,
                         const Matrix& R, double gamma) {
  detail::require(A.rows() == A.cols(), "A must be square");
  detail::require(B.rows() == A.rows(), "B must have d_x rows");
  detail::require(Q.rows() == A.rows() && Q.cols() == A.cols(),
                  "Q must be d_x x d_x");
  detail::require(R.rows() == B.cols() && R.cols() == B.cols(),
                  "R must be d_u x d_u");
  detail::require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0, 1]");
  Eigen::LLT<Matrix> llt(0.5 * (R + R.transpose()));
  detail::require(llt.info() == Eigen::Success, "R must be positive definite");
}

}  // namespace

QuadraticValue solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q,
                          const Matrix& R, double gamma, int max_iterations) {
  check_cost_matrices(A, B, Q, R, gamma);
  Matrix P = Q;
  for (int it = 0; it < max_iterations; ++it) {
    const Matrix S = R + gamma * B.transpose() * P * B;
    const Matrix BtPA = B.transpose() * P * A;
    Matrix next = Q + gamma * A.transpose() * P * A -
                  gamma * gamma * BtPA.transpose() * S.ldlt().solve(BtPA);
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) break;
    const double diff = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (diff < 1e-12) {
      const Matrix S_final = R + gamma * B.transpose() * P * B;
      Matrix K = gamma * S_final.ldlt().solve(B.transpose() * P * A);
      return QuadraticValue{std::move(P), std::move(K), gamma};
    }
  }
  throw NoSolution("solve_dare: value iteration did not converge");
}

QuadraticValue evaluate_policy(const Matrix& A, const Matrix& B, const Matrix& K,
                               const Matrix& Q, const Matrix& R, double gamma) {
  check_cost_matrices(A, B, Q, R, gamma);
  detail::require(K.rows() == B.cols() && K.cols() == A.rows(),
                  "K must be d_u x d_x");
  const Eigen::Index n = A.rows();
  const Matrix Ak = A - B * K;
  const Matrix C = Q + K.transpose() * R * K;
  // vec(P) = (I - g Ak' (x) Ak')^{-1} vec(C), column-major vec.
  Matrix kron(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      kron.block(i * n, j * n, n, n) = Ak(j, i) * Ak.transpose();
    }
  }
  const Matrix lhs = Matrix::Identity(n * n, n * n) - gamma * kron;
  Eigen::FullPivLU<Matrix> lu(lhs);
  if (!lu.isInvertible()) {
    throw NoSolution("evaluate_policy: closed loop is not discounted-stable");
  }
  const Vector vecP = lu.solve(Eigen::Map<const Vector>(C.data(), C.size()));
  Matrix P = Eigen::Map<const Matrix>(vecP.data(), n, n);
  P = 0.5 * (P + P.transpose());
  return QuadraticValue{std::move(P), K, gamma};
}

double bellman_residual(const QuadraticValue& v, const Matrix& A, const Matrix& B,
                        const Matrix& Q, const Matrix& R) {
  const Matrix Ak = A - B * v.K;
  const Matrix rhs =
      Q + v.K.transpose() * R * v.K + v.gamma * Ak.transpose() * v.P * Ak;
  return (v.P - rhs).cwiseAbs().maxCoeff();
}

double scalar_value(const QuadraticValue& v, const Vector& x) {
  detail::require_size(x.size(), v.P.rows(), "scalar_value: x");
  return x.dot(v.P * x);
}

double scalar_q(const QuadraticValue& v, const LinearSystem& system,
                const CostFunction& cost, const Vector& x, const Vector& u) {
  detail::require_size(x.size(), v.P.rows(), "scalar_q: x");
  const Vector next = system.A() * x + system.B() * u;
  return cost(x, u) + v.gamma * next.dot(v.P * next);
}

VectorValueTransform vector_value_transform(const Matrix& A, const Matrix& B,
                                            const Matrix& K, const Matrix& L,
                                            double gamma) {
  detail::require(A.rows() == A.cols() && B.rows() == A.rows(),
                  "vector_value_transform: inconsistent A, B");
  detail::require(K.rows() == B.cols() && K.cols() == A.rows(),
                  "vector_value_transform: K must be d_u x d_x");
  detail::require(L.cols() == A.rows(), "vector_value_transform: L must have d_x columns");
  detail::require(gamma >= 0.0 && gamma <= 1.0,
                  "vector_value_transform: gamma must lie in [0, 1]");
  Matrix A_pi = A - B * K;
  if (gamma > 0.0 && !(gamma * spectral_radius(A_pi) < 1.0)) {
    throw NoSolution("vector_value_transform: discounted closed loop is not stable");
  }
  const Matrix resolvent = Matrix::Identity(A.rows(), A.cols()) - gamma * A_pi;
  Eigen::FullPivLU<Matrix> lu(resolvent.transpose());
  if (!lu.isInvertible()) {
    throw NoSolution("vector_value_transform: I - gamma A_pi is singular");
  }
  Matrix T = lu.solve(L.transpose()).transpose();
  return VectorValueTransform{std::move(T), L, std::move(A_pi), gamma};
}

Vector vector_value(const VectorValueTransform& tv, const Vector& x) {
  detail::require_size(x.size(), tv.T.cols(), "vector_value: x");
  return tv.T * x;
}

Vector vector_q(const VectorValueTransform& tv, const LinearSystem& system,
                const Vector& x, const Vector& u) {
  detail::require_size(x.size(), tv.T.cols(), "vector_q: x");
  detail::require_size(u.size(), system.control_dim(), "vector_q: u");
  return tv.L * x + tv.gamma * (tv.T * (system.A() * x + system.B() * u));
}

}  // namespace pdctl
