#pragma once

#include "pdctl/lds.hpp"

namespace pdctl {

/// V(x) = x'Px for the policy u = -Kx under discount gamma.
struct QuadraticValue {
  Matrix P;
  Matrix K;
  double gamma = 1.0;
};

/// Discounted LQR by value iteration:
///   P = Q + g A'PA - g^2 A'PB (R + g B'PB)^{-1} B'PA,  K = g (R + g B'PB)^{-1} B'PA.
/// Stops when successive iterates differ by < 1e-12 (max norm).
QuadraticValue solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q,
                          const Matrix& R, double gamma = 1.0,
                          int max_iterations = 100000);

/// Exact value of a fixed linear policy: P = Q + K'RK + g (A-BK)' P (A-BK).
QuadraticValue evaluate_policy(const Matrix& A, const Matrix& B, const Matrix& K,
                               const Matrix& Q, const Matrix& R,
                               double gamma = 1.0);

/// Max-norm residual of the policy-evaluation fixed point of (P, K).
double bellman_residual(const QuadraticValue& v, const Matrix& A, const Matrix& B,
                        const Matrix& Q, const Matrix& R);

double scalar_value(const QuadraticValue& v, const Vector& x);

/// c(x,u) + g (Ax+Bu)'P(Ax+Bu). The additive noise-trace constant is omitted;
/// it cancels wherever a value and a Q-value are differenced.
double scalar_q(const QuadraticValue& v, const LinearSystem& system,
                const CostFunction& cost, const Vector& x, const Vector& u);

/// Value of the linear vector cost c(x) = Lx: V(x) = T x with T = L (I - g A_pi)^{-1}.
struct VectorValueTransform {
  Matrix T;
  Matrix L;
  Matrix A_pi;
  double gamma = 1.0;
};

VectorValueTransform vector_value_transform(const Matrix& A, const Matrix& B,
                                            const Matrix& K, const Matrix& L,
                                            double gamma);

Vector vector_value(const VectorValueTransform& tv, const Vector& x);
Vector vector_q(const VectorValueTransform& tv, const LinearSystem& system,
                const Vector& x, const Vector& u);

}  // namespace pdctl
