#pragma once

#include <span>
#include <vector>

#include "pdctl/dac.hpp"
#include "pdctl/lds.hpp"

namespace pdctl {

/// Disturbance-to-state (psi_0..psi_2h) and noise-to-state (phi_0..phi_h) maps
/// of the closed loop A_cl = A - B K under DAC, plus the carry A_cl^{h+1}:
///   x_{t+1} = A_cl^{h+1} x_{t-h} + sum_i psi_i w_{t-i} + sum_k phi_k e_{t-k},
/// where e_s is the exploration actually added to the control at step s.
struct TransferMatrices {
  std::vector<Matrix> psi;
  std::vector<Matrix> phi;
  Matrix carry;
  int h = 0;
};

/// params_by_lag[k] is the DAC used at step t-k, k = 0..h.
TransferMatrices transfer_matrices(const Matrix& A_cl, const Matrix& B,
                                   std::span<const DacParams> params_by_lag);
/// Stationary policy; M = 0 gives psi_i = A_cl^i for i <= h.
TransferMatrices transfer_matrices(const Matrix& A_cl, const Matrix& B,
                                   const DacParams& M);

/// w_lags0[i] = w_{t-i} for i = 0..2h, noise_lags0[k] = e_{t-k} for k = 0..h.
Vector unroll_state(const TransferMatrices& tm, const Vector& x_past,
                    std::span<const Vector> w_lags0,
                    std::span<const Vector> noise_lags0);

/// y_{t+1}(M) = sum_{i=0}^{2h} psi_i(M) w_{t-i}.
Vector idealized_state(const TransferMatrices& tm, std::span<const Vector> w_lags0);

/// Stationary idealized cost c(y, -K y + sum_j M_j w_{t+1-j}) and its exact
/// gradient in M (both y and the control are affine in M).
struct IdealizedCost {
  double value = 0.0;
  DacParams gradient;
};

IdealizedCost idealized_cost(const Matrix& A_cl, const Matrix& B, const Matrix& K,
                             const CostFunction& cost, const DacParams& M,
                             std::span<const Vector> w_lags0);

/// Cost as a function of the last h played DAC controls (newest first,
/// v_t..v_{t-h+1}):  c(y, -K y + v_t) with
///   y = sum_{k=0}^{h-2} A_cl^k B v_{t-1-k} + sum_{k=0}^{h-1} A_cl^k w_{t-1-k}.
/// w_lags[k-1] = w_{t-k}. Bandit-GPC gradient estimates target this function.
double memory_cost(const Matrix& A_cl, const Matrix& B, const Matrix& K,
                   const CostFunction& cost, std::span<const Vector> controls,
                   std::span<const Vector> w_lags);

}  // namespace pdctl
