#include "pdctl/transfer.hpp"

namespace pdctl {
namespace {

std::vector<Matrix> powers(const Matrix& A, int n) {
  std::vector<Matrix> out;
  out.reserve(static_cast<std::size_t>(n + 1));
  out.push_back(Matrix::Identity(A.rows(), A.cols()));
  for (int i = 1; i <= n; ++i) out.push_back(A * out.back());
  return out;
}

}  // namespace

TransferMatrices transfer_matrices(const Matrix& A_cl, const Matrix& B,
                                   std::span<const DacParams> params_by_lag) {
  detail::require(!params_by_lag.empty(), "transfer_matrices: no parameters");
  const int h = params_by_lag[0].history();
  detail::require(params_by_lag.size() == static_cast<std::size_t>(h + 1),
                  "transfer_matrices: need parameters for lags 0..h");
  detail::require(B.rows() == A_cl.rows(), "transfer_matrices: B must have d_x rows");
  const Eigen::Index dx = A_cl.rows();
  const Eigen::Index dw = params_by_lag[0].signal_dim();
  detail::require(dw == dx, "transfer_matrices: DAC must act on true disturbances");

  const auto pw = powers(A_cl, h + 1);
  TransferMatrices tm;
  tm.h = h;
  tm.carry = pw[static_cast<std::size_t>(h + 1)];
  for (int k = 0; k <= h; ++k) tm.phi.push_back(pw[static_cast<std::size_t>(k)] * B);
  for (int i = 0; i <= 2 * h; ++i) {
    Matrix psi = i <= h ? pw[static_cast<std::size_t>(i)] : Matrix::Zero(dx, dx);
    for (int k = 0; k <= h; ++k) {
      const int m = i - k;
      if (m < 1 || m > h) continue;
      psi.noalias() += tm.phi[static_cast<std::size_t>(k)] *
                       params_by_lag[static_cast<std::size_t>(k)][m];
    }
    tm.psi.push_back(std::move(psi));
  }
  return tm;
}

TransferMatrices transfer_matrices(const Matrix& A_cl, const Matrix& B,
                                   const DacParams& M) {
  std::vector<DacParams> by_lag(static_cast<std::size_t>(M.history() + 1), M);
  return transfer_matrices(A_cl, B, by_lag);
}

Vector unroll_state(const TransferMatrices& tm, const Vector& x_past,
                    std::span<const Vector> w_lags0,
                    std::span<const Vector> noise_lags0) {
  detail::require(noise_lags0.size() == tm.phi.size(), "unroll_state: need h+1 noise lags");
  Vector x = tm.carry * x_past + idealized_state(tm, w_lags0);
  for (std::size_t k = 0; k < tm.phi.size(); ++k) x.noalias() += tm.phi[k] * noise_lags0[k];
  return x;
}

Vector idealized_state(const TransferMatrices& tm, std::span<const Vector> w_lags0) {
  detail::require(w_lags0.size() == tm.psi.size(), "idealized_state: need 2h+1 lags");
  Vector y = Vector::Zero(tm.psi[0].rows());
  for (std::size_t i = 0; i < tm.psi.size(); ++i) y.noalias() += tm.psi[i] * w_lags0[i];
  return y;
}

IdealizedCost idealized_cost(const Matrix& A_cl, const Matrix& B, const Matrix& K,
                             const CostFunction& cost, const DacParams& M,
                             std::span<const Vector> w_lags0) {
  if (!cost.gradient) {
    throw UnsupportedCost("idealized_cost: cost function has no gradient oracle");
  }
  const int h = M.history();
  detail::require(w_lags0.size() == static_cast<std::size_t>(2 * h + 1),
                  "idealized_cost: need 2h+1 disturbance lags");
  const auto tm = transfer_matrices(A_cl, B, M);
  const Vector y = idealized_state(tm, w_lags0);
  // control at t+1 uses w_{t+1-j} = w_lags0[j-1]
  Vector v = dac_control(M, w_lags0);
  const Vector u = -K * y + v;
  const auto [gx, gu] = cost.gradient(y, u);
  const Vector gy = gx - K.transpose() * gu;

  IdealizedCost out{cost(y, u), DacParams::zero(h, M.control_dim(), M.signal_dim())};
  for (int m = 1; m <= h; ++m) {
    Matrix& G = out.gradient[m];
    G.noalias() += gu * w_lags0[static_cast<std::size_t>(m - 1)].transpose();
    for (int k = 0; k <= h; ++k) {
      const Vector back = tm.phi[static_cast<std::size_t>(k)].transpose() * gy;
      G.noalias() += back * w_lags0[static_cast<std::size_t>(k + m)].transpose();
    }
  }
  return out;
}

double memory_cost(const Matrix& A_cl, const Matrix& B, const Matrix& K,
                   const CostFunction& cost, std::span<const Vector> controls,
                   std::span<const Vector> w_lags) {
  const std::size_t h = controls.size();
  detail::require(h >= 1, "memory_cost: need at least one control");
  detail::require(w_lags.size() >= h, "memory_cost: need h disturbance lags");
  Vector y = Vector::Zero(A_cl.rows());
  Matrix power = Matrix::Identity(A_cl.rows(), A_cl.cols());
  for (std::size_t k = 0; k < h; ++k) {
    y.noalias() += power * w_lags[k];
    if (k + 1 < h) y.noalias() += power * (B * controls[k + 1]);
    power = A_cl * power;
  }
  const Vector u = -K * y + controls[0];
  return cost(y, u);
}

}  // namespace pdctl
