/*
 * Copyright 2026 The repmeter Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Closed-form mutual information for jointly Gaussian variables. These are
// the reference values the neural estimator is checked against.

#ifndef REPMETER_GAUSSIAN_HPP_
#define REPMETER_GAUSSIAN_HPP_

#include <cstdint>
#include <limits>

#include "repmeter/common.hpp"
#include "repmeter/random.hpp"

namespace repmeter {

inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

/// ln det of a symmetric positive-definite matrix, -inf when the Cholesky
/// factorization fails.
inline double log_det_spd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) return kNegInf;
  const Vector diag = llt.matrixLLT().diagonal();
  if ((diag.array() <= 0.0).any()) return kNegInf;
  return 2.0 * diag.array().log().sum();
}

/// I(x; A x + sigma eps) for x ~ N(0, cov_in):  (1/2) ln det(I + A cov_in A^T / sigma^2).
inline double gaussian_mi_oracle(const Matrix& a, const Matrix& cov_in, double sigma_noise) {
  require_arg(sigma_noise > 0.0 && std::isfinite(sigma_noise), "noise sigma must be positive");
  require_arg(a.cols() == cov_in.rows() && cov_in.rows() == cov_in.cols(), "A and input covariance are incompatible");
  psd_factor(cov_in, "input covariance");  // throws on non-PSD
  const Index d = a.rows();
  const Matrix m = Matrix::Identity(d, d) + a * cov_in * a.transpose() / (sigma_noise * sigma_noise);
  return 0.5 * log_det_spd(m);
}

/// MI of a bivariate Gaussian with correlation rho: -(1/2) ln(1 - rho^2).
inline double gaussian_mi_correlation(double rho) {
  require_arg(rho > -1.0 && rho < 1.0, "correlation must lie in (-1, 1)");
  return -0.5 * std::log1p(-rho * rho);
}

/// I(x; y) from a joint covariance whose first `x_dim` coordinates are x.
/// Returns +inf when the joint covariance is singular but the marginals are not.
inline double gaussian_mi_joint(const Matrix& joint_cov, Index x_dim) {
  require_arg(joint_cov.rows() == joint_cov.cols(), "joint covariance must be square");
  require_arg(x_dim >= 1 && x_dim < joint_cov.rows(), "split index out of range");
  const Index y_dim = joint_cov.rows() - x_dim;
  const double lx = log_det_spd(joint_cov.topLeftCorner(x_dim, x_dim));
  const double ly = log_det_spd(joint_cov.bottomRightCorner(y_dim, y_dim));
  require_arg(std::isfinite(lx) && std::isfinite(ly), "marginal covariances must be positive definite");
  const double lj = log_det_spd(joint_cov);
  if (!std::isfinite(lj)) return kPosInf;
  return 0.5 * (lx + ly - lj);
}

/// Linear-Gaussian Markov chain z0 -> x -> z:
///   z0 ~ N(0, I),  x = P z0 + obs_noise eps_x,  z = Q x + enc_noise eps_z.
struct GaussianChain {
  Matrix observation;  // P, [x_dim x d0]
  double obs_noise = 1.0;
  Matrix encoder;      // Q, [d_z x x_dim]
  double enc_noise = 1.0;

  Index state_dim() const { return observation.cols(); }
  Index obs_dim() const { return observation.rows(); }
  Index latent_dim() const { return encoder.rows(); }

  Matrix obs_cov() const {
    return observation * observation.transpose() +
           obs_noise * obs_noise * Matrix::Identity(obs_dim(), obs_dim());
  }

  /// Closed-form I(z; x); +inf for a noiseless encoder.
  double mi_latent_obs() const {
    if (enc_noise == 0.0) return kPosInf;
    return gaussian_mi_oracle(encoder, obs_cov(), enc_noise);
  }

  /// Closed-form I(z; z0).
  double mi_latent_state() const {
    const Index dz = latent_dim();
    const Matrix cov_z = encoder * obs_cov() * encoder.transpose() +
                         enc_noise * enc_noise * Matrix::Identity(dz, dz);
    const Matrix cov_z_given_state = obs_noise * obs_noise * encoder * encoder.transpose() +
                                     enc_noise * enc_noise * Matrix::Identity(dz, dz);
    const double given = log_det_spd(cov_z_given_state);
    if (!std::isfinite(given)) return kPosInf;
    return 0.5 * (log_det_spd(cov_z) - given);
  }

  struct Draw {
    Matrix state, obs, latent;  // rows are samples
  };

  Draw sample(Index count, std::uint64_t seed) const {
    CounterRng rng(seed);
    Draw d;
    d.state = rng.normal_matrix(count, state_dim());
    d.obs = d.state * observation.transpose() + obs_noise * rng.normal_matrix(count, obs_dim());
    d.latent = d.obs * encoder.transpose() + enc_noise * rng.normal_matrix(count, latent_dim());
    return d;
  }
};

}  // namespace repmeter

#endif  // REPMETER_GAUSSIAN_HPP_
