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

// Synthetic encoding pipelines z = g(z0) with known Jacobians and known
// invertibility. They stand in for trained encoders when validating metrics.

#ifndef REPMETER_ENCODERS_HPP_
#define REPMETER_ENCODERS_HPP_

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "repmeter/common.hpp"
#include "repmeter/lagsim.hpp"
#include "repmeter/nn.hpp"
#include "repmeter/random.hpp"

namespace repmeter::encoders {

enum class Kind {
  kAffine,          // z = A z0 + b
  kScaledAffine,    // z = c z0 + b
  kSmoothBijection, // z = tanh(A z0 + b), A invertible
  kCollapsing,      // drops selected coordinates
  kFolding,         // z_i = t + |z0_i - t| on selected coordinates
  kAdditiveNoise,   // z = inner(z0) + sigma * eps
  kRandomMlp,       // seeded network
};

inline const char* to_string(Kind k) {
  switch (k) {
    case Kind::kAffine: return "affine";
    case Kind::kScaledAffine: return "scaled-affine";
    case Kind::kSmoothBijection: return "smooth-bijection";
    case Kind::kCollapsing: return "collapsing-projection";
    case Kind::kFolding: return "folding";
    case Kind::kAdditiveNoise: return "additive-noise";
    case Kind::kRandomMlp: return "random-mlp";
  }
  return "unknown";
}

inline Kind kind_from_string(const std::string& s) {
  for (Kind k : {Kind::kAffine, Kind::kScaledAffine, Kind::kSmoothBijection, Kind::kCollapsing, Kind::kFolding,
                 Kind::kAdditiveNoise, Kind::kRandomMlp}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown encoder kind '" + s + "'");
}

struct EncoderSpec {
  std::string id;
  Kind kind = Kind::kAffine;
  Index input_dim = 0;
  Index output_dim = 0;

  Matrix matrix;              // affine, smooth-bijection
  Vector offset;              // affine, scaled-affine, smooth-bijection
  double scale = 1.0;         // scaled-affine
  double log_abs_det = 0.0;   // recorded for affine kinds
  std::vector<Index> coords;  // collapsing: dropped; folding: folded
  double threshold = 0.0;     // folding
  double sigma = 0.0;         // additive-noise
  std::shared_ptr<const EncoderSpec> inner;  // additive-noise
  nn::Network network;        // random-mlp
  std::uint64_t seed = 0;     // noise stream / network init

  bool invertible = false;
  std::string label_provenance = "analytic";

  bool square() const { return input_dim == output_dim; }
};

// Constructors ---------------------------------------------------------------

inline EncoderSpec affine(std::string id, const Matrix& a, const Vector& b) {
  require_arg(a.rows() >= 1 && a.cols() >= 1, "affine matrix must be non-empty");
  require_arg(b.size() == a.rows(), "affine offset has wrong dimension");
  EncoderSpec e;
  e.id = std::move(id);
  e.kind = Kind::kAffine;
  e.input_dim = a.cols();
  e.output_dim = a.rows();
  e.matrix = a;
  e.offset = b;
  if (a.rows() == a.cols()) {
    Eigen::FullPivLU<Matrix> lu(a);
    e.invertible = lu.isInvertible();
    e.log_abs_det = e.invertible ? std::log(std::abs(lu.determinant())) : kNegInf;
  } else {
    e.invertible = false;
    e.log_abs_det = kNegInf;
  }
  return e;
}

inline EncoderSpec identity(std::string id, Index dim) {
  return affine(std::move(id), Matrix::Identity(dim, dim), Vector::Zero(dim));
}

inline EncoderSpec scaled_affine(std::string id, Index dim, double c, const Vector& b) {
  require_arg(dim >= 1, "dimension must be positive");
  require_arg(c != 0.0 && std::isfinite(c), "scale must be finite and non-zero");
  require_arg(b.size() == dim, "offset has wrong dimension");
  EncoderSpec e;
  e.id = std::move(id);
  e.kind = Kind::kScaledAffine;
  e.input_dim = e.output_dim = dim;
  e.scale = c;
  e.offset = b;
  e.matrix = c * Matrix::Identity(dim, dim);
  e.log_abs_det = static_cast<double>(dim) * std::log(std::abs(c));
  e.invertible = true;
  return e;
}

inline EncoderSpec smooth_bijection(std::string id, const Matrix& a, const Vector& b) {
  require_arg(a.rows() == a.cols() && a.rows() >= 1, "smooth bijection needs a square preimage matrix");
  require_arg(b.size() == a.rows(), "offset has wrong dimension");
  Eigen::FullPivLU<Matrix> lu(a);
  require_arg(lu.isInvertible(), "smooth bijection preimage matrix must be invertible");
  EncoderSpec e;
  e.id = std::move(id);
  e.kind = Kind::kSmoothBijection;
  e.input_dim = e.output_dim = a.rows();
  e.matrix = a;
  e.offset = b;
  e.log_abs_det = std::log(std::abs(lu.determinant()));
  e.invertible = true;
  return e;
}

inline EncoderSpec collapsing(std::string id, Index dim, std::vector<Index> dropped) {
  std::set<Index> unique(dropped.begin(), dropped.end());
  require_arg(!unique.empty(), "collapsing projection must drop at least one coordinate");
  require_arg(static_cast<Index>(unique.size()) < dim, "collapsing projection cannot drop every coordinate");
  for (Index c : unique) require_arg(c >= 0 && c < dim, "dropped coordinate out of range");
  EncoderSpec e;
  e.id = std::move(id);
  e.kind = Kind::kCollapsing;
  e.input_dim = dim;
  e.output_dim = dim - static_cast<Index>(unique.size());
  e.coords.assign(unique.begin(), unique.end());
  e.invertible = false;
  return e;
}

inline EncoderSpec folding(std::string id, Index dim, std::vector<Index> folded = {0}, double threshold = 0.0) {
  std::set<Index> unique(folded.begin(), folded.end());
  require_arg(!unique.empty(), "folding encoder needs at least one coordinate");
  for (Index c : unique) require_arg(c >= 0 && c < dim, "folded coordinate out of range");
  EncoderSpec e;
  e.id = std::move(id);
  e.kind = Kind::kFolding;
  e.input_dim = e.output_dim = dim;
  e.coords.assign(unique.begin(), unique.end());
  e.threshold = threshold;
  e.invertible = false;
  return e;
}

inline EncoderSpec additive_noise(std::string id, EncoderSpec inner, double sigma, std::uint64_t seed) {
  require_arg(sigma >= 0.0 && std::isfinite(sigma), "noise sigma must be finite and non-negative");
  EncoderSpec e;
  e.id = std::move(id);
  e.kind = Kind::kAdditiveNoise;
  e.input_dim = inner.input_dim;
  e.output_dim = inner.output_dim;
  e.sigma = sigma;
  e.seed = seed;
  e.invertible = inner.invertible && sigma == 0.0;
  e.log_abs_det = inner.log_abs_det;
  e.inner = std::make_shared<const EncoderSpec>(std::move(inner));
  return e;
}

inline EncoderSpec random_mlp(std::string id, Index input_dim, const std::vector<Index>& hidden, Index output_dim,
                              std::uint64_t seed) {
  std::vector<Index> sizes{input_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(output_dim);
  EncoderSpec e;
  e.id = std::move(id);
  e.kind = Kind::kRandomMlp;
  e.input_dim = input_dim;
  e.output_dim = output_dim;
  e.network = nn::init_network(sizes, seed);
  e.seed = seed;
  e.invertible = false;
  e.label_provenance = "unknown";
  return e;
}

// Evaluation -----------------------------------------------------------------

namespace detail {

inline Vector encode_clean(const EncoderSpec& spec, const Vector& x) {
  switch (spec.kind) {
    case Kind::kAffine:
      return spec.matrix * x + spec.offset;
    case Kind::kScaledAffine:
      return spec.scale * x + spec.offset;
    case Kind::kSmoothBijection:
      return (spec.matrix * x + spec.offset).array().tanh().matrix();
    case Kind::kCollapsing: {
      Vector z(spec.output_dim);
      Index out = 0;
      for (Index i = 0; i < spec.input_dim; ++i)
        if (!std::binary_search(spec.coords.begin(), spec.coords.end(), i)) z(out++) = x(i);
      return z;
    }
    case Kind::kFolding: {
      Vector z = x;
      for (Index c : spec.coords) z(c) = spec.threshold + std::abs(x(c) - spec.threshold);
      return z;
    }
    case Kind::kAdditiveNoise:
      return encode_clean(*spec.inner, x);
    case Kind::kRandomMlp:
      return nn::forward(spec.network, x.transpose()).row(0).transpose();
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown encoder kind");
}

}  // namespace detail

/// Encodes one state, drawing any noise from `rng`.
inline Vector encode(const EncoderSpec& spec, const Vector& z0, CounterRng& rng) {
  require_arg(z0.size() == spec.input_dim, "encoder '" + spec.id + "' expects input dimension " +
                                               std::to_string(spec.input_dim) + ", got " +
                                               std::to_string(z0.size()));
  Vector z = detail::encode_clean(spec, z0);
  if (spec.kind == Kind::kAdditiveNoise && spec.sigma > 0.0) z += spec.sigma * rng.normal_vector(z.size());
  return z;
}

/// The seed is consumed only by the noise wrapper.
inline Vector encode(const EncoderSpec& spec, const Vector& z0, std::uint64_t seed = 0) {
  CounterRng rng(seed);
  return encode(spec, z0, rng);
}

struct LatentTrajectory {
  Matrix latents;  // [N+1 x d_z]
  std::string source_id;
  std::string encoder_id;
  double sample_time = 0.0;

  Index size() const { return latents.rows(); }
  Index dim() const { return latents.cols(); }
};

inline LatentTrajectory encode_trajectory(const EncoderSpec& spec, const lagsim::Trajectory& traj,
                                          std::uint64_t seed, std::string source_id = {}) {
  require_arg(!traj.states.empty(), "cannot encode an empty trajectory");
  CounterRng rng(seed);
  LatentTrajectory out;
  out.latents.resize(static_cast<Index>(traj.size()), spec.output_dim);
  for (std::size_t n = 0; n < traj.size(); ++n)
    out.latents.row(static_cast<Index>(n)) = encode(spec, traj.states[n].stacked(), rng).transpose();
  out.source_id = std::move(source_id);
  out.encoder_id = spec.id;
  out.sample_time = traj.sample_time;
  return out;
}

/// Noise stream for one (encoder, trajectory) pair, keyed by the rollout seed
/// so the result does not depend on file order.
inline std::uint64_t encoding_seed(const EncoderSpec& spec, const lagsim::Trajectory& traj) {
  return derive_seed(spec.seed, traj.seed);
}

inline std::vector<LatentTrajectory> encode_all(const EncoderSpec& spec, const std::vector<lagsim::Trajectory>& trajs) {
  std::vector<LatentTrajectory> out;
  out.reserve(trajs.size());
  for (const auto& t : trajs) out.push_back(encode_trajectory(spec, t, encoding_seed(spec, t)));
  return out;
}

inline constexpr double kJacobianStep = 1e-6;

/// Central finite-difference Jacobian of the noiseless pipeline.
inline Matrix finite_difference_jacobian(const EncoderSpec& spec, const Vector& z0, double step = kJacobianStep) {
  Matrix j(spec.output_dim, spec.input_dim);
  Vector x = z0;
  for (Index c = 0; c < spec.input_dim; ++c) {
    const double orig = x(c);
    x(c) = orig + step;
    const Vector hi = detail::encode_clean(spec, x);
    x(c) = orig - step;
    const Vector lo = detail::encode_clean(spec, x);
    x(c) = orig;
    j.col(c) = (hi - lo) / (2.0 * step);
  }
  return j;
}

/// dg/dz0 at z0, [d_z x 2k]. Analytic for closed-form kinds.
inline Matrix jacobian(const EncoderSpec& spec, const Vector& z0) {
  require_arg(z0.size() == spec.input_dim, "jacobian input has wrong dimension");
  switch (spec.kind) {
    case Kind::kAffine:
    case Kind::kScaledAffine:
      return spec.matrix;
    case Kind::kSmoothBijection: {
      const Eigen::ArrayXd t = (spec.matrix * z0 + spec.offset).array().tanh();
      return (1.0 - t.square()).matrix().asDiagonal() * spec.matrix;
    }
    case Kind::kCollapsing: {
      Matrix j = Matrix::Zero(spec.output_dim, spec.input_dim);
      Index out = 0;
      for (Index i = 0; i < spec.input_dim; ++i)
        if (!std::binary_search(spec.coords.begin(), spec.coords.end(), i)) j(out++, i) = 1.0;
      return j;
    }
    case Kind::kFolding: {
      Matrix j = Matrix::Identity(spec.input_dim, spec.input_dim);
      for (Index c : spec.coords) {
        const double u = z0(c) - spec.threshold;
        if (u == 0.0)
          throw Error(ErrorKind::kNonDifferentiable,
                      "folding encoder '" + spec.id + "' evaluated on its fold at coordinate " + std::to_string(c));
        j(c, c) = u > 0.0 ? 1.0 : -1.0;
      }
      return j;
    }
    case Kind::kAdditiveNoise:
      return jacobian(*spec.inner, z0);
    case Kind::kRandomMlp:
      return finite_difference_jacobian(spec, z0);
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown encoder kind");
}

struct LogAbsDet {
  double value = 0.0;  // -inf when singular
  int sign = 1;        // sign of det J, 0 when singular
  bool singular = false;
};

/// ln|det J_g(z0)| from a fully pivoted LU factorization.
inline LogAbsDet log_abs_det_jacobian(const EncoderSpec& spec, const Vector& z0) {
  require_arg(spec.square(), "log|det J| needs a square encoder; '" + spec.id + "' maps " +
                                 std::to_string(spec.input_dim) + " -> " + std::to_string(spec.output_dim));
  const Matrix j = jacobian(spec, z0);
  Eigen::FullPivLU<Matrix> lu(j);
  LogAbsDet out;
  const auto& u = lu.matrixLU();
  double sum = 0.0;
  int sign = lu.permutationP().determinant() * lu.permutationQ().determinant();
  for (Index i = 0; i < u.rows(); ++i) {
    const double d = u(i, i);
    if (d == 0.0) {
      out.value = kNegInf;
      out.sign = 0;
      out.singular = true;
      return out;
    }
    if (d < 0.0) sign = -sign;
    sum += std::log(std::abs(d));
  }
  out.value = sum;
  out.sign = sign;
  return out;
}

/// Inverse of an encoder labelled invertible.
inline Vector invert(const EncoderSpec& spec, const Vector& z) {
  require_arg(spec.invertible, "encoder '" + spec.id + "' is not invertible");
  require_arg(z.size() == spec.output_dim, "inverse input has wrong dimension");
  switch (spec.kind) {
    case Kind::kAffine:
      return spec.matrix.fullPivLu().solve(z - spec.offset);
    case Kind::kScaledAffine:
      return (z - spec.offset) / spec.scale;
    case Kind::kSmoothBijection: {
      require_arg(z.cwiseAbs().maxCoeff() < 1.0, "smooth bijection inverse needs |z| < 1");
      const Vector pre = z.array().atanh().matrix();
      return spec.matrix.fullPivLu().solve(pre - spec.offset);
    }
    case Kind::kAdditiveNoise:
      return invert(*spec.inner, z);
    default:
      break;
  }
  throw Error(ErrorKind::kInvalidArgument, "no inverse for encoder kind " + std::string(to_string(spec.kind)));
}

}  // namespace repmeter::encoders

#endif  // REPMETER_ENCODERS_HPP_
