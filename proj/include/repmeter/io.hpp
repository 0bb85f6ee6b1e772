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

// File formats.
//
// Trajectory and latent files share one layout: line 1 is a single-line JSON
// object with metadata, line 2 is the CSV column header, and every following
// line is one time step. Trajectory columns are, in order,
//
//   t, q0..q{k-1}, qdot0..qdot{k-1}, tau0..tau{m-1}
//
// where the torque fields of the final row are empty (N+1 states, N torques).
// Latent columns are  t, z0..z{d-1}.  Numbers are written in shortest
// round-trip form, so files are byte-identical across reruns.

#ifndef REPMETER_IO_HPP_
#define REPMETER_IO_HPP_

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "repmeter/common.hpp"
#include "repmeter/encoders.hpp"
#include "repmeter/lagsim.hpp"

namespace repmeter::io {

using json = nlohmann::json;

inline constexpr int kTrajectorySchema = 1;
inline constexpr int kLatentSchema = 1;

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
    throw Error(ErrorKind::kDataCorruption, "line " + std::to_string(line) + ": cannot parse number '" + s + "'");
  return v;
}

inline json read_header(std::istream& in, const std::string& format) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kDataCorruption, "line 1: missing metadata header");
  json meta;
  try {
    meta = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kDataCorruption, std::string("line 1: metadata is not valid JSON: ") + e.what());
  }
  if (!meta.is_object() || meta.value("format", "") != format)
    throw Error(ErrorKind::kDataCorruption, "line 1: expected a '" + format + "' header");
  return meta;
}

template <typename T>
T meta_field(const json& meta, const char* key) {
  if (!meta.contains(key)) throw Error(ErrorKind::kDataCorruption, std::string("line 1: metadata lacks '") + key + "'");
  try {
    return meta.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::kDataCorruption, std::string("line 1: metadata field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

inline std::vector<std::string> trajectory_columns(Index k, Index m) {
  std::vector<std::string> cols{"t"};
  for (Index i = 0; i < k; ++i) cols.push_back("q" + std::to_string(i));
  for (Index i = 0; i < k; ++i) cols.push_back("qdot" + std::to_string(i));
  for (Index i = 0; i < m; ++i) cols.push_back("tau" + std::to_string(i));
  return cols;
}

inline std::vector<std::string> latent_columns(Index d) {
  std::vector<std::string> cols{"t"};
  for (Index i = 0; i < d; ++i) cols.push_back("z" + std::to_string(i));
  return cols;
}

inline void write_columns(std::ostream& out, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

inline void write_trajectory(std::ostream& out, const lagsim::Trajectory& traj) {
  require_arg(traj.valid(), "trajectory must have one more state than torques");
  const Index k = traj.states.front().q.size();
  const Index m = traj.torques.empty() ? 0 : traj.torques.front().size();
  json meta = {{"format", "repmeter.trajectory"},
               {"schema_version", kTrajectorySchema},
               {"system", traj.system},
               {"policy", traj.policy},
               {"seed", traj.seed},
               {"sample_time", traj.sample_time},
               {"dof", k},
               {"inputs", m},
               {"rows", traj.states.size()}};
  out << meta.dump() << '\n';
  write_columns(out, trajectory_columns(k, m));
  for (std::size_t n = 0; n < traj.states.size(); ++n) {
    out << format_double(static_cast<double>(n) * traj.sample_time);
    for (Index i = 0; i < k; ++i) out << ',' << format_double(traj.states[n].q(i));
    for (Index i = 0; i < k; ++i) out << ',' << format_double(traj.states[n].qd(i));
    for (Index i = 0; i < m; ++i) {
      out << ',';
      if (n < traj.torques.size()) out << format_double(traj.torques[n](i));
    }
    out << '\n';
  }
}

inline lagsim::Trajectory read_trajectory(std::istream& in) {
  const json meta = detail::read_header(in, "repmeter.trajectory");
  if (detail::meta_field<int>(meta, "schema_version") != kTrajectorySchema)
    throw Error(ErrorKind::kSchemaMismatch, "unsupported trajectory schema version");
  const auto k = detail::meta_field<Index>(meta, "dof");
  const auto m = detail::meta_field<Index>(meta, "inputs");
  const auto rows = detail::meta_field<std::size_t>(meta, "rows");
  lagsim::Trajectory traj;
  traj.system = detail::meta_field<std::string>(meta, "system");
  traj.policy = meta.value("policy", "");
  traj.seed = detail::meta_field<std::uint64_t>(meta, "seed");
  traj.sample_time = detail::meta_field<double>(meta, "sample_time");

  std::string line;
  if (!std::getline(in, line) || detail::split_csv(line) != trajectory_columns(k, m))
    throw Error(ErrorKind::kDataCorruption, "line 2: unexpected column header");
  const std::size_t width = static_cast<std::size_t>(1 + 2 * k + m);
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv(line);
    if (f.size() != width)
      throw Error(ErrorKind::kDataCorruption, "line " + std::to_string(line_no) + ": expected " +
                                                  std::to_string(width) + " fields, found " + std::to_string(f.size()));
    lagsim::State s{Vector(k), Vector(k)};
    detail::parse_double(f[0], line_no);
    for (Index i = 0; i < k; ++i) s.q(i) = detail::parse_double(f[static_cast<std::size_t>(1 + i)], line_no);
    for (Index i = 0; i < k; ++i) s.qd(i) = detail::parse_double(f[static_cast<std::size_t>(1 + k + i)], line_no);
    const bool torque_empty = m > 0 && f[static_cast<std::size_t>(1 + 2 * k)].empty();
    if (!torque_empty && m > 0) {
      if (!traj.torques.empty() && traj.torques.size() < traj.states.size())
        throw Error(ErrorKind::kDataCorruption, "line " + std::to_string(line_no) + ": torques present after final row");
      Vector tau(m);
      for (Index i = 0; i < m; ++i) tau(i) = detail::parse_double(f[static_cast<std::size_t>(1 + 2 * k + i)], line_no);
      traj.torques.push_back(std::move(tau));
    }
    traj.states.push_back(std::move(s));
  }
  if (traj.states.size() != rows)
    throw Error(ErrorKind::kDataCorruption, "line " + std::to_string(line_no) + ": header promises " +
                                                std::to_string(rows) + " rows, found " +
                                                std::to_string(traj.states.size()));
  if (!traj.valid())
    throw Error(ErrorKind::kDataCorruption, "torque column must be filled on every row but the last");
  return traj;
}

inline void write_latent(std::ostream& out, const encoders::LatentTrajectory& lt) {
  json meta = {{"format", "repmeter.latent"},
               {"schema_version", kLatentSchema},
               {"encoder", lt.encoder_id},
               {"source", lt.source_id},
               {"sample_time", lt.sample_time},
               {"latent_dim", lt.dim()},
               {"rows", lt.size()}};
  out << meta.dump() << '\n';
  write_columns(out, latent_columns(lt.dim()));
  for (Index n = 0; n < lt.size(); ++n) {
    out << format_double(static_cast<double>(n) * lt.sample_time);
    for (Index i = 0; i < lt.dim(); ++i) out << ',' << format_double(lt.latents(n, i));
    out << '\n';
  }
}

inline encoders::LatentTrajectory read_latent(std::istream& in) {
  const json meta = detail::read_header(in, "repmeter.latent");
  if (detail::meta_field<int>(meta, "schema_version") != kLatentSchema)
    throw Error(ErrorKind::kSchemaMismatch, "unsupported latent schema version");
  encoders::LatentTrajectory lt;
  lt.encoder_id = detail::meta_field<std::string>(meta, "encoder");
  lt.source_id = detail::meta_field<std::string>(meta, "source");
  lt.sample_time = detail::meta_field<double>(meta, "sample_time");
  const auto d = detail::meta_field<Index>(meta, "latent_dim");
  const auto rows = detail::meta_field<Index>(meta, "rows");
  std::string line;
  if (!std::getline(in, line) || detail::split_csv(line) != latent_columns(d))
    throw Error(ErrorKind::kDataCorruption, "line 2: unexpected column header");
  lt.latents.resize(rows, d);
  Index r = 0;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv(line);
    if (static_cast<Index>(f.size()) != d + 1)
      throw Error(ErrorKind::kDataCorruption, "line " + std::to_string(line_no) + ": expected " +
                                                  std::to_string(d + 1) + " fields, found " + std::to_string(f.size()));
    if (r >= rows) throw Error(ErrorKind::kDataCorruption, "line " + std::to_string(line_no) + ": more rows than header promises");
    detail::parse_double(f[0], line_no);
    for (Index i = 0; i < d; ++i) lt.latents(r, i) = detail::parse_double(f[static_cast<std::size_t>(1 + i)], line_no);
    ++r;
  }
  if (r != rows)
    throw Error(ErrorKind::kDataCorruption, "line " + std::to_string(line_no) + ": header promises " +
                                                std::to_string(rows) + " rows, found " + std::to_string(r));
  return lt;
}

/// Writes via a temporary sibling file and rename, so readers never observe
/// a partially written file.
template <typename Writer>
void write_atomically(const std::filesystem::path& path, Writer&& writer) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kInvalidArgument, "cannot open " + tmp.string() + " for writing");
    writer(out);
    out.flush();
    if (!out) throw Error(ErrorKind::kInvalidArgument, "failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  write_atomically(path, [&](std::ostream& out) { out << text; });
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInvalidArgument, "cannot open input file " + path.string());
  return in;
}

inline lagsim::Trajectory load_trajectory(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return read_trajectory(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

inline encoders::LatentTrajectory load_latent(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return read_latent(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

// JSON helpers for configuration files ---------------------------------------

/// Error naming the offending field, e.g. "system.sample_time: must be positive".
[[noreturn]] inline void field_error(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::kInvalidArgument, field + ": " + what);
}

inline double get_number(const json& j, const std::string& key, const std::string& path, std::optional<double> fallback = {}) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    field_error(path + "." + key, "missing");
  }
  if (!j.at(key).is_number()) field_error(path + "." + key, "must be a number");
  return j.at(key).get<double>();
}

inline Vector vector_from_json(const json& j, const std::string& field) {
  if (!j.is_array()) field_error(field, "must be an array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) field_error(field, "must be an array of numbers");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

inline Matrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) field_error(field, "must be a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) field_error(field, "rows must be non-empty arrays");
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) field_error(field, "rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) field_error(field, "entries must be numbers");
      m(static_cast<Index>(r), static_cast<Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

inline json to_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline json to_json(const Matrix& m) {
  json a = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

/// System description, e.g.
///   {"type": "double_integrator", "dof": 2, "sample_time": 0.05, "q0_std": 1.0}
/// Types: double_integrator, pendulum (mass, length, gravity), two_link_arm
/// (m1, m2, l1, l2, lc1, lc2, i1, i2, gravity). Initial condition from
/// q0_mean (default 0) and either q0_cov or q0_std (default 0).
inline lagsim::SystemSpec system_from_json(const json& j, const std::string& path = "system") {
  if (!j.is_object()) field_error(path, "must be an object");
  if (!j.contains("type") || !j["type"].is_string()) field_error(path + ".type", "missing or not a string");
  const std::string type = j["type"].get<std::string>();
  const double ts = get_number(j, "sample_time", path, 0.05);
  if (!(ts > 0.0)) field_error(path + ".sample_time", "must be positive");
  lagsim::SystemSpec spec;
  if (type == "double_integrator") {
    const double dof = get_number(j, "dof", path, 1.0);
    if (dof < 1 || dof != std::floor(dof)) field_error(path + ".dof", "must be a positive integer");
    spec = lagsim::double_integrator(static_cast<Index>(dof), ts);
  } else if (type == "pendulum") {
    lagsim::PendulumParams p;
    p.mass = get_number(j, "mass", path, p.mass);
    p.length = get_number(j, "length", path, p.length);
    p.gravity = get_number(j, "gravity", path, p.gravity);
    if (!(p.mass > 0.0)) field_error(path + ".mass", "must be positive");
    if (!(p.length > 0.0)) field_error(path + ".length", "must be positive");
    spec = lagsim::pendulum(p, ts);
  } else if (type == "two_link_arm") {
    lagsim::TwoLinkParams p;
    p.m1 = get_number(j, "m1", path, p.m1);
    p.m2 = get_number(j, "m2", path, p.m2);
    p.l1 = get_number(j, "l1", path, p.l1);
    p.l2 = get_number(j, "l2", path, p.l2);
    p.lc1 = get_number(j, "lc1", path, p.lc1);
    p.lc2 = get_number(j, "lc2", path, p.lc2);
    p.i1 = get_number(j, "i1", path, p.i1);
    p.i2 = get_number(j, "i2", path, p.i2);
    p.gravity = get_number(j, "gravity", path, p.gravity);
    spec = lagsim::two_link_arm(p, ts);
  } else {
    field_error(path + ".type", "unknown system type '" + type + "'");
  }
  const Index k = spec.dof;
  if (j.contains("q0_mean")) {
    spec.q0_mean = vector_from_json(j["q0_mean"], path + ".q0_mean");
    if (spec.q0_mean.size() != k) field_error(path + ".q0_mean", "must have " + std::to_string(k) + " entries");
  }
  if (j.contains("q0_cov")) {
    spec.q0_cov = matrix_from_json(j["q0_cov"], path + ".q0_cov");
    if (spec.q0_cov.rows() != k || spec.q0_cov.cols() != k)
      field_error(path + ".q0_cov", "must be " + std::to_string(k) + "x" + std::to_string(k));
  } else if (j.contains("q0_std")) {
    const double sd = get_number(j, "q0_std", path);
    if (!(sd >= 0.0)) field_error(path + ".q0_std", "must be non-negative");
    spec.q0_cov = sd * sd * Matrix::Identity(k, k);
  }
  if (j.contains("compensate_bias")) {
    if (!j["compensate_bias"].is_boolean()) field_error(path + ".compensate_bias", "must be a boolean");
    spec.compensate_bias = j["compensate_bias"].get<bool>();
  }
  return spec;
}

/// Exploration policy, e.g. {"sigma": 6.0, "feedback_gain": [[...]]}.
/// Mean defaults to zero; covariance from "covariance" or "sigma" (default 1).
inline lagsim::ExplorationPolicy policy_from_json(const json& j, const lagsim::SystemSpec& spec,
                                                  const std::string& path = "policy") {
  if (!j.is_object()) field_error(path, "must be an object");
  const Index m = spec.inputs;
  Vector mean = Vector::Zero(m);
  if (j.contains("mean")) {
    mean = vector_from_json(j["mean"], path + ".mean");
    if (mean.size() != m) field_error(path + ".mean", "must have " + std::to_string(m) + " entries");
  }
  Matrix cov;
  if (j.contains("covariance")) {
    cov = matrix_from_json(j["covariance"], path + ".covariance");
    if (cov.rows() != m || cov.cols() != m) field_error(path + ".covariance", "has the wrong shape");
    try {
      psd_factor(cov);
    } catch (const Error&) {
      field_error(path + ".covariance", "must be symmetric positive semi-definite");
    }
  } else {
    const double sigma = get_number(j, "sigma", path, 1.0);
    if (!(sigma >= 0.0)) field_error(path + ".sigma", "must be non-negative");
    cov = sigma * sigma * Matrix::Identity(m, m);
  }
  auto policy = lagsim::ExplorationPolicy::constant(mean, cov, j.value("name", std::string("random")));
  if (j.contains("feedback_gain")) {
    Matrix k = matrix_from_json(j["feedback_gain"], path + ".feedback_gain");
    if (k.rows() != m || k.cols() != spec.state_dim()) field_error(path + ".feedback_gain", "must be [m x 2k]");
    policy.feedback_gain = k;
  }
  return policy;
}

/// One zoo entry: {"id": ..., "kind": ..., "params": {...}, "seed": ...}.
/// Missing matrices default to the identity of the true-state dimension.
inline encoders::EncoderSpec encoder_from_json(const json& j, Index input_dim, const std::string& path) {
  using namespace encoders;
  if (!j.is_object()) field_error(path, "must be an object");
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty())
    field_error(path + ".id", "missing or not a non-empty string");
  if (!j.contains("kind") || !j["kind"].is_string()) field_error(path + ".kind", "missing or not a string");
  const std::string id = j["id"];
  const json params = j.value("params", json::object());
  const std::string ppath = path + ".params";
  if (!params.is_object()) field_error(ppath, "must be an object");
  std::uint64_t seed = 0;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) field_error(path + ".seed", "must be a non-negative integer");
    seed = j["seed"].get<std::uint64_t>();
  }
  Kind kind{};
  try {
    kind = kind_from_string(j["kind"].get<std::string>());
  } catch (const Error&) {
    field_error(path + ".kind", "unknown encoder kind '" + j["kind"].get<std::string>() + "'");
  }
  auto offset_or_zero = [&](Index d) {
    if (!params.contains("offset")) return Vector(Vector::Zero(d));
    Vector b = vector_from_json(params["offset"], ppath + ".offset");
    if (b.size() != d) field_error(ppath + ".offset", "has the wrong dimension");
    return b;
  };
  auto index_list = [&](const char* key, std::vector<Index> fallback) {
    if (!params.contains(key)) return fallback;
    std::vector<Index> out;
    if (!params[key].is_array()) field_error(ppath + "." + key, "must be an array of indices");
    for (const auto& v : params[key]) {
      if (!v.is_number_integer()) field_error(ppath + "." + key, "must be an array of indices");
      out.push_back(v.get<Index>());
    }
    return out;
  };
  try {
    EncoderSpec spec;
    switch (kind) {
      case Kind::kAffine:
      case Kind::kSmoothBijection: {
        Matrix a = params.contains("matrix") ? matrix_from_json(params["matrix"], ppath + ".matrix")
                                             : Matrix(Matrix::Identity(input_dim, input_dim));
        if (params.contains("gain")) a *= get_number(params, "gain", ppath);
        if (a.cols() != input_dim) field_error(ppath + ".matrix", "must have " + std::to_string(input_dim) + " columns");
        spec = kind == Kind::kAffine ? affine(id, a, offset_or_zero(a.rows())) : smooth_bijection(id, a, offset_or_zero(a.rows()));
        break;
      }
      case Kind::kScaledAffine:
        spec = scaled_affine(id, input_dim, get_number(params, "scale", ppath), offset_or_zero(input_dim));
        break;
      case Kind::kCollapsing:
        spec = collapsing(id, input_dim, index_list("drop", {}));
        break;
      case Kind::kFolding:
        spec = folding(id, input_dim, index_list("coordinates", {0}), get_number(params, "threshold", ppath, 0.0));
        break;
      case Kind::kAdditiveNoise: {
        json inner = params.value("inner", json{{"id", id + ".inner"}, {"kind", "affine"}});
        if (!inner.contains("id")) inner["id"] = id + ".inner";
        spec = additive_noise(id, encoder_from_json(inner, input_dim, ppath + ".inner"),
                              get_number(params, "sigma", ppath), seed);
        break;
      }
      case Kind::kRandomMlp: {
        std::vector<Index> hidden = index_list("hidden", {16});
        const double out = get_number(params, "output_dim", ppath, static_cast<double>(input_dim));
        spec = random_mlp(id, input_dim, hidden, static_cast<Index>(out), seed);
        break;
      }
    }
    spec.seed = seed;
    return spec;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kInvalidArgument && std::string(e.what()).find(path) == std::string::npos)
      field_error(path, e.what());
    throw;
  }
}

inline std::vector<encoders::EncoderSpec> zoo_from_json(const json& j, Index input_dim, const std::string& path = "encoders") {
  if (!j.is_array() || j.empty()) field_error(path, "must be a non-empty array of encoders");
  std::vector<encoders::EncoderSpec> zoo;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j.size(); ++i) {
    auto spec = encoder_from_json(j[i], input_dim, path + "[" + std::to_string(i) + "]");
    if (!ids.insert(spec.id).second) field_error(path + "[" + std::to_string(i) + "].id", "duplicate id '" + spec.id + "'");
    zoo.push_back(std::move(spec));
  }
  return zoo;
}

}  // namespace repmeter::io

#endif  // REPMETER_IO_HPP_
