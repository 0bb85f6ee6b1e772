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

// Batch front-end: simulate, encode, evaluate, rank, report.
//
// Output layout under the output directory:
//
//   trajectories/seed<S>_rollout<RRR>.csv   + manifest.json
//   latents/<encoder>/<trajectory>.csv
//   reports/<encoder>.json                  + profile / histogram CSVs
//   ranking_<metric>.csv, ranking_<metric>.json
//   plots/*.svg

#ifndef REPMETER_CLI_HPP_
#define REPMETER_CLI_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "repmeter/common.hpp"
#include "repmeter/encoders.hpp"
#include "repmeter/io.hpp"
#include "repmeter/lagsim.hpp"
#include "repmeter/parallel.hpp"
#include "repmeter/random.hpp"
#include "repmeter/report.hpp"
#include "repmeter/svg.hpp"

extern char** environ;

namespace repmeter::cli {

namespace fs = std::filesystem;
using io::json;
using Env = std::map<std::string, std::string>;

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kCorruption = 3,
  kSchema = 4,
  kNumeric = 5,
};

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return kConfigError;
    case ErrorKind::kDataCorruption: return kCorruption;
    case ErrorKind::kSchemaMismatch: return kSchema;
    default: return kNumeric;
  }
}

/// REPMETER_* variables of the running process.
inline Env process_environment() {
  Env env;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq != std::string::npos && entry.rfind("REPMETER_", 0) == 0) env[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  return env;
}

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

/// JSON if it parses, a list for comma-separated values, otherwise a string.
inline json parse_env_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
  }
  if (text.find(',') != std::string::npos) {
    json list = json::array();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) list.push_back(parse_env_value(item));
    return list;
  }
  return text;
}

inline std::vector<std::uint64_t> parse_seed_list(const json& j, const std::string& field) {
  std::vector<std::uint64_t> seeds;
  if (j.is_number_unsigned()) return {j.get<std::uint64_t>()};
  if (!j.is_array()) io::field_error(field, "must be a list of non-negative integers");
  for (const auto& v : j) {
    if (!v.is_number_unsigned()) io::field_error(field, "must be a list of non-negative integers");
    seeds.push_back(v.get<std::uint64_t>());
  }
  if (seeds.empty()) io::field_error(field, "must not be empty");
  return seeds;
}

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

inline bool safe_name(const std::string& s) {
  if (s.empty() || s == "." || s == "..") return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isalnum(c) || c == '-' || c == '_' || c == '.'; });
}

}  // namespace detail

/// Applies REPMETER_<SECTION>_<KEY> overrides. A name whose whole remainder is
/// an existing top-level key (REPMETER_SEEDS) sets that key; otherwise the
/// remainder splits at its first underscore into section and key, so
/// REPMETER_MINE_STEPS sets config["mine"]["steps"].
inline json apply_env_overrides(json cfg, const Env& env) {
  for (const auto& [name, text] : env) {
    if (name.rfind("REPMETER_", 0) != 0) continue;
    const std::string rest = detail::lower(name.substr(9));
    if (rest.empty()) continue;
    const json value = detail::parse_env_value(text);
    if (cfg.contains(rest) && !cfg[rest].is_object()) {
      cfg[rest] = value;
      continue;
    }
    const auto us = rest.find('_');
    if (us == std::string::npos || us == 0 || us + 1 == rest.size()) {
      cfg[rest] = value;
      continue;
    }
    const std::string section = rest.substr(0, us);
    const std::string key = rest.substr(us + 1);
    if (!cfg.contains(section) || !cfg[section].is_object()) {
      if (cfg.contains(section)) io::field_error(name, "section '" + section + "' is not an object");
      cfg[section] = json::object();
    }
    cfg[section][key] = value;
  }
  return cfg;
}

struct RunConfig {
  json raw;
  fs::path base_dir;
  json system;        // resolved object
  json policy;        // resolved object
  json encoders;      // resolved array
  Index rollouts = 10;
  Index steps = 300;
  std::vector<std::uint64_t> simulation_seeds;
  std::vector<std::uint64_t> seeds;
  EvaluateOptions evaluate;
  fs::path output = "out";
  std::size_t jobs = 1;

  lagsim::SystemSpec system_spec() const { return io::system_from_json(system); }
  std::vector<encoders::EncoderSpec> zoo() const { return io::zoo_from_json(encoders, 2 * system_spec().dof); }

  fs::path trajectory_dir() const { return output / "trajectories"; }
  fs::path latent_dir() const { return output / "latents"; }
  fs::path report_dir() const { return output / "reports"; }
};

/// Flag values that take precedence over the config file.
struct Overrides {
  std::optional<std::string> out;
  std::optional<std::string> seeds;
  std::optional<std::string> metrics;
  std::optional<std::size_t> jobs;
};

namespace detail {

/// Inline object or path to a JSON file, relative to the config directory.
inline json resolve(const json& cfg, const std::string& key, const fs::path& base, bool required) {
  if (!cfg.contains(key)) {
    if (required) io::field_error(key, "missing");
    return json();
  }
  const json& v = cfg[key];
  if (!v.is_string()) return v;
  fs::path p = v.get<std::string>();
  if (p.is_relative()) p = base / p;
  if (!fs::exists(p)) io::field_error(key, "referenced file '" + p.string() + "' does not exist");
  auto in = io::open_input(p);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    io::field_error(key, "file '" + p.string() + "' is not valid JSON: " + e.what());
  }
}

inline Index get_index(const json& j, const std::string& key, const std::string& path, Index fallback, Index min) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer() || j[key].get<Index>() < min)
    io::field_error(path + "." + key, "must be an integer >= " + std::to_string(min));
  return j[key].get<Index>();
}

inline json section(const json& cfg, const std::string& name) {
  if (!cfg.contains(name)) return json::object();
  if (!cfg[name].is_object()) io::field_error(name, "must be an object");
  return cfg[name];
}

inline std::set<std::string> metric_selection(const json& list, const std::string& field) {
  if (!list.is_array() || list.empty()) io::field_error(field, "must be a non-empty list of metric names");
  std::set<std::string> out;
  for (const auto& m : list) {
    const auto& known = all_metrics();
    if (!m.is_string() || std::find(known.begin(), known.end(), m.get<std::string>()) == known.end())
      io::field_error(field, "unknown metric " + m.dump());
    out.insert(m.get<std::string>());
  }
  return out;
}

}  // namespace detail

/// Parses and validates a run configuration. Referenced files must exist;
/// structural checks of system, policy and encoders run here so a bad file
/// fails before any work starts.
inline RunConfig parse_config(json raw, const fs::path& base_dir, const Env& env, const Overrides& flags) {
  if (!raw.is_object()) io::field_error("config", "must be a JSON object");
  raw = apply_env_overrides(std::move(raw), env);
  RunConfig c;
  c.base_dir = base_dir;
  c.system = detail::resolve(raw, "system", base_dir, false);
  c.policy = detail::resolve(raw, "policy", base_dir, false);
  c.encoders = detail::resolve(raw, "encoders", base_dir, false);
  if (!c.system.is_null()) {
    const auto spec = io::system_from_json(c.system);
    io::policy_from_json(c.policy.is_null() ? json::object() : c.policy, spec);
    if (!c.encoders.is_null()) io::zoo_from_json(c.encoders, 2 * spec.dof);
  }
  if (!c.encoders.is_null() && c.encoders.is_array())
    for (std::size_t i = 0; i < c.encoders.size(); ++i)
      if (c.encoders[i].contains("id") && c.encoders[i]["id"].is_string() &&
          !detail::safe_name(c.encoders[i]["id"].get<std::string>()))
        io::field_error("encoders[" + std::to_string(i) + "].id", "must use only letters, digits, '-', '_' and '.'");

  const json sim = detail::section(raw, "simulation");
  c.rollouts = detail::get_index(sim, "rollouts", "simulation", 10, 1);
  c.steps = detail::get_index(sim, "steps", "simulation", 300, 2);

  if (flags.seeds) raw["seeds"] = detail::parse_env_value(*flags.seeds);
  c.seeds = raw.contains("seeds") ? detail::parse_seed_list(raw["seeds"], "seeds") : std::vector<std::uint64_t>{0};
  c.simulation_seeds = sim.contains("seeds") ? detail::parse_seed_list(sim["seeds"], "simulation.seeds") : c.seeds;

  if (flags.out) raw["output"] = *flags.out;
  if (raw.contains("output")) {
    if (!raw["output"].is_string()) io::field_error("output", "must be a path string");
    c.output = raw["output"].get<std::string>();
  }
  // --out is taken relative to the working directory, everything else to the config file
  if (c.output.is_relative() && !flags.out) c.output = base_dir / c.output;
  if (flags.jobs) raw["jobs"] = *flags.jobs;
  c.jobs = static_cast<std::size_t>(detail::get_index(raw, "jobs", "config", 1, 1));

  EvaluateOptions& e = c.evaluate;
  e.jobs = c.jobs;
  const json m = detail::section(raw, "metrics");
  if (flags.metrics) {
    json list = json::array();
    for (const auto& s : detail::split_list(*flags.metrics)) list.push_back(s);
    e.metrics = detail::metric_selection(list, "--metrics");
  } else if (m.contains("select")) {
    e.metrics = detail::metric_selection(m["select"], "metrics.select");
  }
  if (m.contains("alpha")) {
    if (m["alpha"].is_string() && m["alpha"] == "estimate") {
      e.alpha.reset();
    } else {
      const double a = io::get_number(m, "alpha", "metrics");
      if (!(a > 0.0)) io::field_error("metrics.alpha", "must be positive or \"estimate\"");
      e.alpha = a;
    }
  }
  // On-policy first differences are multimodal, so a policy with a mean or a
  // feedback term defaults to second differences.
  bool on_policy = c.policy.is_object() && c.policy.contains("feedback_gain");
  if (c.policy.is_object() && c.policy.contains("mean") && c.policy["mean"].is_array())
    for (const auto& v : c.policy["mean"]) on_policy = on_policy || (v.is_number() && v.get<double>() != 0.0);
  e.difference_order = static_cast<int>(detail::get_index(m, "difference_order", "metrics", on_policy ? 2 : 1, 1));
  if (e.difference_order > 2) io::field_error("metrics.difference_order", "must be 1 or 2");
  e.knn_k = detail::get_index(m, "knn_k", "metrics", 5, 1);
  e.bins.count = detail::get_index(m, "bins", "metrics", 20, 1);
  if (m.contains("offsets")) {
    e.offsets.clear();
    if (!m["offsets"].is_array()) io::field_error("metrics.offsets", "must be a list of positive integers");
    for (const auto& t : m["offsets"]) {
      if (!t.is_number_integer() || t.get<Index>() < 1) io::field_error("metrics.offsets", "must be a list of positive integers");
      e.offsets.push_back(t.get<Index>());
    }
  }

  const json mine = detail::section(raw, "mine");
  e.mine.hidden_width = detail::get_index(mine, "hidden", "mine", e.mine.hidden_width, 1);
  e.mine.batch_size = detail::get_index(mine, "batch", "mine", e.mine.batch_size, 1);
  e.mine.steps = detail::get_index(mine, "steps", "mine", e.mine.steps, 1);
  e.mine.learning_rate = io::get_number(mine, "learning_rate", "mine", e.mine.learning_rate);
  e.mine.moving_average = io::get_number(mine, "moving_average", "mine", e.mine.moving_average);
  e.mine.eval_fraction = io::get_number(mine, "eval_fraction", "mine", e.mine.eval_fraction);
  try {
    e.mine.validate();
  } catch (const Error& err) {
    io::field_error("mine", err.what());
  }

  const json probe = detail::section(raw, "probe");
  e.probe.hidden_width = detail::get_index(probe, "hidden", "probe", e.probe.hidden_width, 1);
  e.probe.batch_size = detail::get_index(probe, "batch", "probe", e.probe.batch_size, 1);
  e.probe.steps = detail::get_index(probe, "steps", "probe", e.probe.steps, 1);
  e.probe.learning_rate = io::get_number(probe, "learning_rate", "probe", e.probe.learning_rate);
  e.probe.holdout = io::get_number(probe, "holdout", "probe", e.probe.holdout);
  try {
    e.probe.validate();
  } catch (const Error& err) {
    io::field_error("probe", err.what());
  }
  c.raw = std::move(raw);
  return c;
}

inline RunConfig load_config(const fs::path& path, const Env& env, const Overrides& flags) {
  if (!fs::exists(path)) throw Error(ErrorKind::kInvalidArgument, "config file '" + path.string() + "' does not exist");
  auto in = io::open_input(path);
  json raw;
  try {
    raw = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidArgument, "config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(std::move(raw), path.parent_path(), env, flags);
}

// Commands ---------------------------------------------------------------------

inline std::string trajectory_name(std::uint64_t seed, Index rollout) {
  std::ostringstream s;
  s << "seed" << seed << "_rollout" << std::setw(3) << std::setfill('0') << rollout;
  return s.str();
}

/// One trajectory per (seed, rollout), rollout seed derive_seed(seed, r).
/// Diverged rollouts are listed in the manifest and skipped.
inline int cmd_simulate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (c.system.is_null()) io::field_error("system", "missing");
  const auto spec = c.system_spec();
  const auto policy = io::policy_from_json(c.policy.is_null() ? json::object() : c.policy, spec);
  struct Unit {
    std::uint64_t seed;
    Index rollout;
    std::string status = "ok";
    std::string message;
  };
  std::vector<Unit> units;
  for (auto s : c.simulation_seeds)
    for (Index r = 0; r < c.rollouts; ++r) units.push_back({s, r, "ok", ""});
  const fs::path dir = c.trajectory_dir();
  parallel_for(units.size(), c.jobs, [&](std::size_t i) {
    Unit& u = units[i];
    try {
      const auto traj = lagsim::rollout(spec, policy, static_cast<std::size_t>(c.steps),
                                        derive_seed(u.seed, static_cast<std::uint64_t>(u.rollout)));
      io::write_atomically(dir / (trajectory_name(u.seed, u.rollout) + ".csv"),
                           [&](std::ostream& o) { io::write_trajectory(o, traj); });
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDiverged && e.kind() != ErrorKind::kNumericFailure) throw;
      u.status = "diverged";
      u.message = e.what();
    }
  });
  json manifest = {{"format", "repmeter.manifest"}, {"schema_version", 1}, {"system", spec.name},
                   {"steps", c.steps}, {"rollouts", json::array()}};
  std::size_t ok = 0;
  for (const auto& u : units) {
    const std::string name = trajectory_name(u.seed, u.rollout);
    json entry = {{"file", name + ".csv"}, {"seed", u.seed}, {"rollout", u.rollout},
                  {"rollout_seed", derive_seed(u.seed, static_cast<std::uint64_t>(u.rollout))}, {"status", u.status}};
    if (u.status == "ok") {
      ++ok;
    } else {
      entry["message"] = u.message;
      err << "warning: " << name << " " << u.message << "\n";
      std::error_code ec;
      fs::remove(dir / (name + ".csv"), ec);
    }
    manifest["rollouts"].push_back(entry);
  }
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  out << "simulated " << ok << " of " << units.size() << " rollouts into " << dir.string() << "\n";
  return ok == 0 ? kNumeric : kOk;
}

/// Sorted trajectory files of the simulate step.
inline std::vector<fs::path> trajectory_files(const RunConfig& c) {
  const fs::path dir = c.trajectory_dir();
  if (!fs::is_directory(dir)) throw Error(ErrorKind::kInvalidArgument, "trajectory directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::kInvalidArgument, "no trajectory files in '" + dir.string() + "'");
  return files;
}

inline std::vector<lagsim::Trajectory> load_trajectories(const std::vector<fs::path>& files) {
  std::vector<lagsim::Trajectory> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(io::load_trajectory(f));
  return out;
}

/// One latent file per (trajectory, encoder).
inline int cmd_encode(const RunConfig& c, std::ostream& out, std::ostream&) {
  if (c.encoders.is_null()) io::field_error("encoders", "missing");
  const auto files = trajectory_files(c);
  const auto trajs = load_trajectories(files);
  const Index dim = trajs.front().states.front().stacked().size();
  const auto zoo = io::zoo_from_json(c.encoders, dim);
  parallel_for(zoo.size() * trajs.size(), c.jobs, [&](std::size_t i) {
    const auto& spec = zoo[i / trajs.size()];
    const std::size_t t = i % trajs.size();
    const std::string stem = files[t].stem().string();
    const auto lt = encoders::encode_trajectory(spec, trajs[t], encoders::encoding_seed(spec, trajs[t]), stem);
    io::write_atomically(c.latent_dir() / spec.id / (stem + ".csv"), [&](std::ostream& o) { io::write_latent(o, lt); });
  });
  out << "encoded " << trajs.size() << " trajectories with " << zoo.size() << " encoders into "
      << c.latent_dir().string() << "\n";
  return kOk;
}

inline fs::path report_path(const RunConfig& c, const std::string& id) { return c.report_dir() / (id + ".json"); }

/// One MetricReport per encoder. Exits nonzero only when no metric of any
/// encoder produced a value.
inline int cmd_evaluate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto files = trajectory_files(c);
  const auto trajs = load_trajectories(files);
  std::vector<std::string> ids;
  if (!c.encoders.is_null()) {
    for (const auto& e : c.zoo()) ids.push_back(e.id);
  } else {
    if (!fs::is_directory(c.latent_dir())) throw Error(ErrorKind::kInvalidArgument, "no latents in '" + c.latent_dir().string() + "'");
    for (const auto& e : fs::directory_iterator(c.latent_dir()))
      if (e.is_directory()) ids.push_back(e.path().filename().string());
    std::sort(ids.begin(), ids.end());
  }
  if (ids.empty()) throw Error(ErrorKind::kInvalidArgument, "no encoders to evaluate");
  bool any_value = false;
  for (const auto& id : ids) {
    std::vector<encoders::LatentTrajectory> latents;
    for (const auto& f : files) {
      const fs::path p = c.latent_dir() / id / f.filename();
      if (!fs::exists(p)) throw Error(ErrorKind::kInvalidArgument, "missing latent file '" + p.string() + "'");
      latents.push_back(io::load_latent(p));
    }
    const MetricReport r = evaluate_encoder(id, latents, trajs, c.seeds, c.evaluate);
    for (const auto& m : c.evaluate.metrics)
      if (!r.errors.count(m)) any_value = true;
    for (const auto& [m, msg] : r.errors) err << "warning: " << id << " " << m << ": " << msg << "\n";
    io::write_text(report_path(c, id), to_json(r).dump(2) + "\n");
    if (!r.temporal_profile.empty()) io::write_text(c.report_dir() / (id + ".profile.csv"), profile_csv(r));
    if (r.ratio_histogram) io::write_text(c.report_dir() / (id + ".histogram.csv"), histogram_csv(*r.ratio_histogram));
    out << "evaluated " << id << "\n";
  }
  if (!any_value) {
    err << "error: every metric failed\n";
    return kNumeric;
  }
  return kOk;
}

/// Loads reports from explicit paths or, for a directory, every *.json in it.
inline std::vector<MetricReport> load_reports(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p = in;
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".json") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(p)) {
      files.push_back(p);
    } else {
      throw Error(ErrorKind::kInvalidArgument, "report '" + p.string() + "' does not exist");
    }
  }
  std::vector<MetricReport> reports;
  for (const auto& f : files) {
    auto in = io::open_input(f);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kDataCorruption, f.string() + ": not valid JSON: " + e.what());
    }
    try {
      reports.push_back(report_from_json(j));
    } catch (const Error& e) {
      throw Error(e.kind(), f.string() + ": " + e.what());
    }
  }
  return reports;
}

struct RankRow {
  std::string encoder;
  std::optional<double> value;
  std::optional<double> spread;
};

/// Stable ordering by `metric` (descending for MI, uniqueness and entropy,
/// ascending for regression error and the smoothness bound), ties and
/// missing values broken by encoder id.
inline std::vector<RankRow> rank_reports(const std::vector<MetricReport>& reports, const std::string& metric) {
  if (reports.size() < 2) throw Error(ErrorKind::kInvalidArgument, "ranking needs at least two reports");
  for (const auto& r : reports)
    if (r.schema_version != reports.front().schema_version)
      throw Error(ErrorKind::kSchemaMismatch, "reports mix schema versions " + std::to_string(reports.front().schema_version) +
                                                  " and " + std::to_string(r.schema_version));
  const bool desc = higher_is_better(metric);
  std::vector<RankRow> rows;
  for (const auto& r : reports) {
    RankRow row{r.encoder_id, r.value_of(metric), std::nullopt};
    if (metric == "mi" && r.mi) row.spread = r.mi->summary.spread;
    if (metric == "regression" && r.regression) row.spread = r.regression->summary.spread;
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(), [&](const RankRow& a, const RankRow& b) {
    if (a.value.has_value() != b.value.has_value()) return a.value.has_value();
    if (a.value && *a.value != *b.value) return desc ? *a.value > *b.value : *a.value < *b.value;
    return a.encoder < b.encoder;
  });
  return rows;
}

inline int cmd_rank(const std::vector<std::string>& inputs, const std::string& metric, const fs::path& out_dir,
                    std::ostream& out) {
  const auto rows = rank_reports(load_reports(inputs), metric);
  std::string csv = "rank,encoder," + metric + ",spread\n";
  json table = {{"format", "repmeter.ranking"}, {"schema_version", 1}, {"metric", metric},
                {"order", higher_is_better(metric) ? "descending" : "ascending"}, {"rows", json::array()}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    csv += std::to_string(i + 1) + "," + r.encoder + "," + (r.value ? io::format_double(*r.value) : "") + "," +
           (r.spread ? io::format_double(*r.spread) : "") + "\n";
    json row = {{"rank", i + 1}, {"encoder", r.encoder}};
    row["value"] = r.value ? json(*r.value) : json(nullptr);
    if (r.spread) row["spread"] = *r.spread;
    table["rows"].push_back(row);
  }
  io::write_text(out_dir / ("ranking_" + metric + ".csv"), csv);
  io::write_text(out_dir / ("ranking_" + metric + ".json"), table.dump(2) + "\n");
  out << csv;
  return kOk;
}

/// Scatter of MI against uniqueness score, temporal-distance curves and one
/// ratio histogram per report.
inline int cmd_report(const std::vector<std::string>& inputs, const fs::path& out_dir, std::ostream& out) {
  if (inputs.empty()) throw Error(ErrorKind::kInvalidArgument, "no reports given");
  auto reports = load_reports(inputs);
  if (reports.empty()) throw Error(ErrorKind::kInvalidArgument, "no reports found");
  std::stable_sort(reports.begin(), reports.end(),
                   [](const MetricReport& a, const MetricReport& b) { return a.encoder_id < b.encoder_id; });
  const fs::path dir = out_dir / "plots";
  std::vector<svg::LabeledPoint> points;
  std::vector<svg::Series> curves;
  std::size_t written = 0;
  for (const auto& r : reports) {
    const auto mi = r.value_of("mi");
    const auto u = r.value_of("uniqueness");
    if (mi && u) points.push_back({r.encoder_id, *u, *mi});
    if (!r.temporal_profile.empty()) {
      svg::Series s{r.encoder_id, {}};
      for (const auto& [t, d] : r.temporal_profile) s.points.emplace_back(static_cast<double>(t), d);
      curves.push_back(std::move(s));
    }
    if (r.ratio_histogram) {
      io::write_text(dir / ("histogram_" + r.encoder_id + ".svg"),
                     svg::histogram("Smoothness ratios: " + r.encoder_id, *r.ratio_histogram, "||dz|| / ||dz0||"));
      ++written;
    }
  }
  if (!points.empty()) {
    io::write_text(dir / "mi_vs_uniqueness.svg",
                   svg::scatter("MI vs uniqueness score", points, "uniqueness score [nats]", "MI [nats]"));
    ++written;
  }
  if (!curves.empty()) {
    io::write_text(dir / "temporal_distance.svg",
                   svg::lines("Temporal distance", curves, "time offset [steps]", "mean ||z_n - z_(n+t)||"));
    ++written;
  }
  out << "wrote " << written << " plots into " << dir.string() << "\n";
  return kOk;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, const Env& env, std::ostream& out, std::ostream& err) {
  CLI::App app{"repmeter: metrics for state representations of dynamical systems"};
  app.require_subcommand(1);
  std::string config_path;
  Overrides flags;
  std::string out_dir;
  std::string seeds, metrics, rank_by = "mi";
  std::size_t jobs = 0;
  std::vector<std::string> inputs;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "run configuration (JSON)");
    if (needs_config) opt->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  };
  auto* simulate = app.add_subcommand("simulate", "roll out the exploration policy");
  add_common(simulate, true);
  simulate->add_option("--seeds", seeds, "comma-separated seed list");
  auto* encode = app.add_subcommand("encode", "apply the encoder zoo to trajectories");
  add_common(encode, true);
  auto* evaluate = app.add_subcommand("evaluate", "compute metric reports");
  add_common(evaluate, true);
  evaluate->add_option("--seeds", seeds, "comma-separated seed list");
  evaluate->add_option("--metrics", metrics, "comma-separated metric subset");
  auto* rank = app.add_subcommand("rank", "rank encoders by one metric");
  add_common(rank, false);
  rank->add_option("--metrics", rank_by, "metric to rank by (first entry is used)");
  rank->add_option("reports", inputs, "report files or directories");
  auto* report = app.add_subcommand("report", "render SVG plots from reports");
  add_common(report, false);
  report->add_option("reports", inputs, "report files or directories");

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }
  if (!out_dir.empty()) flags.out = out_dir;
  if (!seeds.empty()) flags.seeds = seeds;
  if (!metrics.empty()) flags.metrics = metrics;
  if (jobs > 0) flags.jobs = jobs;

  try {
    if (rank->parsed() || report->parsed()) {
      fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
      if (!config_path.empty()) {
        const RunConfig c = load_config(config_path, env, flags);
        dir = c.output;
        if (inputs.empty()) inputs.push_back(c.report_dir().string());
      }
      if (rank->parsed()) {
        const auto by = detail::split_list(rank_by);
        if (by.empty()) throw Error(ErrorKind::kInvalidArgument, "--metrics: empty");
        if (inputs.empty()) throw Error(ErrorKind::kInvalidArgument, "no reports given");
        return cmd_rank(inputs, by.front(), dir, out);
      }
      return cmd_report(inputs, dir, out);
    }
    const RunConfig c = load_config(config_path, env, flags);
    if (simulate->parsed()) return cmd_simulate(c, out, err);
    if (encode->parsed()) return cmd_encode(c, out, err);
    return cmd_evaluate(c, out, err);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error (io): " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace repmeter::cli

#endif  // REPMETER_CLI_HPP_
