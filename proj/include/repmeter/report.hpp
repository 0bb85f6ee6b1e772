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

// Per-encoder metric evaluation and the MetricReport JSON schema.

#ifndef REPMETER_REPORT_HPP_
#define REPMETER_REPORT_HPP_

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "repmeter/encoders.hpp"
#include "repmeter/entropy.hpp"
#include "repmeter/io.hpp"
#include "repmeter/lagsim.hpp"
#include "repmeter/mine.hpp"
#include "repmeter/parallel.hpp"
#include "repmeter/probe.hpp"
#include "repmeter/smoothness.hpp"
#include "repmeter/stats.hpp"

namespace repmeter {

inline constexpr int kReportSchema = 1;

inline const std::vector<std::string>& all_metrics() {
  static const std::vector<std::string> names{"mi", "entropy", "smoothness", "uniqueness", "regression", "profile", "histogram"};
  return names;
}

struct SeededMetric {
  std::vector<double> per_seed;
  Summary summary;
};

struct MetricReport {
  int schema_version = kReportSchema;
  std::string encoder_id;
  std::vector<std::uint64_t> seeds;
  Index latent_dim = 0;
  Index state_dim = 0;
  Index samples = 0;
  double alpha = kDefaultAlpha;
  std::string alpha_source = "fixed";

  std::optional<SeededMetric> mi;
  bool mi_negative = false;
  std::optional<SeededMetric> regression;
  std::optional<Vector> regression_coordinates;  // mean over seeds
  std::optional<double> entropy;
  std::optional<SmoothnessBound> smoothness;
  std::optional<UniquenessScore> uniqueness;
  std::vector<std::pair<Index, double>> temporal_profile;
  std::optional<Histogram> ratio_histogram;
  std::map<std::string, std::string> errors;

  /// Headline value used for ranking; nullopt when the metric is absent.
  std::optional<double> value_of(const std::string& metric) const {
    if (metric == "mi" && mi) return mi->summary.mean;
    if (metric == "regression" && regression) return regression->summary.mean;
    if (metric == "entropy" && entropy) return *entropy;
    if (metric == "smoothness" && smoothness && std::isfinite(smoothness->value)) return smoothness->value;
    if (metric == "uniqueness" && uniqueness && uniqueness->score) return *uniqueness->score;
    return std::nullopt;
  }
};

/// True when a larger value of `metric` means a better representation.
inline bool higher_is_better(const std::string& metric) {
  if (metric == "mi" || metric == "uniqueness" || metric == "entropy") return true;
  if (metric == "regression" || metric == "smoothness") return false;
  throw Error(ErrorKind::kInvalidArgument, "metric '" + metric + "' cannot be ranked");
}

struct EvaluateOptions {
  std::set<std::string> metrics{all_metrics().begin(), all_metrics().end()};
  MineConfig mine;
  ProbeConfig probe;
  std::optional<double> alpha = kDefaultAlpha;  // nullopt: estimate from the true states
  int difference_order = 1;
  Index knn_k = 5;
  std::vector<Index> offsets{1, 2, 5, 10, 20, 50};
  HistogramBins bins;
  std::size_t jobs = 1;

  bool wants(const std::string& m) const { return metrics.count(m) > 0; }
};

namespace detail {

template <typename F>
void record(MetricReport& r, const std::string& metric, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    r.errors[metric] = e.what();
  } catch (const std::exception& e) {
    r.errors[metric] = e.what();
  }
}

inline SeededMetric seeded(std::vector<double> values) {
  SeededMetric m;
  m.summary = summarize(values);
  m.per_seed = std::move(values);
  return m;
}

}  // namespace detail

/// Runs every selected metric for one encoder. Per-metric failures land in
/// `errors` instead of aborting the report. Seeded metrics (mi, regression)
/// run once per seed and may run in parallel; all others are deterministic.
inline MetricReport evaluate_encoder(const std::string& encoder_id,
                                     const std::vector<encoders::LatentTrajectory>& latents,
                                     const std::vector<lagsim::Trajectory>& states,
                                     const std::vector<std::uint64_t>& seeds, const EvaluateOptions& opt) {
  require_arg(!seeds.empty(), "seed list is empty");
  require_arg(!latents.empty() && latents.size() == states.size(), "latent and state trajectory counts differ");
  MetricReport r;
  r.encoder_id = encoder_id;
  r.seeds = seeds;
  const PairedSamples paired{pooled_latents(latents), pooled_states(states)};
  r.latent_dim = paired.latent.cols();
  r.state_dim = paired.state.cols();
  r.samples = paired.size();

  if (opt.alpha) {
    r.alpha = *opt.alpha;
  } else {
    const auto est = estimate_alpha(states, opt.difference_order);
    r.alpha = est.alpha;
    r.alpha_source = "estimated";
  }

  // seeded cells: (metric, seed)
  std::vector<std::pair<std::string, std::size_t>> cells;
  for (const char* m : {"mi", "regression"})
    if (opt.wants(m))
      for (std::size_t s = 0; s < seeds.size(); ++s) cells.emplace_back(m, s);
  std::vector<std::optional<double>> values(cells.size());
  std::vector<std::string> failures(cells.size());
  std::vector<Vector> coords(cells.size());
  std::vector<bool> negative(cells.size(), false);
  parallel_for(cells.size(), opt.jobs, [&](std::size_t i) {
    const auto& [metric, s] = cells[i];
    try {
      if (metric == "mi") {
        const auto res = mine_mi(paired, opt.mine, seeds[s]);
        values[i] = res.estimate;
        negative[i] = res.negative;
      } else {
        const auto res = regression_probe(paired, opt.probe, seeds[s]);
        values[i] = res.validation_error;
        coords[i] = res.coordinate_errors;
      }
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });
  for (const char* m : {"mi", "regression"}) {
    if (!opt.wants(m)) continue;
    std::vector<double> per_seed;
    Vector coord_sum;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].first != m) continue;
      if (!values[i]) {
        r.errors[m] = failures[i];
        continue;
      }
      per_seed.push_back(*values[i]);
      if (std::string(m) == "mi" && negative[i]) r.mi_negative = true;
      if (coords[i].size()) coord_sum = coord_sum.size() ? Vector(coord_sum + coords[i]) : coords[i];
    }
    if (per_seed.size() != seeds.size()) continue;
    if (std::string(m) == "mi") {
      r.mi = detail::seeded(std::move(per_seed));
    } else {
      r.regression_coordinates = coord_sum / static_cast<double>(per_seed.size());
      r.regression = detail::seeded(std::move(per_seed));
    }
  }

  const std::uint64_t jitter_seed = seeds.front();
  if (opt.wants("entropy"))
    detail::record(r, "entropy", [&] { r.entropy = knn_entropy(paired.latent, opt.knn_k, jitter_seed); });
  if (opt.wants("smoothness"))
    detail::record(r, "smoothness", [&] { r.smoothness = smoothness_bound(latents, r.alpha, r.latent_dim); });
  if (opt.wants("uniqueness"))
    detail::record(r, "uniqueness", [&] { r.uniqueness = uniqueness_score(latents, states, r.alpha, opt.knn_k, jitter_seed); });
  if (opt.wants("profile"))
    detail::record(r, "profile", [&] {
      Index min_len = latents.front().size();
      for (const auto& l : latents) min_len = std::min(min_len, l.size());
      std::vector<Index> usable;
      for (Index t : opt.offsets)
        if (t < min_len) usable.push_back(t);
      r.temporal_profile = temporal_distance_profile(latents, usable);
    });
  if (opt.wants("histogram"))
    detail::record(r, "histogram", [&] { r.ratio_histogram = smoothness_ratio_histogram(latents, states, opt.bins); });
  return r;
}

// JSON ------------------------------------------------------------------------

namespace detail {

inline io::json finite_or_null(double v) { return std::isfinite(v) ? io::json(v) : io::json(nullptr); }

inline io::json seeded_to_json(const SeededMetric& m) {
  io::json j = {{"per_seed", m.per_seed}, {"mean", m.summary.mean}};
  if (m.summary.spread) j["spread"] = *m.summary.spread;
  return j;
}

inline SeededMetric seeded_from_json(const io::json& j) {
  SeededMetric m;
  m.per_seed = j.at("per_seed").get<std::vector<double>>();
  m.summary.mean = j.at("mean").get<double>();
  m.summary.count = m.per_seed.size();
  if (j.contains("spread")) m.summary.spread = j.at("spread").get<double>();
  return m;
}

inline double number_or_inf(const io::json& j) {
  return j.is_null() ? kNegInf : j.get<double>();
}

}  // namespace detail

inline io::json to_json(const MetricReport& r) {
  using io::json;
  json metrics = json::object();
  if (r.mi) {
    metrics["mi"] = detail::seeded_to_json(*r.mi);
    metrics["mi"]["negative"] = r.mi_negative;
    metrics["mi"]["inputs_standardized"] = true;
  }
  if (r.regression) {
    metrics["regression"] = detail::seeded_to_json(*r.regression);
    if (r.regression_coordinates) metrics["regression"]["coordinates"] = io::to_json(*r.regression_coordinates);
  }
  if (r.entropy) metrics["entropy"] = {{"value", *r.entropy}};
  if (r.smoothness)
    metrics["smoothness"] = {{"bound", detail::finite_or_null(r.smoothness->value)},
                             {"mean_squared_step", r.smoothness->mean_squared_step},
                             {"pairs", r.smoothness->pairs},
                             {"constant", r.smoothness->constant}};
  if (r.uniqueness) {
    json u = {{"entropy", r.uniqueness->entropy}, {"mean_step_norm", r.uniqueness->mean_step_norm}};
    u["bound"] = r.uniqueness->bound ? detail::finite_or_null(*r.uniqueness->bound) : json(nullptr);
    u["score"] = r.uniqueness->score ? detail::finite_or_null(*r.uniqueness->score) : json(nullptr);
    metrics["uniqueness"] = u;
  }
  if (!r.temporal_profile.empty()) {
    json p = json::array();
    for (const auto& [t, d] : r.temporal_profile) p.push_back({{"offset", t}, {"distance", d}});
    metrics["profile"] = p;
  }
  if (r.ratio_histogram)
    metrics["histogram"] = {{"edges", r.ratio_histogram->edges},
                            {"counts", r.ratio_histogram->counts},
                            {"skipped", r.ratio_histogram->skipped},
                            {"samples", r.ratio_histogram->total()}};
  return json{{"format", "repmeter.metric_report"},
              {"schema_version", r.schema_version},
              {"encoder", r.encoder_id},
              {"seeds", r.seeds},
              {"latent_dim", r.latent_dim},
              {"state_dim", r.state_dim},
              {"samples", r.samples},
              {"alpha", r.alpha},
              {"alpha_source", r.alpha_source},
              {"metrics", metrics},
              {"errors", r.errors}};
}

inline MetricReport report_from_json(const io::json& j) {
  if (!j.is_object() || j.value("format", "") != "repmeter.metric_report")
    throw Error(ErrorKind::kDataCorruption, "not a metric report");
  MetricReport r;
  try {
    r.schema_version = j.at("schema_version").get<int>();
    r.encoder_id = j.at("encoder").get<std::string>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.latent_dim = j.value("latent_dim", Index{0});
    r.state_dim = j.value("state_dim", Index{0});
    r.samples = j.value("samples", Index{0});
    r.alpha = j.value("alpha", kDefaultAlpha);
    r.alpha_source = j.value("alpha_source", std::string("fixed"));
    const auto& m = j.at("metrics");
    if (m.contains("mi")) {
      r.mi = detail::seeded_from_json(m["mi"]);
      r.mi_negative = m["mi"].value("negative", false);
    }
    if (m.contains("regression")) {
      r.regression = detail::seeded_from_json(m["regression"]);
      if (m["regression"].contains("coordinates"))
        r.regression_coordinates = io::vector_from_json(m["regression"]["coordinates"], "regression.coordinates");
    }
    if (m.contains("entropy")) r.entropy = m["entropy"].at("value").get<double>();
    if (m.contains("smoothness")) {
      SmoothnessBound b;
      b.value = detail::number_or_inf(m["smoothness"].at("bound"));
      b.mean_squared_step = m["smoothness"].at("mean_squared_step").get<double>();
      b.pairs = m["smoothness"].at("pairs").get<Index>();
      b.constant = m["smoothness"].at("constant").get<bool>();
      r.smoothness = b;
    }
    if (m.contains("uniqueness")) {
      UniquenessScore u;
      u.entropy = m["uniqueness"].at("entropy").get<double>();
      u.mean_step_norm = m["uniqueness"].at("mean_step_norm").get<double>();
      if (!m["uniqueness"].at("bound").is_null()) u.bound = m["uniqueness"]["bound"].get<double>();
      if (!m["uniqueness"].at("score").is_null()) u.score = m["uniqueness"]["score"].get<double>();
      r.uniqueness = u;
    }
    if (m.contains("profile"))
      for (const auto& p : m["profile"]) r.temporal_profile.emplace_back(p.at("offset").get<Index>(), p.at("distance").get<double>());
    if (m.contains("histogram")) {
      Histogram h;
      h.edges = m["histogram"].at("edges").get<std::vector<double>>();
      h.counts = m["histogram"].at("counts").get<std::vector<std::int64_t>>();
      h.skipped = m["histogram"].at("skipped").get<std::int64_t>();
      r.ratio_histogram = h;
    }
    if (j.contains("errors")) r.errors = j["errors"].get<std::map<std::string, std::string>>();
  } catch (const io::json::exception& e) {
    throw Error(ErrorKind::kDataCorruption, std::string("malformed metric report: ") + e.what());
  }
  return r;
}

/// Temporal profile as CSV: offset,distance.
inline std::string profile_csv(const MetricReport& r) {
  std::ostringstream out;
  out << "offset,distance\n";
  for (const auto& [t, d] : r.temporal_profile) out << t << ',' << io::format_double(d) << '\n';
  return out.str();
}

/// Histogram as CSV: bin_lo,bin_hi,count.
inline std::string histogram_csv(const Histogram& h) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    out << io::format_double(h.edges[b]) << ',' << io::format_double(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
  return out.str();
}

}  // namespace repmeter

#endif  // REPMETER_REPORT_HPP_
