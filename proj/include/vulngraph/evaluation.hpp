#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vulngraph/error.hpp"
#include "vulngraph/graph.hpp"
#include "vulngraph/records.hpp"
#include "vulngraph/training.hpp"

namespace vulngraph {

struct EvalCase {
  CveRecord input;
  std::set<std::string> targets;
  PredictionContext ctx;  // input_cluster is filled in once a cluster model exists
};

struct EvalCaseSet {
  std::vector<EvalCase> cases;
  std::size_t ineligible = 0;  // no CVE published after the input
};

// One case per input CVE that has a later-published CVE. Targets are the libraries of
// every other CVE published in (0, window_days] days after the input.
inline EvalCaseSet build_eval_cases(const std::vector<CveRecord>& inputs, const std::vector<CveRecord>& all,
                                    int window_days) {
  if (window_days < 0) throw ParameterError("window_days must be non-negative");
  std::vector<const CveRecord*> chrono;
  for (const auto& r : all) chrono.push_back(&r);
  std::sort(chrono.begin(), chrono.end(), [](const CveRecord* a, const CveRecord* b) { return published_before(*a, *b); });
  const Date latest = chrono.empty() ? Date{std::numeric_limits<int>::min()} : chrono.back()->published;

  EvalCaseSet out;
  for (const auto& in : inputs) {
    if (!(in.published < latest)) {
      ++out.ineligible;
      continue;
    }
    EvalCase c{in, {}, PredictionContext{kNoise, in.published}};
    auto it = std::upper_bound(chrono.begin(), chrono.end(), in.published,
                               [](Date d, const CveRecord* r) { return d < r->published; });
    for (; it != chrono.end() && (*it)->published - in.published <= window_days; ++it) {
      if ((*it)->id == in.id) continue;
      for (const auto& lib : (*it)->affected) c.targets.insert(lib.name);
    }
    out.cases.push_back(std::move(c));
  }
  return out;
}

// Cases with at least one target, in the form the trainer consumes.
inline std::vector<TrainingCase> to_training_cases(const std::vector<EvalCase>& cases) {
  std::vector<TrainingCase> out;
  for (const auto& c : cases) {
    if (c.targets.empty()) continue;
    TrainingCase t{c.input.id, {}, c.ctx, c.targets};
    for (const auto& lib : c.input.affected) t.seeds.push_back(lib.name);
    out.push_back(std::move(t));
  }
  return out;
}

// |hits ∩ targets| / |hits|; undefined without hits.
inline std::optional<double> case_accuracy(const PredictionResult& prediction, const std::set<std::string>& targets) {
  if (prediction.hits.empty()) return std::nullopt;
  std::size_t correct = 0;
  for (const auto& h : prediction.hits) correct += targets.count(h.library);
  return static_cast<double>(correct) / static_cast<double>(prediction.hits.size());
}

inline std::optional<double> case_accuracy(const PredictionResult& prediction, const EvalCase& c) {
  return case_accuracy(prediction, c.targets);
}

struct CaseOutcome {
  std::string cve_id;
  std::size_t prediction_count = 0;
  std::optional<double> accuracy;
};

struct ThresholdResult {
  double threshold = 0.0;
  std::vector<CaseOutcome> outcomes;  // evaluated (non-dropped) cases, input order

  std::vector<double> accuracies() const {
    std::vector<double> out;
    for (const auto& o : outcomes)
      if (o.accuracy) out.push_back(*o.accuracy);
    return out;
  }
  std::size_t undefined_count() const {
    return static_cast<std::size_t>(
        std::count_if(outcomes.begin(), outcomes.end(), [](const CaseOutcome& o) { return !o.accuracy; }));
  }
};

struct SweepResult {
  std::vector<ThresholdResult> per_threshold;
  std::size_t dropped = 0;  // cases without any seed in the graph
};

inline std::vector<double> default_thresholds() {
  std::vector<double> t;
  for (int i = 0; i <= 9; ++i) t.push_back(i / 10.0);
  return t;
}

inline SweepResult threshold_sweep(const CohesionGraph& g, const std::vector<EvalCase>& cases,
                                   const std::vector<double>& thresholds, int depth) {
  SweepResult out;
  for (double t : thresholds) out.per_threshold.push_back({t, {}});
  for (const auto& c : cases) {
    const bool has_seed = std::any_of(c.input.affected.begin(), c.input.affected.end(),
                                      [&](const LibraryRef& l) { return g.find_node(l.name) != nullptr; });
    if (!has_seed) {
      ++out.dropped;
      continue;
    }
    for (auto& tr : out.per_threshold) {
      const PredictionResult p = predict(g, c.input, tr.threshold, depth, c.ctx);
      tr.outcomes.push_back({c.input.id, p.hits.size(), case_accuracy(p, c)});
    }
  }
  return out;
}

// --- summary statistics ---

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Linear-interpolation quantile on sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct BoxStats {
  double min, q1, median, q3, max;
};

inline BoxStats box_stats(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return {quantile_sorted(v, 0.0), quantile_sorted(v, 0.25), quantile_sorted(v, 0.5), quantile_sorted(v, 0.75),
          quantile_sorted(v, 1.0)};
}

}  // namespace vulngraph
