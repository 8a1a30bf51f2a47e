#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "vulngraph/error.hpp"
#include "vulngraph/graph.hpp"

namespace vulngraph {

// 1 − a when the far library is a target, 1 + a otherwise.
inline double loss(double prediction_activation, bool target_vulnerable) {
  return target_vulnerable ? 1.0 - prediction_activation : 1.0 + prediction_activation;
}

// dL/dw_i = ∓σ(z)(1 − σ(z))·s_i, minus sign for targets.
inline Weights loss_gradient(const Weights& w, const Scores& s, bool target_vulnerable) {
  const double a = sigmoid(weighted_sum(w, s));
  const double slope = a * (1.0 - a) * (target_vulnerable ? -1.0 : 1.0);
  Weights g{};
  for (std::size_t i = 0; i < kScoreCount; ++i) g[i] = slope * s[i];
  return g;
}

struct TrainingCase {
  std::string cve_id;
  std::vector<std::string> seeds;  // affected library names of the input CVE
  PredictionContext ctx;
  std::set<std::string> targets;
};

struct TrainOptions {
  int epochs = 50;
  double lr = 0.1;
};

struct TrainLog {
  int epochs_run = 0;
  double initial_loss = 0.0;             // mean per-edge loss before any update
  std::vector<double> epoch_mean_loss;   // mean pre-update loss seen during each epoch
  double final_loss = 0.0;               // mean per-edge loss after the last epoch
  std::size_t case_edges = 0;            // edges evaluated per epoch
};

namespace detail {

// Calls fn(edge, seed_node, far_node, is_target) for every edge from a seed present in
// the graph to a non-seed node: the depth-1, threshold-0 traversal.
template <typename Graph, typename Fn>
void for_each_case_edge(Graph& g, const TrainingCase& c, Fn&& fn) {
  std::set<std::string> seeds;
  for (const auto& s : c.seeds)
    if (g.find_node(s)) seeds.insert(s);
  for (const auto& s : seeds) {
    const LibraryNode& from = *g.find_node(s);
    for (const auto& nb : g.neighbours(s)) {
      if (seeds.count(nb)) continue;
      fn(*g.find_edge(s, nb), from, *g.find_node(nb), c.targets.count(nb) > 0);
    }
  }
}

}  // namespace detail

inline double mean_case_edge_loss(const CohesionGraph& g, const std::vector<TrainingCase>& cases) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& c : cases)
    detail::for_each_case_edge(g, c, [&](const CohesionEdge& e, const LibraryNode& from, const LibraryNode& to,
                                         bool target) {
      total += loss(activation(e, from, to, true, c.ctx), target);
      ++n;
    });
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

// Gradient descent on per-edge weights. Each evaluated edge is updated immediately;
// cases are visited in CVE id order.
inline TrainLog train(CohesionGraph& g, std::vector<TrainingCase> cases, TrainOptions opts = {}) {
  if (cases.empty()) throw DataError("training needs at least one case");
  if (opts.epochs < 0) throw ParameterError("epochs must be non-negative");
  std::sort(cases.begin(), cases.end(), [](const TrainingCase& x, const TrainingCase& y) { return x.cve_id < y.cve_id; });

  TrainLog log;
  log.initial_loss = mean_case_edge_loss(g, cases);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& c : cases) {
      detail::for_each_case_edge(g, c, [&](CohesionEdge& e, const LibraryNode& from, const LibraryNode& to,
                                           bool target) {
        const Scores s = edge_scores(e, from, to, true, c.ctx);
        total += loss(sigmoid(weighted_sum(e.weights, s)), target);
        ++n;
        const Weights grad = loss_gradient(e.weights, s, target);
        for (std::size_t i = 0; i < kScoreCount; ++i) e.weights[i] -= opts.lr * grad[i];
      });
    }
    log.epoch_mean_loss.push_back(n == 0 ? 0.0 : total / static_cast<double>(n));
    log.case_edges = n;
    ++log.epochs_run;
  }
  log.final_loss = mean_case_edge_loss(g, cases);
  return log;
}

}  // namespace vulngraph
