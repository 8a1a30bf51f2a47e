#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulngraph/clustering.hpp"
#include "vulngraph/date.hpp"
#include "vulngraph/error.hpp"
#include "vulngraph/matching.hpp"
#include "vulngraph/records.hpp"

namespace vulngraph {

struct LibraryNode {
  std::string name;
  int cve_count = 0;
  int machine_count = 0;
  std::vector<Date> cve_timestamps;  // sorted ascending
  std::map<int, int> cluster_hist;   // cluster id → number of populate CVEs

  // Day differences between consecutive CVE timestamps.
  std::vector<int> gap_days() const {
    std::vector<int> gaps;
    for (std::size_t i = 1; i < cve_timestamps.size(); ++i) gaps.push_back(cve_timestamps[i] - cve_timestamps[i - 1]);
    return gaps;
  }

  int cluster_total() const {
    int total = 0;
    for (const auto& [id, count] : cluster_hist) total += count;
    return total;
  }

  friend bool operator==(const LibraryNode&, const LibraryNode&) = default;
};

inline constexpr std::size_t kScoreCount = 5;
using Weights = std::array<double, kScoreCount>;  // cve, machine, cluster, cluster_match, time
using Scores = std::array<double, kScoreCount>;

struct CohesionEdge {
  std::string a, b;  // a < b
  int co_cve_count = 0;
  int co_machine_count = 0;
  Weights weights{1.0, 1.0, 1.0, 1.0, 1.0};

  const std::string& other(const std::string& name) const { return name == a ? b : a; }

  friend bool operator==(const CohesionEdge&, const CohesionEdge&) = default;
};

// Facts about the input vulnerability; never stored in the graph.
struct PredictionContext {
  int input_cluster = kNoise;
  Date input_time;
};

class CohesionGraph {
 public:
  using EdgeKey = std::pair<std::string, std::string>;

  static EdgeKey key(const std::string& x, const std::string& y) {
    return x < y ? EdgeKey{x, y} : EdgeKey{y, x};
  }

  LibraryNode& touch_node(const std::string& name) {
    auto [it, inserted] = nodes_.try_emplace(name);
    if (inserted) it->second.name = name;
    return it->second;
  }

  // Creates the edge with unit weights when absent.
  CohesionEdge& touch_edge(const std::string& x, const std::string& y) {
    if (x == y) throw ParameterError("self edges are not allowed: " + x);
    touch_node(x);
    touch_node(y);
    EdgeKey k = key(x, y);
    auto [it, inserted] = edges_.try_emplace(k);
    if (inserted) {
      it->second.a = k.first;
      it->second.b = k.second;
      adjacency_[x].insert(y);
      adjacency_[y].insert(x);
    }
    return it->second;
  }

  const LibraryNode* find_node(const std::string& name) const {
    auto it = nodes_.find(name);
    return it == nodes_.end() ? nullptr : &it->second;
  }
  LibraryNode* find_node(const std::string& name) {
    auto it = nodes_.find(name);
    return it == nodes_.end() ? nullptr : &it->second;
  }

  const CohesionEdge* find_edge(const std::string& x, const std::string& y) const {
    auto it = edges_.find(key(x, y));
    return it == edges_.end() ? nullptr : &it->second;
  }
  CohesionEdge* find_edge(const std::string& x, const std::string& y) {
    auto it = edges_.find(key(x, y));
    return it == edges_.end() ? nullptr : &it->second;
  }

  const std::set<std::string>& neighbours(const std::string& name) const {
    static const std::set<std::string> none;
    auto it = adjacency_.find(name);
    return it == adjacency_.end() ? none : it->second;
  }

  const std::map<std::string, LibraryNode>& nodes() const noexcept { return nodes_; }
  const std::map<EdgeKey, CohesionEdge>& edges() const noexcept { return edges_; }
  std::map<EdgeKey, CohesionEdge>& edges() noexcept { return edges_; }

  bool all_unit_weights() const {
    for (const auto& [k, e] : edges_)
      for (double w : e.weights)
        if (w != 1.0) return false;
    return true;
  }

  friend bool operator==(const CohesionGraph& x, const CohesionGraph& y) {
    return x.nodes_ == y.nodes_ && x.edges_ == y.edges_;
  }

 private:
  std::map<std::string, LibraryNode> nodes_;
  std::map<EdgeKey, CohesionEdge> edges_;
  std::map<std::string, std::set<std::string>> adjacency_;
};

namespace detail {

inline std::vector<std::string> distinct_names(const std::vector<LibraryRef>& libs) {
  std::set<std::string> names;
  for (const auto& l : libs) names.insert(l.name);
  return {names.begin(), names.end()};
}

}  // namespace detail

// Counts each CVE once per affected library and once per co-affected pair.
inline void populate_from_cves(CohesionGraph& g, const std::vector<CveRecord>& records) {
  for (const auto& r : records) {
    const auto names = detail::distinct_names(r.affected);
    for (const auto& n : names) {
      LibraryNode& node = g.touch_node(n);
      ++node.cve_count;
      node.cve_timestamps.insert(
          std::upper_bound(node.cve_timestamps.begin(), node.cve_timestamps.end(), r.published), r.published);
    }
    for (std::size_t i = 0; i < names.size(); ++i)
      for (std::size_t j = i + 1; j < names.size(); ++j) ++g.touch_edge(names[i], names[j]).co_cve_count;
  }
}

// Vulnerable library names found on one machine.
struct MachineVulnerabilities {
  std::string machine_id;
  MachineTag tag = MachineTag::vulnerable;
  std::vector<std::string> libraries;  // distinct, sorted
};

inline std::vector<MachineVulnerabilities> machine_vulnerabilities(const std::vector<MachineInventory>& machines,
                                                                   const CveIndex& index) {
  std::vector<MachineVulnerabilities> out;
  for (const auto& m : machines) out.push_back({m.machine_id, m.tag, vulnerable_names(m, index)});
  return out;
}

inline void populate_from_machines(CohesionGraph& g, const std::vector<MachineVulnerabilities>& machines,
                                   MachineTag tag_filter = MachineTag::vulnerable) {
  for (const auto& m : machines) {
    if (m.tag != tag_filter) continue;
    std::set<std::string> uniq(m.libraries.begin(), m.libraries.end());
    const std::vector<std::string> names(uniq.begin(), uniq.end());
    for (const auto& n : names) ++g.touch_node(n).machine_count;
    for (std::size_t i = 0; i < names.size(); ++i)
      for (std::size_t j = i + 1; j < names.size(); ++j) ++g.touch_edge(names[i], names[j]).co_machine_count;
  }
}

// Adds each populate CVE's cluster to the histograms of its affected libraries. Noise
// assignments are not counted; ids without an assignment are reported.
inline void attach_clusters(CohesionGraph& g, const std::map<std::string, int>& assignments,
                            const std::vector<CveRecord>& records, Diagnostics* diag = nullptr) {
  std::set<std::string> known;
  for (const auto& r : records) {
    known.insert(r.id);
    auto it = assignments.find(r.id);
    if (it == assignments.end() || it->second == kNoise) continue;
    for (const auto& n : detail::distinct_names(r.affected))
      if (LibraryNode* node = g.find_node(n)) ++node->cluster_hist[it->second];
  }
  if (diag)
    for (const auto& [id, c] : assignments)
      if (!known.count(id)) diag->warn("cluster assignment for unknown CVE " + id + " ignored");
}

// --- sub-scores ---

inline double cve_score(const CohesionEdge& e, const LibraryNode& start, const LibraryNode& end) {
  const double avg = (start.cve_count + end.cve_count) / 2.0;
  return avg == 0.0 ? 0.0 : e.co_cve_count / avg;
}

inline double machine_score(const CohesionEdge& e, const LibraryNode& start, const LibraryNode& end) {
  const double avg = (start.machine_count + end.machine_count) / 2.0;
  return avg == 0.0 ? 0.0 : e.co_machine_count / avg;
}

// Mean over the union of cluster ids of min/max of the two histogram counts.
inline double cluster_score(const LibraryNode& start, const LibraryNode& end) {
  std::set<int> ids;
  for (const auto& [id, c] : start.cluster_hist) ids.insert(id);
  for (const auto& [id, c] : end.cluster_hist) ids.insert(id);
  if (ids.empty()) return 0.0;
  auto count = [](const LibraryNode& n, int id) {
    auto it = n.cluster_hist.find(id);
    return it == n.cluster_hist.end() ? 0 : it->second;
  };
  double sum = 0.0;
  for (int id : ids) {
    const int s = count(start, id), e = count(end, id);
    const int hi = std::max(s, e);
    if (hi > 0) sum += static_cast<double>(std::min(s, e)) / hi;
  }
  return sum / static_cast<double>(ids.size());
}

// Share of both endpoints' cluster assignments that fall in the input's cluster.
inline double cluster_match_score(const LibraryNode& start, const LibraryNode& end, const PredictionContext& ctx) {
  if (ctx.input_cluster == kNoise) return 0.0;
  const int total = start.cluster_total() + end.cluster_total();
  if (total == 0) return 0.0;
  auto count = [&](const LibraryNode& n) {
    auto it = n.cluster_hist.find(ctx.input_cluster);
    return it == n.cluster_hist.end() ? 0 : it->second;
  };
  return static_cast<double>(count(start) + count(end)) / total;
}

// (mean gap − days since the target's latest CVE) / max gap. Negative when the input
// arrives later than the target's history suggests.
inline double time_score(const LibraryNode& target, const PredictionContext& ctx) {
  const auto& ts = target.cve_timestamps;
  if (ts.size() < 2) return 0.0;
  int max_gap = 0;
  for (std::size_t i = 1; i < ts.size(); ++i) max_gap = std::max(max_gap, ts[i] - ts[i - 1]);
  if (max_gap == 0) return 0.0;
  const double mean_gap = static_cast<double>(ts.back() - ts.front()) / static_cast<double>(ts.size() - 1);
  const double since_last = static_cast<double>(ctx.input_time - ts.back());
  return (mean_gap - since_last) / max_gap;
}

inline Scores edge_scores(const CohesionEdge& e, const LibraryNode& start, const LibraryNode& end,
                          bool target_is_end, const PredictionContext& ctx) {
  return {cve_score(e, start, end), machine_score(e, start, end), cluster_score(start, end),
          cluster_match_score(start, end, ctx), time_score(target_is_end ? end : start, ctx)};
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double weighted_sum(const Weights& w, const Scores& s) {
  double z = 0.0;
  for (std::size_t i = 0; i < kScoreCount; ++i) z += w[i] * s[i];
  return z;
}

inline double activation(const CohesionEdge& e, const LibraryNode& start, const LibraryNode& end,
                         bool target_is_end, const PredictionContext& ctx) {
  return sigmoid(weighted_sum(e.weights, edge_scores(e, start, end, target_is_end, ctx)));
}

// --- prediction ---

class EmptySeedError : public DataError {
 public:
  using DataError::DataError;
};

struct Hit {
  std::string library;
  double activation;
  int depth;

  friend bool operator==(const Hit&, const Hit&) = default;
};

struct PredictionResult {
  std::string input;
  std::vector<Hit> hits;  // activation descending, then name
  double threshold = 0.0;
  int depth = 0;
};

inline constexpr int kUnboundedDepth = std::numeric_limits<int>::max();

// Level-by-level expansion from the seeds. At each level every edge from the frontier to
// a not-yet-visited node is evaluated; a node whose best activation strictly exceeds the
// threshold becomes a hit and joins the next frontier.
inline PredictionResult predict(const CohesionGraph& g, std::string input, const std::vector<std::string>& seed_names,
                                double threshold, int depth, const PredictionContext& ctx) {
  if (threshold < 0.0 || threshold > 1.0) throw ParameterError("threshold must be in [0, 1]");
  if (depth < 1) throw ParameterError("depth must be at least 1");
  std::set<std::string> visited;
  for (const auto& s : seed_names)
    if (g.find_node(s)) visited.insert(s);
  if (visited.empty()) throw EmptySeedError("no seed library of " + input + " is present in the graph");

  PredictionResult out{std::move(input), {}, threshold, depth};
  std::vector<std::string> frontier(visited.begin(), visited.end());
  for (int level = 1; level <= depth && !frontier.empty(); ++level) {
    std::map<std::string, double> best;
    for (const auto& f : frontier) {
      const LibraryNode& from = *g.find_node(f);
      for (const auto& nb : g.neighbours(f)) {
        if (visited.count(nb)) continue;
        const double a = activation(*g.find_edge(f, nb), from, *g.find_node(nb), true, ctx);
        auto [it, inserted] = best.try_emplace(nb, a);
        if (!inserted) it->second = std::max(it->second, a);
      }
    }
    frontier.clear();
    for (const auto& [name, a] : best) {
      if (a > threshold) {
        out.hits.push_back({name, a, level});
        frontier.push_back(name);
      }
    }
    visited.insert(frontier.begin(), frontier.end());
  }
  std::sort(out.hits.begin(), out.hits.end(), [](const Hit& x, const Hit& y) {
    if (x.activation != y.activation) return x.activation > y.activation;
    return x.library < y.library;
  });
  return out;
}

inline PredictionResult predict(const CohesionGraph& g, const CveRecord& cve, double threshold, int depth,
                                const PredictionContext& ctx) {
  return predict(g, cve.id, detail::distinct_names(cve.affected), threshold, depth, ctx);
}

inline PredictionResult predict_library(const CohesionGraph& g, const std::string& library, double threshold,
                                        int depth, const PredictionContext& ctx) {
  return predict(g, library, {library}, threshold, depth, ctx);
}

// --- snapshot ---

inline nlohmann::json to_json(const LibraryNode& n) {
  std::vector<std::string> ts;
  for (const Date& d : n.cve_timestamps) ts.push_back(d.iso());
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [id, c] : n.cluster_hist) hist[std::to_string(id)] = c;
  return {{"name", n.name},          {"cve_count", n.cve_count}, {"machine_count", n.machine_count},
          {"cve_timestamps", ts},     {"cluster_hist", hist}};
}

inline LibraryNode node_from_json(const nlohmann::json& j) {
  LibraryNode n;
  n.name = j.at("name").get<std::string>();
  n.cve_count = j.at("cve_count").get<int>();
  n.machine_count = j.at("machine_count").get<int>();
  for (const auto& t : j.at("cve_timestamps")) n.cve_timestamps.push_back(Date::parse(t.get<std::string>()));
  for (const auto& [id, c] : j.at("cluster_hist").items()) n.cluster_hist[std::stoi(id)] = c.get<int>();
  return n;
}

inline nlohmann::json to_json(const CohesionEdge& e) {
  return {{"a", e.a},
          {"b", e.b},
          {"co_cve_count", e.co_cve_count},
          {"co_machine_count", e.co_machine_count},
          {"weights", std::vector<double>(e.weights.begin(), e.weights.end())}};
}

inline CohesionEdge edge_from_json(const nlohmann::json& j) {
  CohesionEdge e;
  e.a = j.at("a").get<std::string>();
  e.b = j.at("b").get<std::string>();
  e.co_cve_count = j.at("co_cve_count").get<int>();
  e.co_machine_count = j.at("co_machine_count").get<int>();
  if (!(e.a < e.b)) throw DataError("edge endpoints must be stored in ascending order: " + e.a + "-" + e.b);
  const auto w = j.at("weights").get<std::vector<double>>();
  if (w.size() != kScoreCount) throw DataError("edge " + e.a + "-" + e.b + " needs 5 weights");
  std::copy(w.begin(), w.end(), e.weights.begin());
  return e;
}

inline void restore_node(CohesionGraph& g, LibraryNode n) { g.touch_node(n.name) = std::move(n); }

inline void restore_edge(CohesionGraph& g, const CohesionEdge& e) {
  if (!g.find_node(e.a) || !g.find_node(e.b)) throw DataError("edge " + e.a + "-" + e.b + " references a missing node");
  g.touch_edge(e.a, e.b) = e;
}

}  // namespace vulngraph
