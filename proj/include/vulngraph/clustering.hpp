#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulngraph/error.hpp"
#include "vulngraph/matrix.hpp"
#include "vulngraph/rng.hpp"

namespace vulngraph {

inline constexpr int kNoise = -1;

struct KMeansModel {
  Matrix centroids;  // k x n
  int k = 0;
  std::vector<int> assignments;
  double inertia = 0.0;
  std::vector<double> inertia_history;  // after each assignment step
  int iterations = 0;
};

struct KMeansOptions {
  int max_iter = 100;
};

namespace detail {

inline int nearest_centroid(const Matrix& centroids, std::span<const double> v, double* dist = nullptr) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(centroids.row(c), v);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist) *dist = best_d;
  return best;
}

// k-means++: first centre uniform, then D²-weighted. Falls back to the first unused
// row when every remaining point coincides with a chosen centre.
inline Matrix kmeans_plus_plus(const Matrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  Matrix centroids(k, x.cols());
  std::vector<bool> used(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t pick = static_cast<std::size_t>(rng.below(n));
  for (std::size_t c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += d2[i];
      if (total > 0.0) {
        double target = rng.uniform() * total;
        pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
          if (d2[i] <= 0.0) continue;
          target -= d2[i];
          if (target < 0.0) {
            pick = i;
            break;
          }
        }
        while (d2[pick] <= 0.0 && pick > 0) --pick;
      } else {
        pick = static_cast<std::size_t>(std::find(used.begin(), used.end(), false) - used.begin());
        if (pick == n) pick = 0;
      }
    }
    used[pick] = true;
    std::copy(x.row(pick).begin(), x.row(pick).end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(x.row(i), x.row(pick)));
  }
  return centroids;
}

}  // namespace detail

// k-means++ seeding followed by Lloyd iterations until assignments stop changing.
inline KMeansModel fit_kmeans(const Matrix& x, int k, std::uint64_t seed, KMeansOptions opts = {}) {
  if (k < 1) throw ParameterError("k must be at least 1");
  if (static_cast<std::size_t>(k) > x.rows()) throw ParameterError("k exceeds the number of rows");
  const auto kk = static_cast<std::size_t>(k);
  const std::size_t n = x.rows();
  Rng rng(seed);

  KMeansModel m;
  m.k = k;
  m.centroids = detail::kmeans_plus_plus(x, kk, rng);
  m.assignments.assign(n, -1);
  std::vector<double> dist(n, 0.0);

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = detail::nearest_centroid(m.centroids, x.row(i), &dist[i]);
      if (c != m.assignments[i]) changed = true;
      m.assignments[i] = c;
      inertia += dist[i];
    }
    m.inertia = inertia;
    m.inertia_history.push_back(inertia);
    m.iterations = iter + 1;
    if (!changed) break;

    Matrix sums(kk, x.cols());
    std::vector<std::size_t> counts(kk, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(m.assignments[i]);
      ++counts[c];
      for (std::size_t j = 0; j < x.cols(); ++j) sums(c, j) += x(i, j);
    }
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] == 0) {
        // Empty cluster: move it onto the point farthest from its own centroid.
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i)
          if (dist[i] > dist[far]) far = i;
        std::copy(x.row(far).begin(), x.row(far).end(), m.centroids.row(c).begin());
        dist[far] = 0.0;
        continue;
      }
      for (std::size_t j = 0; j < x.cols(); ++j) m.centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }
  }
  return m;
}

struct DbscanModel {
  double eps = 0.5;
  int min_pts = 5;
  Matrix core_points;
  std::vector<int> core_labels;  // parallel to core_points rows
  std::vector<int> labels;       // per training row, kNoise for noise
  int cluster_count = 0;
};

// Density-based clustering; a row's neighbourhood includes the row itself.
// Cluster ids are handed out in first-touch order over row index.
inline DbscanModel fit_dbscan(const Matrix& x, double eps, int min_pts) {
  if (!(eps > 0.0)) throw ParameterError("eps must be positive");
  if (min_pts < 1) throw ParameterError("min_pts must be at least 1");
  const std::size_t n = x.rows();
  const double eps2 = eps * eps;

  std::vector<std::vector<std::size_t>> neighbours(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (squared_distance(x.row(i), x.row(j)) <= eps2) neighbours[i].push_back(j);

  std::vector<bool> core(n);
  for (std::size_t i = 0; i < n; ++i) core[i] = neighbours[i].size() >= static_cast<std::size_t>(min_pts);

  DbscanModel m;
  m.eps = eps;
  m.min_pts = min_pts;
  m.labels.assign(n, kNoise);
  std::vector<bool> assigned(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (assigned[i] || !core[i]) continue;
    const int id = m.cluster_count++;
    std::vector<std::size_t> queue{i};
    assigned[i] = true;
    m.labels[i] = id;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t p = queue[head];
      if (!core[p]) continue;
      for (std::size_t q : neighbours[p]) {
        if (assigned[q]) continue;
        assigned[q] = true;
        m.labels[q] = id;
        queue.push_back(q);
      }
    }
  }

  const auto core_total = static_cast<std::size_t>(std::count(core.begin(), core.end(), true));
  m.core_points = Matrix(core_total, x.cols());
  std::size_t r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    std::copy(x.row(i).begin(), x.row(i).end(), m.core_points.row(r++).begin());
    m.core_labels.push_back(m.labels[i]);
  }
  return m;
}

using ClusterModel = std::variant<KMeansModel, DbscanModel>;

// Nearest centroid (lowest index on ties).
inline int assign_cluster(std::span<const double> v, const KMeansModel& m) {
  if (v.size() != m.centroids.cols()) throw ParameterError("vector dimension does not match the model");
  return detail::nearest_centroid(m.centroids, v);
}

// Cluster of the nearest core point within eps; noise otherwise.
inline int assign_cluster(std::span<const double> v, const DbscanModel& m) {
  if (m.core_points.rows() == 0) return kNoise;
  if (v.size() != m.core_points.cols()) throw ParameterError("vector dimension does not match the model");
  double best = std::numeric_limits<double>::infinity();
  int label = kNoise;
  for (std::size_t i = 0; i < m.core_points.rows(); ++i) {
    const double d = squared_distance(m.core_points.row(i), v);
    if (d < best) {
      best = d;
      label = m.core_labels[i];
    }
  }
  return best <= m.eps * m.eps ? label : kNoise;
}

inline int assign_cluster(std::span<const double> v, const ClusterModel& m) {
  return std::visit([&](const auto& model) { return assign_cluster(v, model); }, m);
}

// Adjusted Rand index between two labelings of the same rows.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ParameterError("labelings differ in length");
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ca, cb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    ca[a[i]] += 1;
    cb[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2.0; };
  double index = 0, sa = 0, sb = 0;
  for (const auto& [key, v] : joint) index += c2(v);
  for (const auto& [key, v] : ca) sa += c2(v);
  for (const auto& [key, v] : cb) sb += c2(v);
  const double total = c2(static_cast<double>(a.size()));
  const double expected = total > 0 ? sa * sb / total : 0.0;
  const double max_index = (sa + sb) / 2.0;
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

inline nlohmann::json to_json(const ClusterModel& model) {
  auto rows = [](const Matrix& m) {
    std::vector<std::vector<double>> out;
    for (std::size_t r = 0; r < m.rows(); ++r) out.emplace_back(m.row(r).begin(), m.row(r).end());
    return out;
  };
  if (const auto* km = std::get_if<KMeansModel>(&model))
    return {{"algo", "kmeans"}, {"k", km->k}, {"centroids", rows(km->centroids)}, {"inertia", km->inertia}};
  const auto& db = std::get<DbscanModel>(model);
  return {{"algo", "dbscan"},          {"eps", db.eps},
          {"min_pts", db.min_pts},     {"cluster_count", db.cluster_count},
          {"core_points", rows(db.core_points)}, {"core_labels", db.core_labels}};
}

inline ClusterModel cluster_model_from_json(const nlohmann::json& j) {
  const auto algo = j.at("algo").get<std::string>();
  auto matrix = [](const nlohmann::json& v, std::size_t cols) {
    auto rows = v.get<std::vector<std::vector<double>>>();
    return rows.empty() ? Matrix(0, cols) : Matrix::from_rows(rows);
  };
  if (algo == "kmeans") {
    KMeansModel km;
    km.k = j.at("k").get<int>();
    km.centroids = matrix(j.at("centroids"), 0);
    km.inertia = j.at("inertia").get<double>();
    return km;
  }
  if (algo == "dbscan") {
    DbscanModel db;
    db.eps = j.at("eps").get<double>();
    db.min_pts = j.at("min_pts").get<int>();
    db.cluster_count = j.at("cluster_count").get<int>();
    db.core_points = matrix(j.at("core_points"), 0);
    db.core_labels = j.at("core_labels").get<std::vector<int>>();
    return db;
  }
  throw DataError("unknown cluster algorithm '" + algo + "'");
}

}  // namespace vulngraph
