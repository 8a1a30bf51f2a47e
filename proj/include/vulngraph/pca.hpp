#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulngraph/error.hpp"
#include "vulngraph/matrix.hpp"

namespace vulngraph {

struct PcaModel {
  std::vector<double> mean;
  Matrix components;                    // d x n, orthonormal rows
  std::vector<double> explained_variance;
  double total_variance = 0.0;
  std::size_t dims = 0;
  bool degenerate = false;              // input had zero variance; components is empty

  double explained_share(std::size_t i) const {
    return total_variance > 0.0 ? explained_variance.at(i) / total_variance : 0.0;
  }
};

// Top-d eigenvectors of the sample covariance (n-1 normalization) of the centered rows.
inline PcaModel fit_pca(const Matrix& x, std::size_t d) {
  const std::size_t n = x.cols();
  if (d < 1 || d > n) throw ParameterError("PCA target dimension must be in [1, feature count]");
  if (x.rows() < 2) throw ParameterError("PCA needs at least 2 rows");

  PcaModel m;
  m.dims = d;
  m.mean.assign(n, 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < n; ++j) m.mean[j] += x(i, j);
  for (double& v : m.mean) v /= static_cast<double>(x.rows());

  Matrix cov(n, n);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t a = 0; a < n; ++a) {
      const double ca = x(i, a) - m.mean[a];
      if (ca == 0.0) continue;
      for (std::size_t b = a; b < n; ++b) cov(a, b) += ca * (x(i, b) - m.mean[b]);
    }
  const double denom = static_cast<double>(x.rows() - 1);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) {
      cov(a, b) /= denom;
      cov(b, a) = cov(a, b);
    }
  for (std::size_t a = 0; a < n; ++a) m.total_variance += cov(a, a);
  if (m.total_variance <= 0.0) {
    m.degenerate = true;
    return m;
  }

  const EigenDecomposition eig = jacobi_eigen(cov, 1e-10);
  m.components = Matrix(d, n);
  for (std::size_t r = 0; r < d; ++r) {
    m.explained_variance.push_back(std::max(0.0, eig.values[r]));
    for (std::size_t c = 0; c < n; ++c) m.components(r, c) = eig.vectors(r, c);
  }
  return m;
}

inline std::vector<double> apply_pca(const PcaModel& m, std::span<const double> v) {
  if (v.size() != m.mean.size()) throw ParameterError("PCA input dimension mismatch");
  std::vector<double> out(m.dims, 0.0);
  if (m.degenerate) return out;
  for (std::size_t r = 0; r < m.dims; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < v.size(); ++c) s += m.components(r, c) * (v[c] - m.mean[c]);
    out[r] = s;
  }
  return out;
}

// mean + componentsᵀ · projection
inline std::vector<double> reconstruct_pca(const PcaModel& m, std::span<const double> projection) {
  std::vector<double> out = m.mean;
  if (m.degenerate) return out;
  for (std::size_t r = 0; r < m.dims; ++r)
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += m.components(r, c) * projection[r];
  return out;
}

inline nlohmann::json to_json(const PcaModel& m) {
  std::vector<std::vector<double>> comps;
  for (std::size_t r = 0; r < m.components.rows(); ++r)
    comps.emplace_back(m.components.row(r).begin(), m.components.row(r).end());
  return {{"mean", m.mean},           {"components", comps},       {"explained_variance", m.explained_variance},
          {"total_variance", m.total_variance}, {"dims", m.dims}, {"degenerate", m.degenerate}};
}

inline PcaModel pca_from_json(const nlohmann::json& j) {
  PcaModel m;
  m.mean = j.at("mean").get<std::vector<double>>();
  m.components = Matrix::from_rows(j.at("components").get<std::vector<std::vector<double>>>());
  m.explained_variance = j.at("explained_variance").get<std::vector<double>>();
  m.total_variance = j.at("total_variance").get<double>();
  m.dims = j.at("dims").get<std::size_t>();
  m.degenerate = j.at("degenerate").get<bool>();
  return m;
}

}  // namespace vulngraph
