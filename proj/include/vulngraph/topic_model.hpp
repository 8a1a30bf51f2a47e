#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string_view>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulngraph/error.hpp"
#include "vulngraph/matrix.hpp"
#include "vulngraph/rng.hpp"
#include "vulngraph/text.hpp"

namespace vulngraph {

// NMF topic model over TF-IDF weighted description tokens.
struct TopicModel {
  std::vector<std::string> vocabulary;  // sorted
  std::vector<double> idf;              // parallel to vocabulary
  Matrix topic_term;                    // k x |vocabulary|, non-negative
  int k = 0;

  // Topic id reserved for descriptions with no in-vocabulary token.
  int empty_topic_id() const noexcept { return k; }

  // L2-normalized TF-IDF row for a token list; tokens outside the vocabulary are ignored.
  std::vector<double> tfidf(const std::vector<std::string>& tokens) const {
    std::vector<double> x(vocabulary.size(), 0.0);
    for (const auto& t : tokens) {
      auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), t);
      if (it != vocabulary.end() && *it == t) x[static_cast<std::size_t>(it - vocabulary.begin())] += 1.0;
    }
    double norm = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] *= idf[j];
      norm += x[j] * x[j];
    }
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (double& v : x) v /= norm;
    }
    return x;
  }
};

struct NmfOptions {
  int max_iter = 200;
  double tol = 1e-4;
};

struct NmfFit {
  TopicModel model;
  Matrix doc_topic;                // W: documents x k
  std::vector<double> objective;   // squared Frobenius residual; [0] is the initial value
  int iterations = 0;
};

namespace detail {

inline constexpr double kNmfEps = 1e-12;

inline double nmf_objective(const Matrix& x, const Matrix& w, const Matrix& h) {
  const Matrix wh = w * h;
  double s = 0.0;
  for (std::size_t i = 0; i < x.data().size(); ++i) {
    const double d = x.data()[i] - wh.data()[i];
    s += d * d;
  }
  return s;
}

}  // namespace detail

// Builds the vocabulary and IDF weights (smooth IDF: ln((1+N)/(1+df)) + 1).
inline TopicModel build_vocabulary(const std::vector<std::vector<std::string>>& corpus) {
  std::map<std::string, std::size_t> df;
  for (const auto& doc : corpus) {
    std::vector<std::string> uniq(doc.begin(), doc.end());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (const auto& t : uniq) ++df[t];
  }
  TopicModel m;
  const double n = static_cast<double>(corpus.size());
  for (const auto& [token, count] : df) {
    m.vocabulary.push_back(token);
    m.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return m;
}

// Factorizes the TF-IDF matrix X ≈ W·H with Lee-Seung multiplicative updates on the
// Frobenius objective. Stops after max_iter or when the relative objective change < tol.
inline NmfFit fit_nmf(const std::vector<std::vector<std::string>>& corpus, int k, std::uint64_t seed,
                      NmfOptions opts = {}) {
  if (k <= 0) throw ParameterError("topic count must be positive");
  if (static_cast<std::size_t>(k) > corpus.size())
    throw ParameterError("topic count exceeds document count");
  const auto non_empty = static_cast<std::size_t>(
      std::count_if(corpus.begin(), corpus.end(), [](const auto& d) { return !d.empty(); }));
  if (non_empty < static_cast<std::size_t>(k))
    throw ParameterError("fewer non-empty documents than topics");

  NmfFit fit;
  fit.model = build_vocabulary(corpus);
  fit.model.k = k;
  const std::size_t docs = corpus.size();
  const std::size_t terms = fit.model.vocabulary.size();
  const auto kk = static_cast<std::size_t>(k);

  Matrix x(docs, terms);
  for (std::size_t i = 0; i < docs; ++i) {
    const auto row = fit.model.tfidf(corpus[i]);
    std::copy(row.begin(), row.end(), x.row(i).begin());
  }

  double mean = 0.0;
  for (double v : x.data()) mean += v;
  mean /= static_cast<double>(x.data().size());
  const double scale = std::sqrt(mean / static_cast<double>(k));
  Rng rng(seed);
  Matrix w(docs, kk), h(kk, terms);
  for (double& v : w.data()) v = scale * rng.uniform(0.01, 1.0);
  for (double& v : h.data()) v = scale * rng.uniform(0.01, 1.0);

  fit.objective.push_back(detail::nmf_objective(x, w, h));
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    {
      const Matrix wt = w.transposed();
      const Matrix num = wt * x;
      const Matrix den = (wt * w) * h;
      for (std::size_t i = 0; i < h.data().size(); ++i)
        h.data()[i] *= num.data()[i] / (den.data()[i] + detail::kNmfEps);
    }
    {
      const Matrix ht = h.transposed();
      const Matrix num = x * ht;
      const Matrix den = w * (h * ht);
      for (std::size_t i = 0; i < w.data().size(); ++i)
        w.data()[i] *= num.data()[i] / (den.data()[i] + detail::kNmfEps);
    }
    fit.iterations = iter + 1;
    const double prev = fit.objective.back();
    const double cur = detail::nmf_objective(x, w, h);
    fit.objective.push_back(cur);
    if (prev <= 0.0 || std::abs(prev - cur) / prev < opts.tol) break;
  }
  fit.model.topic_term = std::move(h);
  fit.doc_topic = std::move(w);
  return fit;
}

struct TopicAssignment {
  int topic_id = 0;
  std::vector<double> correlations;  // length k
};

// Projects one description onto the topic basis (50 multiplicative updates from a
// uniform start) and reports the strongest topic, lowest index on ties.
inline TopicAssignment assign_topic(const std::vector<std::string>& tokens, const TopicModel& model) {
  const auto kk = static_cast<std::size_t>(model.k);
  TopicAssignment out{model.empty_topic_id(), std::vector<double>(kk, 0.0)};
  const std::vector<double> x = model.tfidf(tokens);
  if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; })) return out;

  const Matrix& h = model.topic_term;
  std::vector<double> hx(kk, 0.0);
  for (std::size_t t = 0; t < kk; ++t) hx[t] = dot(h.row(t), x);
  Matrix hht(kk, kk);
  for (std::size_t a = 0; a < kk; ++a)
    for (std::size_t b = 0; b < kk; ++b) hht(a, b) = dot(h.row(a), h.row(b));

  std::vector<double> w(kk, 1.0 / static_cast<double>(kk));
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<double> den(kk, 0.0);
    for (std::size_t a = 0; a < kk; ++a)
      for (std::size_t b = 0; b < kk; ++b) den[a] += hht(a, b) * w[b];
    for (std::size_t a = 0; a < kk; ++a) w[a] *= hx[a] / (den[a] + detail::kNmfEps);
  }
  out.correlations = w;
  out.topic_id = static_cast<int>(std::max_element(w.begin(), w.end()) - w.begin());
  return out;
}

inline TopicAssignment assign_topic(std::string_view description, const TopicModel& model) {
  return assign_topic(tokenize(description), model);
}

struct Keyword {
  std::string token;
  double weight;
};

// Top-n tokens per topic by weight, descending; equal weights in alphabetical order.
inline std::vector<std::vector<Keyword>> top_keywords(const TopicModel& model, std::size_t n) {
  if (n < 1) throw ParameterError("keyword count must be at least 1");
  std::vector<std::vector<Keyword>> out;
  for (std::size_t t = 0; t < static_cast<std::size_t>(model.k); ++t) {
    std::vector<std::size_t> idx(model.vocabulary.size());
    std::iota(idx.begin(), idx.end(), 0);
    const auto row = model.topic_term.row(t);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
    std::vector<Keyword> words;
    for (std::size_t r = 0; r < std::min(n, idx.size()); ++r)
      words.push_back({model.vocabulary[idx[r]], row[idx[r]]});
    out.push_back(std::move(words));
  }
  return out;
}

inline nlohmann::json to_json(const TopicModel& m) {
  nlohmann::json topics = nlohmann::json::array();
  for (std::size_t t = 0; t < m.topic_term.rows(); ++t) {
    const auto row = m.topic_term.row(t);
    topics.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"k", m.k}, {"vocabulary", m.vocabulary}, {"idf", m.idf}, {"topic_term", topics}};
}

inline TopicModel topic_model_from_json(const nlohmann::json& j) {
  TopicModel m;
  m.k = j.at("k").get<int>();
  m.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  m.idf = j.at("idf").get<std::vector<double>>();
  m.topic_term = Matrix::from_rows(j.at("topic_term").get<std::vector<std::vector<double>>>());
  if (m.topic_term.rows() != static_cast<std::size_t>(m.k) || m.idf.size() != m.vocabulary.size())
    throw DataError("inconsistent topic model snapshot");
  return m;
}

}  // namespace vulngraph
