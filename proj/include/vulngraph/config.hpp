#pragma once

#include <charconv>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vulngraph/error.hpp"
#include "vulngraph/pipeline.hpp"

namespace vulngraph {

// Run settings shared by every command. Values are kept as validated text so that the
// config file and command-line flags go through one code path.
struct RunConfig {
  std::string store_dir = "store";
  std::uint64_t seed = 42;
  int feature_set = 1;
  std::vector<int> feature_sets = {1, 2, 3, 4, 5, 6, 7};
  int topic_count = 10;
  TopicMode topic_mode = TopicMode::argmax;
  int pca_dims = 0;  // 0 = full
  CategoricalEncoding encoding = CategoricalEncoding::ordinal;
  ClusterAlgo cluster_algo = ClusterAlgo::kmeans;
  int k = 6;
  double eps = 0.5;
  int min_pts = 5;
  int epochs = 50;
  double lr = 0.1;
  double threshold = 0.9;
  int depth = 2;
  int window_days = 45;
  MachineTag machine_tag = MachineTag::vulnerable;

  static const std::vector<std::string>& keys() {
    static const std::vector<std::string> k = {
        "seed",    "feature_set", "feature_sets", "topic_count", "topic_mode", "pca_dims",  "encoding",
        "cluster_algo", "k",      "eps",          "min_pts",     "epochs",     "lr",        "threshold",
        "depth",   "window_days", "machine_tag"};
    return k;
  }

  // Current value of a key in the same text form `set` accepts.
  std::string get(const std::string& key) const {
    auto real = [](double v) {
      std::ostringstream os;
      os << v;
      return os.str();
    };
    if (key == "seed") return std::to_string(seed);
    if (key == "feature_set") return std::to_string(feature_set);
    if (key == "feature_sets") {
      std::string s;
      for (int id : feature_sets) s += (s.empty() ? "" : ",") + std::to_string(id);
      return s;
    }
    if (key == "topic_count") return std::to_string(topic_count);
    if (key == "topic_mode") return topic_mode == TopicMode::argmax ? "argmax" : "all_correlations";
    if (key == "pca_dims") return pca_dims == 0 ? "full" : std::to_string(pca_dims);
    if (key == "encoding") return encoding == CategoricalEncoding::ordinal ? "ordinal" : "one_hot";
    if (key == "cluster_algo") return cluster_algo == ClusterAlgo::kmeans ? "kmeans" : "dbscan";
    if (key == "k") return std::to_string(k);
    if (key == "eps") return real(eps);
    if (key == "min_pts") return std::to_string(min_pts);
    if (key == "epochs") return std::to_string(epochs);
    if (key == "lr") return real(lr);
    if (key == "threshold") return real(threshold);
    if (key == "depth") return std::to_string(depth);
    if (key == "window_days") return std::to_string(window_days);
    if (key == "machine_tag") return tag_name(machine_tag);
    throw ParameterError("unknown configuration key '" + key + "'");
  }

  void set(const std::string& key, const std::string& value) {
    auto integer = [&](long long lo, long long hi) {
      long long v = 0;
      const auto* end = value.data() + value.size();
      auto [p, ec] = std::from_chars(value.data(), end, v);
      if (ec != std::errc{} || p != end) throw ParameterError(key + ": '" + value + "' is not an integer");
      if (v < lo || v > hi)
        throw ParameterError(key + ": " + value + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return v;
    };
    auto real = [&](double lo, double hi, bool open_lo) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(value, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != value.size()) throw ParameterError(key + ": '" + value + "' is not a number");
      if ((open_lo ? v <= lo : v < lo) || v > hi) throw ParameterError(key + ": " + value + " out of range");
      return v;
    };
    auto choice = [&](std::initializer_list<const char*> options) {
      for (const char* o : options)
        if (value == o) return;
      std::string all;
      for (const char* o : options) all += std::string(all.empty() ? "" : "|") + o;
      throw ParameterError(key + ": '" + value + "' is not one of " + all);
    };

    if (key == "seed") {
      seed = static_cast<std::uint64_t>(integer(0, (1LL << 62)));
    } else if (key == "feature_set") {
      feature_set = static_cast<int>(integer(1, kFeatureSetCount));
    } else if (key == "feature_sets") {
      std::vector<int> ids;
      std::stringstream ss(value);
      for (std::string part; std::getline(ss, part, ',');) {
        part.erase(0, part.find_first_not_of(" \t"));
        part.erase(part.find_last_not_of(" \t") + 1);
        RunConfig probe;
        probe.set("feature_set", part);
        ids.push_back(probe.feature_set);
      }
      if (ids.empty()) throw ParameterError("feature_sets: empty list");
      feature_sets = ids;
    } else if (key == "topic_count") {
      topic_count = static_cast<int>(integer(1, 1000));
    } else if (key == "topic_mode") {
      choice({"argmax", "all_correlations"});
      topic_mode = value == "argmax" ? TopicMode::argmax : TopicMode::all_correlations;
    } else if (key == "pca_dims") {
      pca_dims = value == "full" ? 0 : static_cast<int>(integer(1, 10000));
    } else if (key == "encoding") {
      choice({"ordinal", "one_hot"});
      encoding = value == "ordinal" ? CategoricalEncoding::ordinal : CategoricalEncoding::one_hot;
    } else if (key == "cluster_algo") {
      choice({"kmeans", "dbscan"});
      cluster_algo = value == "kmeans" ? ClusterAlgo::kmeans : ClusterAlgo::dbscan;
    } else if (key == "k") {
      k = static_cast<int>(integer(1, 100000));
    } else if (key == "eps") {
      eps = real(0.0, 1e12, true);
    } else if (key == "min_pts") {
      min_pts = static_cast<int>(integer(1, 100000));
    } else if (key == "epochs") {
      epochs = static_cast<int>(integer(0, 100000));
    } else if (key == "lr") {
      lr = real(0.0, 1e6, true);
    } else if (key == "threshold") {
      threshold = real(0.0, 1.0, false);
    } else if (key == "depth") {
      depth = static_cast<int>(integer(1, 1000000));
    } else if (key == "window_days") {
      window_days = static_cast<int>(integer(0, 1000000));
    } else if (key == "machine_tag") {
      choice({"vulnerable", "debian"});
      machine_tag = *parse_tag(value);
    } else {
      throw ParameterError("unknown configuration key '" + key + "'");
    }
  }

  PipelineConfig pipeline() const {
    PipelineConfig p;
    p.seed = seed;
    p.topic_count = topic_count;
    p.topic_mode = topic_mode;
    p.pca_dims = pca_dims;
    p.encoding = encoding;
    p.cluster_algo = cluster_algo;
    p.k = k;
    p.eps = eps;
    p.min_pts = min_pts;
    p.epochs = epochs;
    p.lr = lr;
    p.depth = depth;
    p.window_days = window_days;
    p.machine_tag = machine_tag;
    p.feature_sets = feature_sets;
    return p;
  }
};

// Flat "key = value" text; '#' starts a comment.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string{};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParameterError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

inline void apply_config_text(RunConfig& cfg, const std::string& text) {
  for (const auto& [key, value] : parse_config_text(text)) cfg.set(key, value);
}

}  // namespace vulngraph
