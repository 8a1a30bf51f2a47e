#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulngraph/error.hpp"
#include "vulngraph/records.hpp"
#include "vulngraph/topic_model.hpp"

namespace vulngraph {

// Categorical CVE fields that can be selected for clustering.
inline const std::vector<std::string>& cvss2_field_names() {
  static const std::vector<std::string> names = {
      "access_vector",  "access_complexity",      "authentication",   "severity",
      "user_interaction_required", "confidentiality_impact", "integrity_impact", "availability_impact"};
  return names;
}

inline const std::vector<std::string>& cvss3_field_names() {
  static const std::vector<std::string> names = {"attack_vector", "attack_complexity"};
  return names;
}

// Value of a qualified field ("cvss2.severity", "cvss3.attack_vector", "cwe");
// empty string when absent.
inline std::string field_value(const CveRecord& r, const std::string& qualified) {
  if (qualified == "cwe") return r.cwe.value_or("");
  if (qualified.rfind("cvss3.", 0) == 0) {
    if (!r.cvss3) return {};
    const std::string f = qualified.substr(6);
    if (f == "attack_vector") return r.cvss3->attack_vector;
    if (f == "attack_complexity") return r.cvss3->attack_complexity;
  } else if (qualified.rfind("cvss2.", 0) == 0) {
    const std::string f = qualified.substr(6);
    const Cvss2Fields& c = r.cvss2;
    if (f == "access_vector") return c.access_vector;
    if (f == "access_complexity") return c.access_complexity;
    if (f == "authentication") return c.authentication;
    if (f == "severity") return c.severity;
    if (f == "user_interaction_required") return c.user_interaction_required;
    if (f == "confidentiality_impact") return c.confidentiality_impact;
    if (f == "integrity_impact") return c.integrity_impact;
    if (f == "availability_impact") return c.availability_impact;
  }
  throw ParameterError("unknown feature field '" + qualified + "'");
}

struct FeatureSetSpec {
  int id = 1;
  std::vector<std::string> cvss2_fields;
  std::vector<std::string> cvss3_fields;
  bool include_cwe = false;
  bool use_topic_model = true;

  // Qualified names in vector order (topic features are appended separately).
  std::vector<std::string> qualified_fields() const {
    std::vector<std::string> out;
    for (const auto& f : cvss2_fields) out.push_back("cvss2." + f);
    for (const auto& f : cvss3_fields) out.push_back("cvss3." + f);
    if (include_cwe) out.push_back("cwe");
    return out;
  }

  void validate() const {
    auto known = [](const std::vector<std::string>& names, const std::string& f) {
      return std::find(names.begin(), names.end(), f) != names.end();
    };
    for (const auto& f : cvss2_fields)
      if (!known(cvss2_field_names(), f)) throw ParameterError("unknown cvss2 field '" + f + "'");
    for (const auto& f : cvss3_fields)
      if (!known(cvss3_field_names(), f)) throw ParameterError("unknown cvss3 field '" + f + "'");
    if (cvss2_fields.empty() && cvss3_fields.empty() && !include_cwe && !use_topic_model)
      throw ParameterError("feature set selects no field");
  }
};

inline constexpr int kFeatureSetCount = 7;

// The seven clustering feature sets.
inline FeatureSetSpec feature_set_preset(int id) {
  const std::vector<std::string> base = {"access_complexity", "access_vector", "severity",
                                         "user_interaction_required", "authentication"};
  std::vector<std::string> impacts = base;
  impacts.insert(impacts.end(), {"integrity_impact", "confidentiality_impact", "availability_impact"});
  const std::vector<std::string> reduced = {"access_vector", "user_interaction_required", "authentication"};
  const std::vector<std::string> v3 = {"attack_vector", "attack_complexity"};
  switch (id) {
    case 1: return {1, base, {}, false, true};
    case 2: return {2, reduced, v3, false, true};
    case 3: return {3, base, {}, true, true};
    case 4: return {4, impacts, {}, false, true};
    case 5: return {5, base, {}, true, false};
    case 6: return {6, impacts, {}, false, false};
    case 7: return {7, reduced, v3, false, false};
    default: throw ParameterError("feature set id must be in 1..7");
  }
}

enum class TopicMode { argmax, all_correlations };
enum class CategoricalEncoding { ordinal, one_hot };

// Sorted category values per qualified field. The empty string stands for "absent"
// and therefore sorts first.
class CategoricalCodebook {
 public:
  static CategoricalCodebook fit(const std::vector<CveRecord>& corpus) {
    CategoricalCodebook book;
    std::vector<std::string> fields;
    for (const auto& f : cvss2_field_names()) fields.push_back("cvss2." + f);
    for (const auto& f : cvss3_field_names()) fields.push_back("cvss3." + f);
    fields.push_back("cwe");
    for (const auto& f : fields) {
      std::set<std::string> values;
      for (const auto& r : corpus) values.insert(field_value(r, f));
      book.categories_[f] = {values.begin(), values.end()};
    }
    return book;
  }

  const std::vector<std::string>& categories(const std::string& field) const {
    auto it = categories_.find(field);
    if (it == categories_.end()) throw ParameterError("codebook has no field '" + field + "'");
    return it->second;
  }

  // Ordinal position; unknown values map to the absent code (position 0).
  std::size_t ordinal(const std::string& field, const std::string& value, Diagnostics* diag) const {
    const auto& cats = categories(field);
    auto it = std::lower_bound(cats.begin(), cats.end(), value);
    if (it != cats.end() && *it == value) return static_cast<std::size_t>(it - cats.begin());
    if (diag) diag->warn("unknown category '" + value + "' for " + field + "; encoded as absent");
    return 0;
  }

  // ordinal / (category_count - 1); a single-category field encodes as 0.
  double encode(const std::string& field, const std::string& value, Diagnostics* diag = nullptr) const {
    const auto n = categories(field).size();
    if (n <= 1) return 0.0;
    return static_cast<double>(ordinal(field, value, diag)) / static_cast<double>(n - 1);
  }

  nlohmann::json to_json() const { return categories_; }

  static CategoricalCodebook from_json(const nlohmann::json& j) {
    CategoricalCodebook book;
    book.categories_ = j.get<std::map<std::string, std::vector<std::string>>>();
    return book;
  }

 private:
  std::map<std::string, std::vector<std::string>> categories_;
};

struct FeatureVector {
  std::string cve_id;
  Date published;  // metadata only, never a clustering dimension
  std::vector<double> values;
  std::vector<std::string> feature_names;
};

// Everything fitted that encode_features needs besides the record and the feature set.
struct FeatureEncoder {
  CategoricalCodebook codebook;
  std::optional<TopicModel> topics;
  TopicMode topic_mode = TopicMode::argmax;
  CategoricalEncoding encoding = CategoricalEncoding::ordinal;
};

inline FeatureVector encode_features(const CveRecord& record, const FeatureSetSpec& spec,
                                     const FeatureEncoder& encoder, Diagnostics* diag = nullptr) {
  FeatureVector fv{record.id, record.published, {}, {}};
  for (const auto& field : spec.qualified_fields()) {
    const std::string value = field_value(record, field);
    if (encoder.encoding == CategoricalEncoding::ordinal) {
      fv.values.push_back(encoder.codebook.encode(field, value, diag));
      fv.feature_names.push_back(field);
    } else {
      const auto& cats = encoder.codebook.categories(field);
      const std::size_t hot = encoder.codebook.ordinal(field, value, diag);
      for (std::size_t c = 0; c < cats.size(); ++c) {
        fv.values.push_back(c == hot ? 1.0 : 0.0);
        fv.feature_names.push_back(field + "=" + (cats[c].empty() ? "absent" : cats[c]));
      }
    }
  }
  if (spec.use_topic_model) {
    if (!encoder.topics) throw ParameterError("feature set uses the topic model but none is fitted");
    const TopicModel& tm = *encoder.topics;
    const TopicAssignment ta = assign_topic(record.description, tm);
    if (encoder.topic_mode == TopicMode::argmax) {
      fv.values.push_back(static_cast<double>(ta.topic_id) / static_cast<double>(tm.k));
      fv.feature_names.push_back("topic");
    } else {
      for (int t = 0; t < tm.k; ++t) {
        fv.values.push_back(ta.correlations[static_cast<std::size_t>(t)]);
        fv.feature_names.push_back("topic_" + std::to_string(t));
      }
    }
  }
  return fv;
}

inline Matrix feature_matrix(const std::vector<FeatureVector>& vectors) {
  if (vectors.empty()) return {};
  Matrix m(vectors.size(), vectors.front().values.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].values.size() != m.cols()) throw DataError("feature vectors differ in length");
    std::copy(vectors[i].values.begin(), vectors[i].values.end(), m.row(i).begin());
  }
  return m;
}

// CSV: cve_id followed by one column per feature name.
inline void write_feature_csv(std::ostream& os, const std::vector<FeatureVector>& vectors) {
  os << "cve_id";
  if (!vectors.empty())
    for (const auto& n : vectors.front().feature_names) os << ',' << n;
  os << '\n';
  char buf[32];
  for (const auto& v : vectors) {
    os << v.cve_id;
    for (double x : v.values) {
      std::snprintf(buf, sizeof buf, "%.10g", x);
      os << ',' << buf;
    }
    os << '\n';
  }
}

// CSV: topic_id, rank, token, weight.
inline void write_keyword_csv(std::ostream& os, const std::vector<std::vector<Keyword>>& keywords) {
  os << "topic_id,rank,token,weight\n";
  char buf[32];
  for (std::size_t t = 0; t < keywords.size(); ++t)
    for (std::size_t r = 0; r < keywords[t].size(); ++r) {
      std::snprintf(buf, sizeof buf, "%.10g", keywords[t][r].weight);
      os << t << ',' << r + 1 << ',' << keywords[t][r].token << ',' << buf << '\n';
    }
}

}  // namespace vulngraph
