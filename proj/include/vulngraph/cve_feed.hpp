#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulngraph/error.hpp"
#include "vulngraph/records.hpp"

namespace vulngraph {

using nlohmann::json;

namespace detail {

inline std::string string_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw DataError(std::string("field '") + key + "' is not a string");
  return it->get<std::string>();
}

}  // namespace detail

// Store/feed object for one record. Absent optional blocks are omitted.
inline json to_json(const CveRecord& r) {
  json affected = json::array();
  for (const auto& lib : r.affected) affected.push_back({{"name", lib.name}, {"version", lib.version}});
  json j = {
      {"id", r.id},
      {"published", r.published.iso()},
      {"description", r.description},
      {"affected", std::move(affected)},
      {"cvss2",
       {{"access_vector", r.cvss2.access_vector},
        {"access_complexity", r.cvss2.access_complexity},
        {"authentication", r.cvss2.authentication},
        {"severity", r.cvss2.severity},
        {"user_interaction_required", r.cvss2.user_interaction_required},
        {"confidentiality_impact", r.cvss2.confidentiality_impact},
        {"integrity_impact", r.cvss2.integrity_impact},
        {"availability_impact", r.cvss2.availability_impact}}},
  };
  if (r.cvss3)
    j["cvss3"] = {{"attack_vector", r.cvss3->attack_vector},
                  {"attack_complexity", r.cvss3->attack_complexity}};
  if (r.cwe) j["cwe"] = *r.cwe;
  return j;
}

// Throws DataError when the entry is malformed.
inline CveRecord cve_from_json(const json& j) {
  using detail::string_field;
  if (!j.is_object()) throw DataError("entry is not an object");
  CveRecord r;
  r.id = string_field(j, "id");
  if (r.id.empty()) throw DataError("entry has no id");
  const std::string published = string_field(j, "published");
  if (published.empty()) throw DataError(r.id + ": missing published");
  try {
    r.published = Date::parse(published);
  } catch (const ParameterError& e) {
    throw DataError(r.id + ": " + e.what());
  }
  r.description = string_field(j, "description");

  if (auto it = j.find("affected"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw DataError(r.id + ": affected is not an array");
    for (const auto& lib : *it) {
      if (!lib.is_object()) throw DataError(r.id + ": affected entry is not an object");
      LibraryRef ref{to_lower(string_field(lib, "name")), string_field(lib, "version"), {}};
      if (ref.name.empty()) throw DataError(r.id + ": affected library without name");
      r.affected.push_back(std::move(ref));
    }
  }
  if (auto it = j.find("cvss2"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw DataError(r.id + ": cvss2 is not an object");
    const json& c = *it;
    r.cvss2.access_vector = string_field(c, "access_vector");
    r.cvss2.access_complexity = string_field(c, "access_complexity");
    r.cvss2.authentication = string_field(c, "authentication");
    r.cvss2.severity = string_field(c, "severity");
    r.cvss2.user_interaction_required = string_field(c, "user_interaction_required");
    r.cvss2.confidentiality_impact = string_field(c, "confidentiality_impact");
    r.cvss2.integrity_impact = string_field(c, "integrity_impact");
    r.cvss2.availability_impact = string_field(c, "availability_impact");
  }
  if (auto it = j.find("cvss3"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) throw DataError(r.id + ": cvss3 is not an object");
    r.cvss3 = Cvss3Fields{string_field(*it, "attack_vector"), string_field(*it, "attack_complexity")};
  }
  if (std::string cwe = string_field(j, "cwe"); !cwe.empty()) r.cwe = std::move(cwe);
  return r;
}

namespace detail {

inline json parse_json_bytes(std::string_view bytes) {
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("unreadable feed: ") + e.what(), e.byte);
  }
}

// Keeps first-seen order; a later entry with the same id replaces the earlier one.
inline void insert_last_wins(std::vector<CveRecord>& out, std::map<std::string, std::size_t>& index,
                             CveRecord rec, Diagnostics* diag) {
  if (auto it = index.find(rec.id); it != index.end()) {
    if (diag) diag->warn("duplicate id " + rec.id + ": keeping the later entry");
    out[it->second] = std::move(rec);
    return;
  }
  index.emplace(rec.id, out.size());
  out.push_back(std::move(rec));
}

}  // namespace detail

// Parses the simplified feed: a top-level array of entry objects.
inline std::vector<CveRecord> parse_cve_feed(std::string_view bytes, Diagnostics* diag = nullptr) {
  const json doc = detail::parse_json_bytes(bytes);
  if (!doc.is_array()) throw ParseError("feed must be a top-level array", 0);
  std::vector<CveRecord> out;
  std::map<std::string, std::size_t> index;
  for (const auto& entry : doc) {
    try {
      detail::insert_last_wins(out, index, cve_from_json(entry), diag);
    } catch (const DataError& e) {
      if (diag) {
        ++diag->skipped;
        diag->warn(std::string("skipped entry: ") + e.what());
      }
    }
  }
  return out;
}

namespace detail {

inline void collect_cpe_matches(const json& node, std::vector<LibraryRef>& out) {
  if (auto it = node.find("cpe_match"); it != node.end() && it->is_array()) {
    for (const auto& m : *it) {
      if (m.contains("vulnerable") && m["vulnerable"].is_boolean() && !m["vulnerable"].get<bool>())
        continue;
      const std::string uri = string_field(m, "cpe23Uri");
      // cpe:2.3:part:vendor:product:version:...
      std::vector<std::string> parts;
      std::stringstream ss(uri);
      for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
      if (parts.size() < 6) continue;
      const std::string& version = parts[5];
      if (version == "*" || version == "-" || version.empty()) continue;
      LibraryRef ref{to_lower(parts[4]), version, {}};
      if (std::find(out.begin(), out.end(), ref) == out.end()) out.push_back(std::move(ref));
    }
  }
  if (auto it = node.find("children"); it != node.end() && it->is_array())
    for (const auto& child : *it) collect_cpe_matches(child, out);
}

inline std::string categorical_token(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) return {};
  if (it->is_boolean()) return it->get<bool>() ? "TRUE" : "FALSE";
  if (it->is_string()) return it->get<std::string>();
  return {};
}

}  // namespace detail

// Maps an NVD JSON 1.1 feed ({"CVE_Items": [...]}) onto CveRecord.
// Only exact-version CPE matches are kept; ranges have no exact version to match.
inline std::vector<CveRecord> parse_nvd_feed(std::string_view bytes, Diagnostics* diag = nullptr) {
  const json doc = detail::parse_json_bytes(bytes);
  if (!doc.is_object() || !doc.contains("CVE_Items") || !doc["CVE_Items"].is_array())
    throw ParseError("NVD feed must be an object with a CVE_Items array", 0);
  std::vector<CveRecord> out;
  std::map<std::string, std::size_t> index;
  for (const auto& item : doc["CVE_Items"]) {
    try {
      CveRecord r;
      const json& cve = item.at("cve");
      r.id = cve.at("CVE_data_meta").at("ID").get<std::string>();
      r.published = Date::parse(item.at("publishedDate").get<std::string>());
      if (auto d = cve.find("description"); d != cve.end()) {
        for (const auto& dd : d->value("description_data", json::array())) {
          if (dd.value("lang", "en") == "en") {
            r.description = dd.value("value", "");
            break;
          }
        }
      }
      if (auto p = cve.find("problemtype"); p != cve.end()) {
        for (const auto& pd : p->value("problemtype_data", json::array()))
          for (const auto& desc : pd.value("description", json::array())) {
            const std::string v = desc.value("value", "");
            if (v.rfind("CWE-", 0) == 0 && !r.cwe) r.cwe = v;
          }
      }
      if (auto c = item.find("configurations"); c != item.end())
        for (const auto& node : c->value("nodes", json::array()))
          detail::collect_cpe_matches(node, r.affected);
      if (auto imp = item.find("impact"); imp != item.end()) {
        if (auto v2 = imp->find("baseMetricV2"); v2 != imp->end()) {
          const json& cv = v2->value("cvssV2", json::object());
          r.cvss2.access_vector = detail::categorical_token(cv, "accessVector");
          r.cvss2.access_complexity = detail::categorical_token(cv, "accessComplexity");
          r.cvss2.authentication = detail::categorical_token(cv, "authentication");
          r.cvss2.confidentiality_impact = detail::categorical_token(cv, "confidentialityImpact");
          r.cvss2.integrity_impact = detail::categorical_token(cv, "integrityImpact");
          r.cvss2.availability_impact = detail::categorical_token(cv, "availabilityImpact");
          r.cvss2.severity = detail::categorical_token(*v2, "severity");
          r.cvss2.user_interaction_required = detail::categorical_token(*v2, "userInteractionRequired");
        }
        if (auto v3 = imp->find("baseMetricV3"); v3 != imp->end()) {
          const json& cv = v3->value("cvssV3", json::object());
          r.cvss3 = Cvss3Fields{detail::categorical_token(cv, "attackVector"),
                                detail::categorical_token(cv, "attackComplexity")};
        }
      }
      detail::insert_last_wins(out, index, std::move(r), diag);
    } catch (const std::exception& e) {
      if (diag) {
        ++diag->skipped;
        diag->warn(std::string("skipped NVD item: ") + e.what());
      }
    }
  }
  return out;
}

// Dispatches on the document shape: array → simplified feed, CVE_Items object → NVD 1.1.
inline std::vector<CveRecord> parse_any_feed(std::string_view bytes, Diagnostics* diag = nullptr) {
  std::size_t i = 0;
  while (i < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[i]))) ++i;
  if (i < bytes.size() && bytes[i] == '{') return parse_nvd_feed(bytes, diag);
  return parse_cve_feed(bytes, diag);
}

// Merges several sources by id. Fields present in a later source overwrite earlier
// ones; the newest published date is retained. Output is sorted by id.
inline std::vector<CveRecord> merge_sources(const std::vector<std::vector<CveRecord>>& sources) {
  std::map<std::string, CveRecord> merged;
  for (const auto& source : sources) {
    for (const auto& rec : source) {
      auto [it, inserted] = merged.try_emplace(rec.id, rec);
      if (inserted) continue;
      CveRecord& cur = it->second;
      cur.published = std::max(cur.published, rec.published);
      if (!rec.description.empty()) cur.description = rec.description;
      if (!rec.affected.empty()) cur.affected = rec.affected;
      auto overwrite = [](std::string& dst, const std::string& src) {
        if (!src.empty()) dst = src;
      };
      overwrite(cur.cvss2.access_vector, rec.cvss2.access_vector);
      overwrite(cur.cvss2.access_complexity, rec.cvss2.access_complexity);
      overwrite(cur.cvss2.authentication, rec.cvss2.authentication);
      overwrite(cur.cvss2.severity, rec.cvss2.severity);
      overwrite(cur.cvss2.user_interaction_required, rec.cvss2.user_interaction_required);
      overwrite(cur.cvss2.confidentiality_impact, rec.cvss2.confidentiality_impact);
      overwrite(cur.cvss2.integrity_impact, rec.cvss2.integrity_impact);
      overwrite(cur.cvss2.availability_impact, rec.cvss2.availability_impact);
      if (rec.cvss3) cur.cvss3 = rec.cvss3;
      if (rec.cwe) cur.cwe = rec.cwe;
    }
  }
  std::vector<CveRecord> out;
  out.reserve(merged.size());
  for (auto& [id, rec] : merged) out.push_back(std::move(rec));
  return out;
}

}  // namespace vulngraph
