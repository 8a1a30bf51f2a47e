#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <vector>

#include "vulngraph/date.hpp"

namespace vulngraph {

inline std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct LibraryRef {
  std::string name;  // always lowercase
  std::string version;
  std::string description;  // only populated for machine inventories

  friend bool operator==(const LibraryRef& a, const LibraryRef& b) {
    return a.name == b.name && a.version == b.version;
  }
};

// CVSS v2 categorical vector. An empty string means the field was not reported.
struct Cvss2Fields {
  std::string access_vector;
  std::string access_complexity;
  std::string authentication;
  std::string severity;
  std::string user_interaction_required;
  std::string confidentiality_impact;
  std::string integrity_impact;
  std::string availability_impact;

  friend bool operator==(const Cvss2Fields&, const Cvss2Fields&) = default;
};

struct Cvss3Fields {
  std::string attack_vector;
  std::string attack_complexity;

  friend bool operator==(const Cvss3Fields&, const Cvss3Fields&) = default;
};

struct CveRecord {
  std::string id;
  Date published;
  std::string description;
  std::vector<LibraryRef> affected;
  Cvss2Fields cvss2;
  std::optional<Cvss3Fields> cvss3;
  std::optional<std::string> cwe;

  friend bool operator==(const CveRecord&, const CveRecord&) = default;
};

enum class MachineTag { vulnerable, debian };

inline const char* tag_name(MachineTag tag) {
  return tag == MachineTag::vulnerable ? "vulnerable" : "debian";
}

inline std::optional<MachineTag> parse_tag(const std::string& s) {
  if (s == "vulnerable") return MachineTag::vulnerable;
  if (s == "debian") return MachineTag::debian;
  return std::nullopt;
}

struct MachineInventory {
  std::string machine_id;
  MachineTag tag = MachineTag::vulnerable;
  std::vector<LibraryRef> installed;
};

struct DatasetSplit {
  std::vector<CveRecord> populate;
  std::vector<CveRecord> train;
  std::vector<CveRecord> test;
};

// Chronological order with id as tiebreak.
inline bool published_before(const CveRecord& a, const CveRecord& b) {
  if (a.published != b.published) return a.published < b.published;
  return a.id < b.id;
}

}  // namespace vulngraph
