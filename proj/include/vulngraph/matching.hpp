#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "vulngraph/records.hpp"

namespace vulngraph {

// name → version → ids of CVEs whose affected list holds that exact pair.
class CveIndex {
 public:
  CveIndex() = default;

  explicit CveIndex(const std::vector<CveRecord>& records) {
    for (const auto& r : records) add(r);
  }

  void add(const CveRecord& record) {
    for (const auto& lib : record.affected) index_[lib.name][lib.version].insert(record.id);
  }

  // nullptr when the pair is unknown.
  const std::set<std::string>* find(const LibraryRef& lib) const {
    auto by_name = index_.find(lib.name);
    if (by_name == index_.end()) return nullptr;
    auto by_version = by_name->second.find(lib.version);
    return by_version == by_name->second.end() ? nullptr : &by_version->second;
  }

 private:
  std::map<std::string, std::map<std::string, std::set<std::string>>> index_;
};

struct VulnerableMatch {
  LibraryRef library;
  std::vector<std::string> cve_ids;  // sorted
};

// Exact (name, version) equality; version ranges are not interpreted.
inline std::vector<VulnerableMatch> match_vulnerable(const MachineInventory& inventory,
                                                     const CveIndex& index) {
  std::vector<VulnerableMatch> out;
  for (const auto& lib : inventory.installed) {
    if (const auto* ids = index.find(lib))
      out.push_back(VulnerableMatch{lib, std::vector<std::string>(ids->begin(), ids->end())});
  }
  return out;
}

// Distinct vulnerable library names of one machine, sorted.
inline std::vector<std::string> vulnerable_names(const MachineInventory& inventory, const CveIndex& index) {
  std::set<std::string> names;
  for (const auto& m : match_vulnerable(inventory, index)) names.insert(m.library.name);
  return {names.begin(), names.end()};
}

}  // namespace vulngraph
