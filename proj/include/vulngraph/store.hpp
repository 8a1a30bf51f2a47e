#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vulngraph/cve_feed.hpp"
#include "vulngraph/dpkg.hpp"
#include "vulngraph/error.hpp"
#include "vulngraph/graph.hpp"
#include "vulngraph/records.hpp"

namespace vulngraph {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Writes through a temporary sibling and renames it into place.
inline void write_file_atomic(const fs::path& p, const std::string& content) {
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp.string());
    os << content;
    if (!os) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, p, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

inline std::string to_jsonl(const std::vector<nlohmann::json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

inline std::vector<nlohmann::json> parse_jsonl(const std::string& text, const std::string& source) {
  std::vector<nlohmann::json> rows;
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    const std::string_view line(text.data() + start, end - start);
    if (!line.empty()) {
      try {
        rows.push_back(nlohmann::json::parse(line));
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(source + " line " + std::to_string(line_no) + ": " + e.what(), start + e.byte);
      }
    }
    start = end + 1;
  }
  return rows;
}

// Exclusive writer lock held as a file in the store directory.
class StoreLock {
 public:
  explicit StoreLock(const fs::path& dir) : path_(dir / ".lock") {
    std::error_code ec;
    fs::create_directories(dir, ec);
    FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) throw IoError("store is locked by another writer (" + path_.string() + ")");
    std::fclose(f);
  }
  ~StoreLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  StoreLock(const StoreLock&) = delete;
  StoreLock& operator=(const StoreLock&) = delete;

 private:
  fs::path path_;
};

// Directory of line-delimited JSON artifacts, one per pipeline stage.
class Store {
 public:
  explicit Store(fs::path root) : root_(std::move(root)) {}

  const fs::path& root() const noexcept { return root_; }
  fs::path cves_path() const { return root_ / "cves.jsonl"; }
  fs::path machines_path() const { return root_ / "machines.jsonl"; }
  fs::path split_path(std::uint64_t seed) const { return root_ / "splits" / (std::to_string(seed) + ".jsonl"); }
  fs::path config_path() const { return root_ / "config"; }
  fs::path model_dir() const { return root_ / "model"; }
  fs::path clustering_path() const { return model_dir() / "clustering.json"; }
  fs::path assignments_path() const { return model_dir() / "assignments.csv"; }
  fs::path nodes_path() const { return root_ / "graph" / "nodes.jsonl"; }
  fs::path edges_path() const { return root_ / "graph" / "edges.jsonl"; }
  fs::path report_dir(const std::string& preset) const { return root_ / "reports" / preset; }

  void write_cves(std::vector<CveRecord> records) const {
    std::sort(records.begin(), records.end(), [](const CveRecord& a, const CveRecord& b) { return a.id < b.id; });
    std::vector<nlohmann::json> rows;
    for (const auto& r : records) rows.push_back(to_json(r));
    write_file_atomic(cves_path(), to_jsonl(rows));
  }

  std::vector<CveRecord> read_cves() const {
    require(cves_path(), "ingest");
    std::vector<CveRecord> out;
    for (const auto& row : parse_jsonl(read_file(cves_path()), cves_path().string())) {
      try {
        out.push_back(cve_from_json(row));
      } catch (const DataError& e) {
        throw DataError(cves_path().string() + ": " + e.what());
      }
    }
    return out;
  }

  void write_machines(std::vector<MachineInventory> machines) const {
    std::sort(machines.begin(), machines.end(),
              [](const MachineInventory& a, const MachineInventory& b) { return a.machine_id < b.machine_id; });
    std::vector<nlohmann::json> rows;
    for (const auto& m : machines) rows.push_back(to_json(m));
    write_file_atomic(machines_path(), to_jsonl(rows));
  }

  std::vector<MachineInventory> read_machines() const {
    require(machines_path(), "ingest");
    std::vector<MachineInventory> out;
    for (const auto& row : parse_jsonl(read_file(machines_path()), machines_path().string())) {
      try {
        out.push_back(machine_from_json(row));
      } catch (const nlohmann::json::exception& e) {
        throw DataError(machines_path().string() + ": " + e.what());
      }
    }
    return out;
  }

  void write_split(std::uint64_t seed, const DatasetSplit& split) const {
    std::vector<nlohmann::json> rows;
    auto add = [&](const std::vector<CveRecord>& part, const char* name) {
      for (const auto& r : part) rows.push_back({{"id", r.id}, {"part", name}});
    };
    add(split.populate, "populate");
    add(split.train, "train");
    add(split.test, "test");
    write_file_atomic(split_path(seed), to_jsonl(rows));
  }

  DatasetSplit read_split(std::uint64_t seed, const std::vector<CveRecord>& records) const {
    require(split_path(seed), "split");
    std::map<std::string, const CveRecord*> by_id;
    for (const auto& r : records) by_id[r.id] = &r;
    DatasetSplit out;
    for (const auto& row : parse_jsonl(read_file(split_path(seed)), split_path(seed).string())) {
      const auto id = row.at("id").get<std::string>();
      const auto part = row.at("part").get<std::string>();
      auto it = by_id.find(id);
      if (it == by_id.end()) throw DataError("split references unknown CVE " + id + "; re-run split");
      if (part == "populate")
        out.populate.push_back(*it->second);
      else if (part == "train")
        out.train.push_back(*it->second);
      else if (part == "test")
        out.test.push_back(*it->second);
      else
        throw DataError("unknown split part '" + part + "'");
    }
    return out;
  }

  void write_graph(const CohesionGraph& g) const {
    std::vector<nlohmann::json> nodes, edges;
    for (const auto& [name, n] : g.nodes()) nodes.push_back(to_json(n));
    for (const auto& [key, e] : g.edges()) edges.push_back(to_json(e));
    write_file_atomic(nodes_path(), to_jsonl(nodes));
    write_file_atomic(edges_path(), to_jsonl(edges));
  }

  CohesionGraph read_graph() const {
    require(nodes_path(), "build-graph");
    require(edges_path(), "build-graph");
    CohesionGraph g;
    try {
      for (const auto& row : parse_jsonl(read_file(nodes_path()), nodes_path().string()))
        restore_node(g, node_from_json(row));
      for (const auto& row : parse_jsonl(read_file(edges_path()), edges_path().string()))
        restore_edge(g, edge_from_json(row));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("graph snapshot: " + std::string(e.what()));
    }
    return g;
  }

  void write_assignments(const std::map<std::string, int>& assignments) const {
    std::string out = "cve_id,cluster_id\n";
    for (const auto& [id, c] : assignments) out += id + "," + std::to_string(c) + "\n";
    write_file_atomic(assignments_path(), out);
  }

  std::map<std::string, int> read_assignments() const {
    require(assignments_path(), "cluster");
    std::map<std::string, int> out;
    std::istringstream is(read_file(assignments_path()));
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw DataError("malformed assignment line: " + line);
      out[line.substr(0, comma)] = std::stoi(line.substr(comma + 1));
    }
    return out;
  }

  void write_json(const fs::path& p, const nlohmann::json& j) const { write_file_atomic(p, j.dump(1) + "\n"); }

  nlohmann::json read_json(const fs::path& p, const std::string& producer) const {
    require(p, producer);
    try {
      return nlohmann::json::parse(read_file(p));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(p.string() + ": " + e.what(), e.byte);
    }
  }

 private:
  static void require(const fs::path& p, const std::string& producer) {
    if (!fs::exists(p)) throw StageError(p.string() + " is missing; run '" + producer + "' first", producer);
  }

  fs::path root_;
};

}  // namespace vulngraph
