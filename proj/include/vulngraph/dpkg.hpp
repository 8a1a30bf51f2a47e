#pragma once

#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "vulngraph/error.hpp"
#include "vulngraph/records.hpp"

namespace vulngraph {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// The last word of the Status line is the package state; "not-installed" is not installed.
inline bool status_installed(std::string_view status) {
  status = trim(status);
  const auto pos = status.find_last_of(" \t");
  const std::string_view state = pos == std::string_view::npos ? status : status.substr(pos + 1);
  return state == "installed";
}

}  // namespace detail

// Reads a dpkg status database (/var/lib/dpkg/status layout).
inline MachineInventory parse_dpkg_status(std::string_view text, std::string machine_id, MachineTag tag,
                                          Diagnostics* diag = nullptr) {
  MachineInventory inv{std::move(machine_id), tag, {}};

  struct Stanza {
    std::string package, version, status, description;
    bool has_status = false;
    bool any = false;
  } cur;
  std::string* last_value = nullptr;
  std::size_t stanza_no = 0;

  auto flush = [&] {
    if (!cur.any) return;
    ++stanza_no;
    if (cur.package.empty() || cur.version.empty()) {
      if (diag) {
        ++diag->skipped;
        diag->warn("stanza " + std::to_string(stanza_no) + " in " + inv.machine_id +
                   ": missing Package or Version");
      }
    } else if (cur.has_status && detail::status_installed(cur.status)) {
      inv.installed.push_back(LibraryRef{to_lower(cur.package), cur.version, cur.description});
    }
    cur = Stanza{};
    last_value = nullptr;
  };

  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    start = end + 1;

    if (detail::trim(line).empty()) {
      flush();
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == ' ' || line.front() == '\t') {
      // continuation of a multi-line field
      if (last_value == &cur.description) {
        cur.description += '\n';
        cur.description += std::string(detail::trim(line));
      }
      if (end == text.size()) break;
      continue;
    }
    cur.any = true;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      if (diag) diag->warn("ignoring malformed line in " + inv.machine_id + ": " + std::string(line));
      last_value = nullptr;
    } else {
      const std::string_view key = line.substr(0, colon);
      const std::string value(detail::trim(line.substr(colon + 1)));
      last_value = nullptr;
      if (key == "Package") {
        cur.package = value;
      } else if (key == "Version") {
        cur.version = value;
      } else if (key == "Status") {
        cur.status = value;
        cur.has_status = true;
      } else if (key == "Description") {
        cur.description = value;
        last_value = &cur.description;
      }
    }
    if (end == text.size()) break;
  }
  flush();
  return inv;
}

inline nlohmann::json to_json(const MachineInventory& m) {
  nlohmann::json installed = nlohmann::json::array();
  for (const auto& lib : m.installed) {
    nlohmann::json j = {{"name", lib.name}, {"version", lib.version}};
    if (!lib.description.empty()) j["description"] = lib.description;
    installed.push_back(std::move(j));
  }
  return {{"machine_id", m.machine_id}, {"tag", tag_name(m.tag)}, {"installed", std::move(installed)}};
}

inline MachineInventory machine_from_json(const nlohmann::json& j) {
  MachineInventory m;
  m.machine_id = j.at("machine_id").get<std::string>();
  const auto tag = parse_tag(j.at("tag").get<std::string>());
  if (!tag) throw DataError(m.machine_id + ": unknown tag '" + j.at("tag").get<std::string>() + "'");
  m.tag = *tag;
  for (const auto& lib : j.at("installed"))
    m.installed.push_back(LibraryRef{to_lower(lib.at("name").get<std::string>()),
                                     lib.at("version").get<std::string>(),
                                     lib.value("description", std::string{})});
  return m;
}

}  // namespace vulngraph
