#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "vulngraph/date.hpp"
#include "vulngraph/records.hpp"
#include "vulngraph/rng.hpp"

namespace vulngraph {

// Seeded corpus with planted library communities. CVEs arrive in short bursts per
// community and mostly co-affect libraries of one community; each community has its own
// description vocabulary and CVSS profile. Machines install a few communities.
struct SyntheticOptions {
  std::uint64_t seed = 7;
  int communities = 8;
  int libraries_per_community = 6;
  int cve_count = 200;
  int machine_count = 30;
  int span_days = 1800;
  int burst_days = 20;
  double cross_community_rate = 0.08;
  double empty_description_rate = 0.03;
  Date start = Date::from_ymd(2015, 1, 1);
  int cvss3_from_day = 700;  // records published earlier carry no CVSS v3 block
};

struct SyntheticCorpus {
  std::vector<CveRecord> cves;  // chronological, ids ascending with time
  std::vector<MachineInventory> machines;
  std::vector<std::vector<std::string>> communities;  // library names per community
};

namespace detail {

inline const std::vector<std::string>& synthetic_topics() {
  static const std::vector<std::string> t = {"crypto", "image", "xml",  "web",   "sql",    "net",
                                             "font",   "zip",   "kernel", "audio", "script", "auth"};
  return t;
}

inline std::vector<std::string> community_vocabulary(const std::string& topic) {
  static const std::vector<std::vector<std::string>> vocab = {
      {"certificate", "cipher", "handshake", "padding", "oracle", "key", "signature", "tls"},
      {"pixel", "decoder", "bitmap", "jpeg", "png", "frame", "palette", "resize"},
      {"entity", "parser", "schema", "namespace", "xpath", "dtd", "element", "attribute"},
      {"request", "header", "cookie", "session", "redirect", "csrf", "url", "browser"},
      {"query", "injection", "statement", "table", "cursor", "database", "column", "index"},
      {"socket", "packet", "dns", "tcp", "resolver", "datagram", "proxy", "route"},
      {"glyph", "truetype", "hinting", "outline", "kerning", "typeface", "rendering", "metrics"},
      {"archive", "inflate", "deflate", "compression", "entry", "checksum", "stream", "extract"},
      {"syscall", "privilege", "driver", "ioctl", "namespace", "cgroup", "scheduler", "mmap"},
      {"sample", "codec", "wav", "channel", "mixer", "playback", "bitrate", "midi"},
      {"interpreter", "bytecode", "eval", "sandbox", "closure", "prototype", "garbage", "jit"},
      {"password", "login", "token", "pam", "credential", "ldap", "kerberos", "account"}};
  const auto& topics = synthetic_topics();
  const auto idx = static_cast<std::size_t>(std::find(topics.begin(), topics.end(), topic) - topics.begin());
  return vocab[idx % vocab.size()];
}

inline const std::vector<std::string>& generic_vocabulary() {
  static const std::vector<std::string> g = {"vulnerability", "allows", "remote", "attackers", "crafted",
                                             "overflow",      "memory", "denial", "service",   "execute"};
  return g;
}

// CVSS profile: community c prefers option (c + offset) % options.size().
inline std::string pick_profile(Rng& rng, const std::vector<std::string>& options, int community, int offset,
                                double loyalty = 0.8) {
  const auto n = options.size();
  if (rng.uniform() < loyalty) return options[static_cast<std::size_t>(community + offset) % n];
  return options[static_cast<std::size_t>(rng.below(n))];
}

}  // namespace detail

inline SyntheticCorpus generate_synthetic_corpus(const SyntheticOptions& opt = {}) {
  Rng rng(opt.seed);
  SyntheticCorpus out;
  const auto& topics = detail::synthetic_topics();
  for (int c = 0; c < opt.communities; ++c) {
    std::vector<std::string> libs;
    const std::string& topic = topics[static_cast<std::size_t>(c) % topics.size()];
    const std::string tag = c < static_cast<int>(topics.size()) ? topic : topic + std::to_string(c);
    for (int l = 0; l < opt.libraries_per_community; ++l) libs.push_back("lib" + tag + "-" + std::to_string(l));
    out.communities.push_back(std::move(libs));
  }
  const std::vector<std::string> versions = {"1.0", "1.1", "1.2", "2.0"};

  struct Draft {
    int day;
    int community;
    std::vector<std::string> libs;
  };
  std::vector<Draft> drafts;
  while (static_cast<int>(drafts.size()) < opt.cve_count) {
    const int community = static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.communities)));
    const int origin = static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.span_days)));
    const int burst = 1 + static_cast<int>(rng.below(4));
    for (int b = 0; b < burst && static_cast<int>(drafts.size()) < opt.cve_count; ++b) {
      Draft d{origin + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.burst_days + 1))), community, {}};
      const auto& libs = out.communities[static_cast<std::size_t>(community)];
      // Low-index libraries of a community are hit more often.
      const int width = 1 + static_cast<int>(rng.below(3));
      std::set<std::string> chosen;
      while (static_cast<int>(chosen.size()) < width) {
        const double u = rng.uniform();
        chosen.insert(libs[static_cast<std::size_t>(u * u * static_cast<double>(libs.size()))]);
      }
      if (rng.uniform() < opt.cross_community_rate) {
        const auto other = rng.below(static_cast<std::uint64_t>(opt.communities));
        const auto& ol = out.communities[other];
        chosen.insert(ol[static_cast<std::size_t>(rng.below(ol.size()))]);
      }
      d.libs.assign(chosen.begin(), chosen.end());
      drafts.push_back(std::move(d));
    }
  }
  std::stable_sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) { return a.day < b.day; });

  const std::vector<std::string> av = {"NETWORK", "LOCAL", "ADJACENT_NETWORK"};
  const std::vector<std::string> ac = {"LOW", "MEDIUM", "HIGH"};
  const std::vector<std::string> au = {"NONE", "SINGLE", "MULTIPLE"};
  const std::vector<std::string> sev = {"HIGH", "MEDIUM", "LOW"};
  const std::vector<std::string> ui = {"FALSE", "TRUE"};
  const std::vector<std::string> imp = {"PARTIAL", "COMPLETE", "NONE"};
  const std::vector<std::string> av3 = {"NETWORK", "LOCAL", "ADJACENT_NETWORK", "PHYSICAL"};
  const std::vector<std::string> ac3 = {"LOW", "HIGH"};
  const std::vector<std::string> cwes = {"CWE-79", "CWE-89", "CWE-119", "CWE-20", "CWE-200", "CWE-287", "CWE-416",
                                         "CWE-125"};

  std::vector<int> seq_per_year(3000, 0);
  for (const auto& d : drafts) {
    CveRecord r;
    r.published = opt.start.plus_days(d.day);
    const int year = std::stoi(r.published.iso().substr(0, 4));
    char id[32];
    std::snprintf(id, sizeof id, "CVE-%04d-%05d", year, ++seq_per_year[static_cast<std::size_t>(year)]);
    r.id = id;
    for (const auto& lib : d.libs)
      r.affected.push_back({lib, versions[static_cast<std::size_t>(rng.below(versions.size()))], {}});

    const int c = d.community;
    if (rng.uniform() >= opt.empty_description_rate) {
      const auto vocab = detail::community_vocabulary(topics[static_cast<std::size_t>(c) % topics.size()]);
      const int words = 6 + static_cast<int>(rng.below(7));
      std::string text;
      for (int w = 0; w < words; ++w) {
        const bool generic = rng.uniform() < 0.3;
        const auto& pool = generic ? detail::generic_vocabulary() : vocab;
        if (!text.empty()) text += ' ';
        text += pool[static_cast<std::size_t>(rng.below(pool.size()))];
      }
      r.description = text + " in " + d.libs.front();
    }
    r.cvss2.access_vector = detail::pick_profile(rng, av, c, 0);
    r.cvss2.access_complexity = detail::pick_profile(rng, ac, c, 1);
    r.cvss2.authentication = detail::pick_profile(rng, au, c, 0, 0.9);
    r.cvss2.severity = detail::pick_profile(rng, sev, c, 2);
    r.cvss2.user_interaction_required = detail::pick_profile(rng, ui, c, 0);
    r.cvss2.confidentiality_impact = detail::pick_profile(rng, imp, c, 0);
    r.cvss2.integrity_impact = detail::pick_profile(rng, imp, c, 1);
    r.cvss2.availability_impact = detail::pick_profile(rng, imp, c, 2);
    if (d.day >= opt.cvss3_from_day)
      r.cvss3 = Cvss3Fields{detail::pick_profile(rng, av3, c, 0), detail::pick_profile(rng, ac3, c, 0)};
    if (rng.uniform() < 0.85) r.cwe = detail::pick_profile(rng, cwes, c, 0);
    out.cves.push_back(std::move(r));
  }

  // Machines: two thirds tagged "vulnerable", the rest "debian". Each installs two or
  // three communities at random versions.
  for (int m = 0; m < opt.machine_count; ++m) {
    MachineInventory inv;
    char id[32];
    std::snprintf(id, sizeof id, "image-%03d", m);
    inv.machine_id = id;
    inv.tag = m < (2 * opt.machine_count) / 3 ? MachineTag::vulnerable : MachineTag::debian;
    std::set<std::uint64_t> picked;
    const int count = 2 + static_cast<int>(rng.below(2));
    while (static_cast<int>(picked.size()) < std::min(count, opt.communities))
      picked.insert(rng.below(static_cast<std::uint64_t>(opt.communities)));
    for (auto c : picked)
      for (const auto& lib : out.communities[c])
        inv.installed.push_back({lib, versions[static_cast<std::size_t>(rng.below(versions.size()))], {}});
    inv.installed.push_back({"coreutils", "8.32", "GNU core utilities"});
    out.machines.push_back(std::move(inv));
  }
  return out;
}

}  // namespace vulngraph
