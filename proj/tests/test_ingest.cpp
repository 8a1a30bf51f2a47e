#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "vulngraph/cve_feed.hpp"
#include "vulngraph/dpkg.hpp"
#include "vulngraph/matching.hpp"
#include "vulngraph/split.hpp"
#include "vulngraph/store.hpp"
#include "vulngraph/synthetic.hpp"

using namespace vulngraph;

namespace {

const char* kTwoLibraryFeed = R"([
  {"id": "CVE-2019-0001", "published": "2019-01-15", "description": "Buffer overflow in OpenSSL",
   "affected": [{"name": "OpenSSL", "version": "1.0.1"}, {"name": "libssl", "version": "1.0.1"}],
   "cvss2": {"access_vector": "NETWORK", "access_complexity": "LOW", "authentication": "NONE",
             "severity": "HIGH", "user_interaction_required": "FALSE", "confidentiality_impact": "PARTIAL",
             "integrity_impact": "PARTIAL", "availability_impact": "PARTIAL"},
   "cvss3": {"attack_vector": "NETWORK", "attack_complexity": "LOW"},
   "cwe": "CWE-119"}
])";

}  // namespace

TEST(CveFeed, ParsesEntryWithAffectedLibraries) {
  const auto records = parse_cve_feed(kTwoLibraryFeed);
  ASSERT_EQ(records.size(), 1u);
  const CveRecord& r = records[0];
  EXPECT_EQ(r.id, "CVE-2019-0001");
  EXPECT_EQ(r.published, Date::from_ymd(2019, 1, 15));
  ASSERT_EQ(r.affected.size(), 2u);
  EXPECT_EQ(r.affected[0].name, "openssl");
  EXPECT_EQ(r.affected[0].version, "1.0.1");
  EXPECT_EQ(r.cvss2.severity, "HIGH");
  ASSERT_TRUE(r.cvss3.has_value());
  EXPECT_EQ(r.cvss3->attack_complexity, "LOW");
  EXPECT_EQ(r.cwe.value_or(""), "CWE-119");
}

TEST(CveFeed, MissingCvss3BlockIsAbsent) {
  const auto records = parse_cve_feed(R"([{"id": "CVE-2009-0001", "published": "2009-03-01",
      "description": "old", "affected": [{"name": "zlib", "version": "1.2"}],
      "cvss2": {"access_vector": "LOCAL"}}])");
  ASSERT_EQ(records.size(), 1u);
  EXPECT_FALSE(records[0].cvss3.has_value());
  EXPECT_FALSE(records[0].cwe.has_value());
  EXPECT_EQ(records[0].cvss2.access_vector, "LOCAL");
  EXPECT_EQ(records[0].cvss2.severity, "");
}

TEST(CveFeed, SkipsEntryWithoutPublishedDate) {
  const char* feed = R"([
    {"id": "CVE-2020-0001", "published": "2020-01-01", "affected": [{"name": "a", "version": "1"}]},
    {"id": "CVE-2020-0002", "affected": [{"name": "b", "version": "1"}]},
    {"id": "CVE-2020-0003", "published": "2020-02-01T10:00Z", "affected": [{"name": "c", "version": "1"}]}
  ])";
  Diagnostics diag;
  const auto records = parse_cve_feed(feed, &diag);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(diag.skipped, 1u);
  EXPECT_EQ(records[0].id, "CVE-2020-0001");
  EXPECT_EQ(records[1].id, "CVE-2020-0003");
}

TEST(CveFeed, SkipsEntriesWithBadFields) {
  const char* feed = R"([
    {"id": "CVE-2020-0001", "published": "2020-13-01"},
    {"id": "CVE-2020-0002", "published": "2020-01-01", "affected": "openssl"},
    {"published": "2020-01-01"},
    42
  ])";
  Diagnostics diag;
  EXPECT_TRUE(parse_cve_feed(feed, &diag).empty());
  EXPECT_EQ(diag.skipped, 4u);
}

TEST(CveFeed, UnreadableContentReportsByteOffset) {
  const std::string feed = R"([{"id": "CVE-1", "published": "2020-01-01",)";
  try {
    parse_cve_feed(feed);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GT(e.offset(), 30u);
    EXPECT_LE(e.offset(), feed.size() + 1);
  }
  EXPECT_THROW(parse_cve_feed(R"({"id": 1})"), ParseError);
}

TEST(CveFeed, DuplicateIdLastWins) {
  const char* feed = R"([
    {"id": "CVE-2020-0001", "published": "2020-01-01", "description": "first"},
    {"id": "CVE-2020-0002", "published": "2020-01-02"},
    {"id": "CVE-2020-0001", "published": "2020-01-03", "description": "second"}
  ])";
  Diagnostics diag;
  const auto records = parse_cve_feed(feed, &diag);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].description, "second");
  EXPECT_EQ(records[0].published, Date::from_ymd(2020, 1, 3));
  EXPECT_EQ(diag.warnings.size(), 1u);
}

TEST(CveFeed, StoreRoundTripPreservesRecords) {
  SyntheticOptions opt;
  opt.cve_count = 120;
  const auto corpus = generate_synthetic_corpus(opt);
  for (const auto& r : corpus.cves) {
    const CveRecord back = cve_from_json(nlohmann::json::parse(to_json(r).dump()));
    EXPECT_EQ(back, r) << r.id;
  }
}

TEST(CveFeed, LibraryNamesAreLowercased) {
  const auto records = parse_cve_feed(R"([{"id": "CVE-1", "published": "2020-01-01",
      "affected": [{"name": "LibXML2", "version": "2.9"}, {"name": "ZLIB", "version": "1"}]}])");
  for (const auto& r : records)
    for (const auto& lib : r.affected)
      EXPECT_TRUE(std::none_of(lib.name.begin(), lib.name.end(), [](unsigned char c) { return std::isupper(c); }));
}

TEST(NvdAdapter, MapsCveItems) {
  const char* nvd = R"({"CVE_data_type": "CVE", "CVE_Items": [{
    "cve": {"CVE_data_meta": {"ID": "CVE-2014-0160"},
            "problemtype": {"problemtype_data": [{"description": [{"lang": "en", "value": "CWE-119"}]}]},
            "description": {"description_data": [{"lang": "en", "value": "Heartbleed"}]}},
    "configurations": {"nodes": [{"operator": "OR", "cpe_match": [
        {"vulnerable": true, "cpe23Uri": "cpe:2.3:a:openssl:openssl:1.0.1:*:*:*:*:*:*:*"},
        {"vulnerable": true, "cpe23Uri": "cpe:2.3:a:openssl:openssl:*:*:*:*:*:*:*:*"},
        {"vulnerable": false, "cpe23Uri": "cpe:2.3:o:debian:debian_linux:7.0:*:*:*:*:*:*:*"}],
        "children": [{"cpe_match": [{"vulnerable": true, "cpe23Uri": "cpe:2.3:a:OpenSSL:libssl:1.0.1a:*:*:*:*:*:*:*"}]}]}]},
    "impact": {"baseMetricV2": {"cvssV2": {"accessVector": "NETWORK", "accessComplexity": "LOW",
                                           "authentication": "NONE", "confidentialityImpact": "PARTIAL",
                                           "integrityImpact": "NONE", "availabilityImpact": "NONE"},
                                "severity": "MEDIUM", "userInteractionRequired": false}},
    "publishedDate": "2014-04-07T22:55Z"}]})";
  const auto records = parse_any_feed(nvd);
  ASSERT_EQ(records.size(), 1u);
  const CveRecord& r = records[0];
  EXPECT_EQ(r.id, "CVE-2014-0160");
  EXPECT_EQ(r.published, Date::from_ymd(2014, 4, 7));
  EXPECT_EQ(r.description, "Heartbleed");
  EXPECT_EQ(r.cwe.value_or(""), "CWE-119");
  ASSERT_EQ(r.affected.size(), 2u);
  EXPECT_EQ(r.affected[0], (LibraryRef{"openssl", "1.0.1", {}}));
  EXPECT_EQ(r.affected[1], (LibraryRef{"libssl", "1.0.1a", {}}));
  EXPECT_EQ(r.cvss2.access_vector, "NETWORK");
  EXPECT_EQ(r.cvss2.user_interaction_required, "FALSE");
  EXPECT_FALSE(r.cvss3.has_value());
}

TEST(MergeSources, LaterFieldsWinAndNewestDateKept) {
  CveRecord nvd{"CVE-1", Date::from_ymd(2020, 1, 1), "nvd text", {{"a", "1", {}}}, {}, std::nullopt, "CWE-20"};
  nvd.cvss2.severity = "HIGH";
  CveRecord vulners{"CVE-1", Date::from_ymd(2019, 12, 30), "", {}, {}, Cvss3Fields{"NETWORK", "LOW"}, std::nullopt};
  vulners.cvss2.access_vector = "LOCAL";
  CveRecord zero_day{"CVE-9", Date::from_ymd(2020, 2, 1), "zero day", {{"b", "2", {}}}, {}, std::nullopt, std::nullopt};

  const auto merged = merge_sources({{nvd}, {vulners, zero_day}});
  ASSERT_EQ(merged.size(), 2u);
  const CveRecord& m = merged[0];
  EXPECT_EQ(m.published, Date::from_ymd(2020, 1, 1));
  EXPECT_EQ(m.description, "nvd text");
  EXPECT_EQ(m.affected.size(), 1u);
  EXPECT_EQ(m.cvss2.severity, "HIGH");
  EXPECT_EQ(m.cvss2.access_vector, "LOCAL");
  ASSERT_TRUE(m.cvss3.has_value());
  EXPECT_EQ(m.cwe.value_or(""), "CWE-20");
  EXPECT_EQ(merged[1].id, "CVE-9");
}

TEST(Dpkg, InstalledStanza) {
  const auto inv = parse_dpkg_status("Package: openssl\nVersion: 1.1.1d\nStatus: install ok installed\n",
                                     "img", MachineTag::vulnerable);
  ASSERT_EQ(inv.installed.size(), 1u);
  EXPECT_EQ(inv.installed[0], (LibraryRef{"openssl", "1.1.1d", {}}));
}

TEST(Dpkg, ConfigFilesStanzaIsNotInstalled) {
  const auto inv = parse_dpkg_status("Package: openssl\nStatus: deinstall ok config-files\nVersion: 1.1.1d\n", "img",
                                     MachineTag::vulnerable);
  EXPECT_TRUE(inv.installed.empty());
}

TEST(Dpkg, CountsInstalledStanzasOnly) {
  const char* status =
      "Package: libc6\nStatus: install ok installed\nPriority: required\nVersion: 2.31-13\n"
      "Description: GNU C Library: Shared libraries\n Contains the standard libraries.\n .\n More text.\n\n"
      "Package: zlib1g\nStatus: install ok installed\nVersion: 1:1.2.11.dfsg-2\n\n"
      "Package: oldpkg\nStatus: purge ok not-installed\nVersion: 0.1\n\n"
      "Package: OpenSSL\r\nStatus: install ok installed\r\nVersion: 1.1.1n-0\r\n";
  const auto inv = parse_dpkg_status(status, "debian-11", MachineTag::debian);
  ASSERT_EQ(inv.installed.size(), 3u);
  EXPECT_EQ(inv.installed[0].name, "libc6");
  EXPECT_EQ(inv.installed[0].description,
            "GNU C Library: Shared libraries\nContains the standard libraries.\n.\nMore text.");
  EXPECT_EQ(inv.installed[1].version, "1:1.2.11.dfsg-2");
  EXPECT_EQ(inv.installed[2].name, "openssl");
  EXPECT_EQ(inv.tag, MachineTag::debian);
}

TEST(Dpkg, StanzaWithoutVersionIsSkippedWithWarning) {
  Diagnostics diag;
  const auto inv = parse_dpkg_status("Package: broken\nStatus: install ok installed\n\n"
                                     "Version: 1\nStatus: install ok installed\n\n"
                                     "Package: ok\nVersion: 2\nStatus: install ok installed\n",
                                     "img", MachineTag::vulnerable, &diag);
  ASSERT_EQ(inv.installed.size(), 1u);
  EXPECT_EQ(inv.installed[0].name, "ok");
  EXPECT_EQ(diag.skipped, 2u);
  EXPECT_EQ(diag.warnings.size(), 2u);
}

TEST(MatchVulnerable, ExactNameAndVersion) {
  CveRecord heartbleed{"CVE-2014-0160", Date::from_ymd(2014, 4, 7), "", {{"openssl", "1.0.1", {}}}, {}, {}, {}};
  const CveIndex index({heartbleed});
  MachineInventory hit{"m1", MachineTag::vulnerable, {{"openssl", "1.0.1", {}}}};
  const auto matches = match_vulnerable(hit, index);
  ASSERT_EQ(matches.size(), 1u);
  EXPECT_EQ(matches[0].cve_ids, std::vector<std::string>{"CVE-2014-0160"});

  MachineInventory miss{"m2", MachineTag::vulnerable, {{"openssl", "1.0.2", {}}}};
  EXPECT_TRUE(match_vulnerable(miss, index).empty());
  EXPECT_TRUE(match_vulnerable(MachineInventory{"m3", MachineTag::vulnerable, {}}, index).empty());
}

TEST(MatchVulnerable, AgreesWithNestedLoop) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Rng rng(seed);
    std::vector<CveRecord> cves;
    for (int i = 0; i < 400; ++i) {
      CveRecord r{"CVE-" + std::to_string(i), Date{i}, "", {}, {}, {}, {}};
      const int n = 1 + static_cast<int>(rng.below(3));
      for (int j = 0; j < n; ++j)
        r.affected.push_back({"lib" + std::to_string(rng.below(30)), std::to_string(rng.below(4)), {}});
      cves.push_back(std::move(r));
    }
    const CveIndex index(cves);
    for (int m = 0; m < 20; ++m) {
      MachineInventory inv{"m" + std::to_string(m), MachineTag::vulnerable, {}};
      for (int j = 0; j < 25; ++j)
        inv.installed.push_back({"lib" + std::to_string(rng.below(35)), std::to_string(rng.below(5)), {}});

      std::vector<VulnerableMatch> brute;
      for (const auto& lib : inv.installed) {
        std::set<std::string> ids;
        for (const auto& c : cves)
          for (const auto& a : c.affected)
            if (a == lib) ids.insert(c.id);
        if (!ids.empty()) brute.push_back({lib, {ids.begin(), ids.end()}});
      }
      const auto fast = match_vulnerable(inv, index);
      ASSERT_EQ(fast.size(), brute.size());
      for (std::size_t i = 0; i < fast.size(); ++i) {
        EXPECT_EQ(fast[i].library, brute[i].library);
        EXPECT_EQ(fast[i].cve_ids, brute[i].cve_ids);
      }
    }
  }
}

namespace {

std::vector<CveRecord> numbered_records(int n) {
  std::vector<CveRecord> out;
  for (int i = 0; i < n; ++i)
    out.push_back({"CVE-2020-" + std::to_string(10000 + i), Date{18000 + (i * 7) % 365}, "", {}, {}, {}, {}});
  return out;
}

std::set<std::string> ids_of(const std::vector<CveRecord>& v) {
  std::set<std::string> s;
  for (const auto& r : v) s.insert(r.id);
  return s;
}

}  // namespace

TEST(Split, HundredRecords) {
  const auto s = split_dataset(numbered_records(100), 1);
  EXPECT_EQ(s.populate.size(), 50u);
  EXPECT_EQ(s.train.size(), 30u);
  EXPECT_EQ(s.test.size(), 20u);
}

TEST(Split, TenRecords) {
  const auto s = split_dataset(numbered_records(10), 1);
  EXPECT_EQ(s.populate.size(), 5u);
  EXPECT_EQ(s.train.size(), 3u);
  EXPECT_EQ(s.test.size(), 2u);
}

TEST(Split, DeterministicForSeed) {
  const auto a = split_dataset(numbered_records(57), 9);
  const auto b = split_dataset(numbered_records(57), 9);
  EXPECT_EQ(a.populate, b.populate);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  const auto c = split_dataset(numbered_records(57), 10);
  EXPECT_NE(ids_of(a.populate), ids_of(c.populate));
}

TEST(Split, TooFewRecords) {
  EXPECT_THROW(split_dataset(numbered_records(2), 1), DataError);
  EXPECT_NO_THROW(split_dataset(numbered_records(3), 1));
}

TEST(Split, PartitionsForEverySeed) {
  for (int n : {3, 7, 10, 33, 101}) {
    const auto input = numbered_records(n);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto s = split_dataset(input, seed);
      const auto p = ids_of(s.populate), t = ids_of(s.train), e = ids_of(s.test);
      std::set<std::string> all = p;
      all.insert(t.begin(), t.end());
      all.insert(e.begin(), e.end());
      EXPECT_EQ(all, ids_of(input));
      EXPECT_EQ(p.size() + t.size() + e.size(), input.size());
      const double dn = n;
      EXPECT_LE(std::abs(static_cast<double>(p.size()) - std::round(0.5 * dn)), 1.0);
      EXPECT_LE(std::abs(static_cast<double>(t.size()) - std::round(0.3 * dn)), 1.0);
      EXPECT_LE(std::abs(static_cast<double>(e.size()) - std::round(0.2 * dn)), 1.0);
      EXPECT_TRUE(std::is_sorted(s.test.begin(), s.test.end(), published_before));
    }
  }
}

TEST(Store, RoundTripsArtifacts) {
  const fs::path dir = fs::temp_directory_path() / "vulngraph_store_test";
  fs::remove_all(dir);
  const Store store(dir);
  EXPECT_THROW(store.read_cves(), StageError);

  const auto corpus = generate_synthetic_corpus();
  store.write_cves(corpus.cves);
  store.write_machines(corpus.machines);
  auto cves = store.read_cves();
  auto expected = corpus.cves;
  std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  EXPECT_EQ(cves, expected);
  const auto machines = store.read_machines();
  ASSERT_EQ(machines.size(), corpus.machines.size());
  EXPECT_EQ(machines[0].installed, corpus.machines[0].installed);

  const auto split = split_dataset(cves, 5);
  store.write_split(5, split);
  const auto back = store.read_split(5, cves);
  EXPECT_EQ(back.populate, split.populate);
  EXPECT_EQ(back.test, split.test);
  EXPECT_THROW(store.read_split(6, cves), StageError);

  {
    StoreLock lock(dir);
    EXPECT_THROW(StoreLock second(dir), IoError);
  }
  EXPECT_NO_THROW(StoreLock again(dir));
  fs::remove_all(dir);
}
