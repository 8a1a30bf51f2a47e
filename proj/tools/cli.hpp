#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vulngraph/config.hpp"
#include "vulngraph/cve_feed.hpp"
#include "vulngraph/dpkg.hpp"
#include "vulngraph/pipeline.hpp"
#include "vulngraph/split.hpp"
#include "vulngraph/store.hpp"
#include "vulngraph/synthetic.hpp"

namespace vulngraph::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kMissingStage = 3 };

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

namespace detail {

inline std::string flag_name(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

inline std::vector<fs::path> files_under(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("input path does not exist: " + p.string());
  if (fs::is_regular_file(p)) return {p};
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(p))
    if (e.is_regular_file()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

inline void report_warnings(const Diagnostics& d, std::ostream& err, std::size_t limit = 5) {
  for (std::size_t i = 0; i < d.warnings.size() && i < limit; ++i) err << "warning: " << d.warnings[i] << '\n';
  if (d.warnings.size() > limit) err << "warning: ... " << d.warnings.size() - limit << " more\n";
}

struct Context {
  RunConfig cfg;
  Store store;
  Streams io;
};

inline std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

// --- commands ---

inline int cmd_ingest(Context& ctx, const std::vector<std::string>& cve_paths, const std::string& machines_dir) {
  StoreLock lock(ctx.store.root());
  std::vector<std::vector<CveRecord>> sources;
  Diagnostics diag;
  std::size_t files = 0;
  for (const auto& input : cve_paths) {
    for (const auto& file : files_under(input)) {
      try {
        sources.push_back(parse_any_feed(read_file(file), &diag));
      } catch (const ParseError& e) {
        throw ParseError(file.string() + ": " + e.what(), e.offset());
      }
      ++files;
    }
  }
  std::vector<CveRecord> records = merge_sources(sources);

  std::vector<MachineInventory> machines;
  if (!machines_dir.empty()) {
    // <dir>/<tag>/<machine_id>[.status]
    if (!fs::is_directory(machines_dir)) throw IoError("machines path is not a directory: " + machines_dir);
    for (const auto& file : files_under(machines_dir)) {
      const std::string tag_dir = file.parent_path().filename().string();
      const auto tag = parse_tag(tag_dir);
      if (!tag) throw DataError(file.string() + ": parent directory must be 'vulnerable' or 'debian'");
      machines.push_back(parse_dpkg_status(read_file(file), file.stem().string(), *tag, &diag));
    }
    std::map<std::string, int> seen;
    for (const auto& m : machines)
      if (++seen[m.machine_id] > 1) throw DataError("duplicate machine id " + m.machine_id);
  }
  report_warnings(diag, ctx.io.err);
  const std::size_t record_count = records.size();
  const std::size_t machine_count = machines.size();
  ctx.store.write_cves(std::move(records));
  ctx.store.write_machines(std::move(machines));
  ctx.io.out << "ingest: " << record_count << " CVEs from " << files << " feed files (" << diag.skipped
             << " entries skipped), " << machine_count << " machines\n";
  return kOk;
}

inline int cmd_split(Context& ctx) {
  StoreLock lock(ctx.store.root());
  const DatasetSplit split = split_dataset(ctx.store.read_cves(), ctx.cfg.seed);
  ctx.store.write_split(ctx.cfg.seed, split);
  ctx.io.out << "split: seed " << ctx.cfg.seed << ", populate " << split.populate.size() << ", train "
             << split.train.size() << ", test " << split.test.size() << '\n';
  return kOk;
}

inline int cmd_cluster(Context& ctx) {
  StoreLock lock(ctx.store.root());
  const auto all = ctx.store.read_cves();
  const DatasetSplit split = ctx.store.read_split(ctx.cfg.seed, all);
  const PipelineConfig pc = ctx.cfg.pipeline();
  const auto corpus = concat(split.populate, split.train);
  const FeatureSetSpec spec = feature_set_preset(ctx.cfg.feature_set);

  FeatureEncoder encoder;
  encoder.codebook = CategoricalCodebook::fit(corpus);
  encoder.topic_mode = pc.topic_mode;
  encoder.encoding = pc.encoding;
  if (spec.use_topic_model) encoder.topics = fit_topic_model(corpus, pc.topic_count, pc.seed, pc.nmf);

  Diagnostics diag;
  const ClusterArtifacts a = fit_clusters(corpus, all, spec, encoder, pc, &diag);
  report_warnings(diag, ctx.io.err);

  nlohmann::json snap = {{"feature_set", spec.id},
                         {"topic_mode", ctx.cfg.get("topic_mode")},
                         {"encoding", ctx.cfg.get("encoding")},
                         {"codebook", a.encoder.codebook.to_json()},
                         {"model", to_json(a.model)}};
  if (a.pca) snap["pca"] = to_json(*a.pca);
  ctx.store.write_json(ctx.store.clustering_path(), snap);
  ctx.store.write_assignments(a.assignments);

  std::vector<FeatureVector> vectors;
  for (const auto& r : all) vectors.push_back(encode_features(r, spec, a.encoder));
  std::ostringstream features;
  write_feature_csv(features, vectors);
  write_file_atomic(ctx.store.model_dir() / "features.csv", features.str());
  if (a.encoder.topics) {
    ctx.store.write_json(ctx.store.model_dir() / "topics.json", to_json(*a.encoder.topics));
    std::ostringstream kw;
    write_keyword_csv(kw, top_keywords(*a.encoder.topics, 5));
    write_file_atomic(ctx.store.model_dir() / "topics.csv", kw.str());
  }

  std::map<int, int> sizes;
  for (const auto& [id, c] : a.assignments) ++sizes[c];
  ctx.io.out << "cluster: feature set " << spec.id << ", " << a.assignments.size() << " CVEs in " << sizes.size()
             << " clusters";
  ctx.io.out << " [";
  bool first = true;
  for (const auto& [c, n] : sizes) {
    ctx.io.out << (first ? "" : " ") << c << ":" << n;
    first = false;
  }
  ctx.io.out << "]\n";
  return kOk;
}

inline int cmd_build_graph(Context& ctx) {
  StoreLock lock(ctx.store.root());
  const auto all = ctx.store.read_cves();
  const DatasetSplit split = ctx.store.read_split(ctx.cfg.seed, all);
  const auto assignments = ctx.store.read_assignments();
  const auto machines = ctx.store.read_machines();
  const CveIndex index(concat(split.populate, split.train));
  CohesionGraph g = build_base_graph(split.populate, machine_vulnerabilities(machines, index), ctx.cfg.machine_tag);
  // assignments cover every CVE; only populate ones belong on the graph
  std::map<std::string, int> populate_assignments;
  for (const auto& r : split.populate)
    if (auto it = assignments.find(r.id); it != assignments.end()) populate_assignments.insert(*it);
  Diagnostics diag;
  attach_clusters(g, populate_assignments, split.populate, &diag);
  report_warnings(diag, ctx.io.err);
  ctx.store.write_graph(g);
  ctx.io.out << "build-graph: " << g.nodes().size() << " nodes, " << g.edges().size() << " edges (machine tag "
             << tag_name(ctx.cfg.machine_tag) << ")\n";
  return kOk;
}

inline std::vector<TrainingCase> training_cases(const Context& ctx, const DatasetSplit& split) {
  auto cases = build_eval_cases(split.train, concat(split.populate, split.train), ctx.cfg.window_days).cases;
  set_case_clusters(cases, ctx.store.read_assignments());
  return to_training_cases(cases);
}

inline int cmd_train(Context& ctx) {
  StoreLock lock(ctx.store.root());
  const auto all = ctx.store.read_cves();
  const DatasetSplit split = ctx.store.read_split(ctx.cfg.seed, all);
  CohesionGraph g = ctx.store.read_graph();
  const auto cases = training_cases(ctx, split);
  TrainLog log;
  if (ctx.cfg.epochs > 0) {
    log = train(g, cases, {ctx.cfg.epochs, ctx.cfg.lr});
  } else {
    log.initial_loss = log.final_loss = mean_case_edge_loss(g, cases);
  }
  ctx.store.write_graph(g);
  ctx.io.out << "train: cases: " << cases.size() << ", epochs: " << log.epochs_run << ", lr: " << ctx.cfg.get("lr")
             << ", loss: " << fmt(log.initial_loss) << " -> " << fmt(log.final_loss) << '\n';
  ctx.io.out << "epochs: " << log.epochs_run << '\n';
  return kOk;
}

inline int cmd_predict(Context& ctx, const std::string& cve_id, const std::string& library, const std::string& date,
                       const std::string& out_path) {
  if (cve_id.empty() == library.empty()) throw ParameterError("predict needs exactly one of --cve or --library");
  const CohesionGraph g = ctx.store.read_graph();
  const auto all = ctx.store.read_cves();

  PredictionResult result;
  if (!cve_id.empty()) {
    auto it = std::find_if(all.begin(), all.end(), [&](const CveRecord& r) { return r.id == cve_id; });
    if (it == all.end()) throw DataError("unknown CVE " + cve_id);
    const auto assignments = ctx.store.read_assignments();
    PredictionContext pc{kNoise, it->published};
    if (auto a = assignments.find(cve_id); a != assignments.end()) pc.input_cluster = a->second;
    if (!date.empty()) pc.input_time = Date::parse(date);
    result = predict(g, *it, ctx.cfg.threshold, ctx.cfg.depth, pc);
  } else {
    PredictionContext pc{kNoise, {}};
    if (!date.empty()) {
      pc.input_time = Date::parse(date);
    } else {
      // Without a date the library is queried as of the newest CVE in the store.
      for (const auto& r : all) pc.input_time = std::max(pc.input_time, r.published);
    }
    result = predict_library(g, to_lower(library), ctx.cfg.threshold, ctx.cfg.depth, pc);
  }

  std::ostringstream table;
  table << "input_id,library,activation,depth\n";
  for (const auto& h : result.hits)
    table << result.input << ',' << h.library << ',' << fmt(h.activation) << ',' << h.depth << '\n';
  if (!out_path.empty()) write_file_atomic(out_path, table.str());
  ctx.io.out << table.str();
  ctx.io.err << "predict: " << result.hits.size() << " hits (threshold " << ctx.cfg.get("threshold") << ", depth "
             << ctx.cfg.depth << ")\n";
  return kOk;
}

inline int cmd_evaluate(Context& ctx, const std::string& preset_name) {
  StoreLock lock(ctx.store.root());
  const PermutationPreset preset = permutation_preset(preset_name);
  PipelineData data;
  data.all = ctx.store.read_cves();
  data.machines = ctx.store.read_machines();
  data.split = ctx.store.read_split(ctx.cfg.seed, data.all);
  const PermutationReport report = run_permutation(preset, ctx.cfg.pipeline(), data);
  const fs::path dir = ctx.store.report_dir(preset.name);
  ctx.store.write_json(dir / "report.json", to_json(report));
  emit_report(report, dir);
  for (const auto& r : report.feature_sets)
    ctx.io.out << "evaluate: " << preset.name << " fs" << r.feature_set << " epochs " << r.epochs_run
               << " cases " << r.sweep.per_threshold.front().outcomes.size() << " dropped " << r.sweep.dropped
               << " mean@0.9 " << fmt(r.mean_accuracy(kSelectionThreshold), 4) << " median@0.9 "
               << fmt(r.median_accuracy(kSelectionThreshold), 4) << " unit_weights "
               << (r.all_unit_weights ? "yes" : "no") << '\n';
  ctx.io.out << "evaluate: best feature set " << report.best_feature_set << ", report in " << dir.string() << '\n';
  return kOk;
}

inline int cmd_report(Context& ctx, const std::string& preset_name, const std::string& out_dir) {
  const PermutationReport report = permutation_report_from_json(
      ctx.store.read_json(ctx.store.report_dir(preset_name) / "report.json", "evaluate"));
  const fs::path dir = out_dir.empty() ? ctx.store.report_dir(preset_name) : fs::path(out_dir);
  const auto files = emit_report(report, dir);
  ctx.io.out << "report: " << files.size() << " files written to " << dir.string() << '\n';
  return kOk;
}

inline std::string dpkg_text(const MachineInventory& m) {
  std::string s;
  for (const auto& lib : m.installed) {
    s += "Package: " + lib.name + "\nStatus: install ok installed\nVersion: " + lib.version + "\n";
    if (!lib.description.empty()) s += "Description: " + lib.description + "\n";
    s += "\n";
  }
  return s;
}

inline int cmd_synth(Context& ctx, const std::string& out_dir, int cves, int machines, std::uint64_t seed) {
  SyntheticOptions opt;
  opt.seed = seed;
  opt.cve_count = cves;
  opt.machine_count = machines;
  const SyntheticCorpus corpus = generate_synthetic_corpus(opt);
  nlohmann::json feed = nlohmann::json::array();
  for (const auto& r : corpus.cves) feed.push_back(to_json(r));
  const fs::path root(out_dir);
  write_file_atomic(root / "cves" / "synthetic.json", feed.dump(1) + "\n");
  for (const auto& m : corpus.machines)
    write_file_atomic(root / "machines" / tag_name(m.tag) / (m.machine_id + ".status"), dpkg_text(m));
  ctx.io.out << "synth: " << corpus.cves.size() << " CVEs, " << corpus.machines.size() << " machines in "
             << root.string() << '\n';
  return kOk;
}

}  // namespace detail

// Entry point shared by the binary and the tests.
inline int run(int argc, const char* const* argv, Streams io) {
  CLI::App app{"Library cohesion graph toolkit: ingest CVE and machine data, cluster, train and evaluate."};
  app.require_subcommand(1);
  app.fallthrough();

  const RunConfig defaults;
  std::string store_dir = defaults.store_dir;
  std::string config_path;
  app.add_option("--store", store_dir, "Store directory")->capture_default_str();
  app.add_option("--config", config_path, "Config file (default: <store>/config)");

  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_opts;
  for (const auto& key : RunConfig::keys()) {
    flag_values[key] = defaults.get(key);
    flag_opts[key] = app.add_option(detail::flag_name(key), flag_values[key], "config key '" + key + "'")
                         ->capture_default_str();
  }

  std::vector<std::string> cve_paths;
  std::string machines_dir;
  auto* ingest = app.add_subcommand("ingest", "Parse CVE feeds and dpkg inventories into the store");
  ingest->add_option("--cve", cve_paths, "CVE feed file or directory (repeatable)")->required();
  ingest->add_option("--machines", machines_dir, "Directory of <tag>/<machine_id> dpkg status files");

  auto* split = app.add_subcommand("split", "Seeded 50/30/20 populate/train/test split");
  auto* cluster = app.add_subcommand("cluster", "Fit topic model, encoder and clustering; assign every CVE");
  auto* build = app.add_subcommand("build-graph", "Populate the cohesion graph from the populate split");
  auto* trainc = app.add_subcommand("train", "Train edge weights on the train split");

  std::string cve_id, library, date, out_path;
  auto* predictc = app.add_subcommand("predict", "Predict potentially vulnerable libraries");
  predictc->add_option("--cve", cve_id, "Input CVE id (must be in the store)");
  predictc->add_option("--library", library, "Input library name");
  predictc->add_option("--date", date, "Reference date YYYY-MM-DD for the time score");
  predictc->add_option("--out", out_path, "Also write the hit table to this CSV file");

  std::string preset = "default";
  auto* evaluate = app.add_subcommand("evaluate", "Run a permutation preset end to end and write its report");
  evaluate->add_option("--preset", preset, "Preset name")
      ->capture_default_str()
      ->check(CLI::IsMember(preset_names()));

  std::string report_out;
  auto* reportc = app.add_subcommand("report", "Re-emit CSV report files from a stored evaluation");
  reportc->add_option("--preset", preset, "Preset name")
      ->capture_default_str()
      ->check(CLI::IsMember(preset_names()));
  reportc->add_option("--out", report_out, "Output directory (default: the preset's report directory)");

  std::string synth_out;
  int synth_cves = 200, synth_machines = 30;
  std::uint64_t synth_seed = 7;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic corpus as feed and dpkg fixture files");
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--cves", synth_cves, "CVE count")->capture_default_str();
  synth->add_option("--machines", synth_machines, "Machine count")->capture_default_str();
  synth->add_option("--synth-seed", synth_seed, "Generator seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    io.out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    io.out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    io.err << e.what() << '\n';
    return e.get_exit_code() == 0 ? kOk : kUsage;
  }

  const std::string store_root = store_dir;
  detail::Context ctx{RunConfig{}, Store(store_root), io};
  try {
    ctx.cfg.store_dir = store_root;
    // Precedence: flags > config file > built-in defaults.
    const fs::path cfg_file = config_path.empty() ? ctx.store.config_path() : fs::path(config_path);
    if (!config_path.empty() && !fs::exists(cfg_file)) throw IoError("config file not found: " + cfg_file.string());
    if (fs::exists(cfg_file)) apply_config_text(ctx.cfg, read_file(cfg_file));
    for (const auto& [key, opt] : flag_opts)
      if (opt->count() > 0) ctx.cfg.set(key, flag_values[key]);

    if (ingest->parsed()) return detail::cmd_ingest(ctx, cve_paths, machines_dir);
    if (split->parsed()) return detail::cmd_split(ctx);
    if (cluster->parsed()) return detail::cmd_cluster(ctx);
    if (build->parsed()) return detail::cmd_build_graph(ctx);
    if (trainc->parsed()) return detail::cmd_train(ctx);
    if (predictc->parsed()) return detail::cmd_predict(ctx, cve_id, library, date, out_path);
    if (evaluate->parsed()) return detail::cmd_evaluate(ctx, preset);
    if (reportc->parsed()) return detail::cmd_report(ctx, preset, report_out);
    if (synth->parsed()) return detail::cmd_synth(ctx, synth_out, synth_cves, synth_machines, synth_seed);
  } catch (const StageError& e) {
    io.err << "error: " << e.what() << '\n';
    return kMissingStage;
  } catch (const ParameterError& e) {
    io.err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    io.err << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

}  // namespace vulngraph::cli
