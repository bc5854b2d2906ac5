// harness.hpp -- experiment driver behind the CLI verbs: dataset assembly,
// the train and attack stages, file emission (atomic, reproducible), sweeps,
// and run summaries.
#pragma once

#include <atomic>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <thread>

#include "gfl/config.hpp"
#include "gfl/report.hpp"

namespace gfl::harness {

namespace fs = std::filesystem;

// ---- atomic file output ----------------------------------------------------

inline void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw DataError("cannot write " + tmp.string());
    f << content;
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// ---- matrix container (original vs manipulated malicious features) ---------

inline std::string encode_matrices(const std::vector<std::pair<std::string, Matrix>>& mats) {
  std::ostringstream out(std::ios::binary);
  out.write("GFLMAT1\n", 8);
  uint64_t n = mats.size();
  out.write(reinterpret_cast<const char*>(&n), 8);
  for (const auto& [name, m] : mats) {
    uint64_t len = name.size();
    out.write(reinterpret_cast<const char*>(&len), 8);
    out.write(name.data(), static_cast<std::streamsize>(len));
    int32_t r = m.rows, c = m.cols;
    out.write(reinterpret_cast<const char*>(&r), 4);
    out.write(reinterpret_cast<const char*>(&c), 4);
    out.write(reinterpret_cast<const char*>(m.a.data()),
              static_cast<std::streamsize>(m.a.size() * sizeof(double)));
  }
  return out.str();
}

inline std::vector<std::pair<std::string, Matrix>> decode_matrices(const std::string& buf) {
  std::istringstream in(buf, std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "GFLMAT1\n", 8) != 0) throw DataError("matrix file: bad magic");
  uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), 8);
  std::vector<std::pair<std::string, Matrix>> out;
  for (uint64_t i = 0; i < n; ++i) {
    uint64_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 8);
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    int32_t r = 0, c = 0;
    in.read(reinterpret_cast<char*>(&r), 4);
    in.read(reinterpret_cast<char*>(&c), 4);
    Matrix m(r, c);
    in.read(reinterpret_cast<char*>(m.a.data()),
            static_cast<std::streamsize>(m.a.size() * sizeof(double)));
    out.emplace_back(std::move(name), std::move(m));
  }
  if (!in) throw DataError("matrix file: truncated");
  return out;
}

// ---- dataset assembly -------------------------------------------------------

struct Dataset {
  Graph graph;
  Partition partition;
  DataSplit split;
};

inline Dataset build_dataset(const ExperimentConfig& c, uint64_t seed) {
  Dataset d;
  if (c.dataset_source == "sbm") {
    d.graph = generate_sbm(c.sbm_blocks, c.sbm_nodes_per_block, c.sbm_p_in, c.sbm_p_out,
                           c.sbm_feature_dim, c.sbm_feature_shift, derive_seed(seed, "dataset"));
  } else {
    d.graph = load_graph(c.nodes_path, c.edges_path);
  }
  d.partition = partition_graph(d.graph, c.k, c.overlap, c.malicious_index,
                                derive_seed(seed, "partition"));
  d.split = make_split(d.graph, c.train_frac, c.val_frac, derive_seed(seed, "split"));
  return d;
}

// ---- stages -----------------------------------------------------------------

struct TrainOutcome {
  FederationState state;
  std::shared_ptr<ManipulationOutcome> manipulation;  // fired==false when disabled
};

inline TrainOutcome run_train_stage(const ExperimentConfig& c, uint64_t seed,
                                    const Dataset& data) {
  TrainOutcome out;
  out.manipulation = std::make_shared<ManipulationOutcome>();
  ManipulationHook hook = nullptr;
  if (c.manipulation_enabled)
    hook = make_manipulation_hook(c.manipulation_plan(seed), out.manipulation);
  out.state =
      run_training(c.federation_config(seed), data.graph, data.partition, data.split, hook);
  return out;
}

struct AttackOutcome {
  ShadowPairSet shadow;
  AttackTrainResult trained;
  EvaluationSet eval;
  ReconstructionResult recon;
  StealthDiagnostics stealth;
  MetricReport report;
  long oracle_queries = 0;
};

inline std::vector<int> evaluation_targets(const ExperimentConfig& c, const Dataset& data) {
  std::vector<int> targets;
  if (c.eval_target == "benign") {
    const ClientSlice& mal = data.partition.clients[data.partition.malicious_index];
    for (int u = 0; u < data.graph.num_nodes; ++u)
      if (mal.global_to_local[u] < 0) targets.push_back(u);
  } else {
    targets.resize(data.graph.num_nodes);
    std::iota(targets.begin(), targets.end(), 0);
  }
  return targets;
}

inline EvaluationSet full_matrix_pairs(const Graph& g, const std::vector<int>& targets) {
  EvaluationSet ev;
  for (size_t i = 0; i < targets.size(); ++i)
    for (size_t j = i + 1; j < targets.size(); ++j) {
      int u = targets[i], v = targets[j];
      ev.pairs.emplace_back(std::min(u, v), std::max(u, v));
      ev.labels.push_back(g.has_edge(u, v) ? 1 : 0);
    }
  return ev;
}

// The deployed federation's data: the ground-truth structure with each
// client's contributed features, which for the malicious client are the
// manipulated ones. Identical to the ground truth when nothing fired.
inline Graph deployed_view(const Dataset& data, const Matrix& malicious_current_features) {
  Graph deployed = data.graph;
  const ClientSlice& mal = data.partition.clients[data.partition.malicious_index];
  check_shape(malicious_current_features.rows == static_cast<int>(mal.nodes.size()) &&
                  malicious_current_features.cols == deployed.feature_dim,
              "deployed_view malicious features");
  for (size_t local = 0; local < mal.nodes.size(); ++local)
    for (int j = 0; j < deployed.feature_dim; ++j)
      deployed.features(mal.nodes[local], j) =
          malicious_current_features(static_cast<int>(local), j);
  return deployed;
}

inline AttackOutcome run_attack_stage(const ExperimentConfig& c, uint64_t seed,
                                      const Dataset& data, const ModelState& global_model,
                                      const Matrix& malicious_original_features,
                                      const Matrix& malicious_current_features) {
  AttackOutcome out;
  Graph deployed = deployed_view(data, malicious_current_features);
  PosteriorOracle oracle(global_model, deployed, c.defense_setting(), c.query_budget,
                         derive_seed(seed, "defense"));

  const ClientSlice& mal = data.partition.clients[data.partition.malicious_index];
  out.shadow = build_shadow_set(mal, oracle, c.attack_negative_ratio,
                                derive_seed(seed, "attack.shadow"), c.entropy_summary);
  out.trained = train_attack_model(out.shadow, c.attack_variant_id(), c.attack_epochs,
                                   derive_seed(seed, "attack.train"), c.attack_lr);

  std::vector<int> targets = evaluation_targets(c, data);
  out.eval = c.full_matrix
                 ? full_matrix_pairs(data.graph, targets)
                 : default_evaluation_pairs(data.graph, targets, derive_seed(seed, "evaluation"));
  out.recon = reconstruct(out.trained.model, oracle, out.eval.pairs);
  out.oracle_queries = oracle.query_log();

  EvalContext ctx{&global_model, &deployed, nullptr, &data.partition, &data.split};
  GraphCache cache = build_graph_cache(deployed);
  ctx.full_cache = &cache;
  out.stealth = stealth_diagnostics(ctx, malicious_original_features, malicious_current_features,
                                    c.cus_similarity_id(), derive_seed(seed, "auc_cus"));
  out.report = full_report(ctx, out.recon, out.eval, out.stealth, seed, c.fingerprint());
  return out;
}

// ---- file emission ----------------------------------------------------------

inline std::string round_trace_csv(const FederationState& st) {
  std::ostringstream o;
  o << "round,global_train_acc,global_val_acc,malicious_local_loss\n";
  for (const auto& r : st.trace)
    o << r.round << ',' << format_double(r.global_train_acc) << ','
      << format_double(r.global_val_acc) << ',' << format_double(r.malicious_local_loss) << '\n';
  return o.str();
}

inline std::string objective_trace_csv(const ManipulationOutcome& m) {
  std::ostringstream o;
  o << "step,J,CE,attraction,repulsion\n";
  for (size_t s = 0; s < m.objective_trace.size(); ++s) {
    const auto& t = m.objective_trace[s];
    o << s << ',' << format_double(t.total) << ',' << format_double(t.ce) << ','
      << format_double(t.attraction) << ',' << format_double(t.repulsion) << '\n';
  }
  return o.str();
}

inline std::string histogram_csv(const Histogram& benign, const Histogram& manipulated) {
  std::ostringstream o;
  o << "bin_left,bin_right,count_benign,count_manipulated\n";
  for (int b = 0; b < Histogram::kBins; ++b) {
    double left = -1.0 + 2.0 * b / Histogram::kBins;
    double right = -1.0 + 2.0 * (b + 1) / Histogram::kBins;
    o << format_double(left) << ',' << format_double(right) << ',' << benign.counts[b] << ','
      << manipulated.counts[b] << '\n';
  }
  return o.str();
}

inline std::string scored_pairs_csv(const ReconstructionResult& r,
                                    const std::vector<int>* true_labels) {
  std::ostringstream o;
  o << "u,v,score";
  if (true_labels) o << ",true_label";
  o << '\n';
  for (size_t i = 0; i < r.pairs.size(); ++i) {
    o << r.pairs[i].first << ',' << r.pairs[i].second << ',' << format_double(r.scores[i]);
    if (true_labels) o << ',' << (*true_labels)[i];
    o << '\n';
  }
  return o.str();
}

struct StageClock {
  using clock = std::chrono::steady_clock;
  clock::time_point t0 = clock::now();
  double take() {
    auto t1 = clock::now();
    double s = std::chrono::duration<double>(t1 - t0).count();
    t0 = t1;
    return s;
  }
};

// Manifest is written exactly once per run directory, before any metric file.
inline void write_manifest(const fs::path& dir, const ExperimentConfig& c, uint64_t seed,
                           bool deterministic,
                           const std::vector<std::pair<std::string, double>>& stage_seconds,
                           const std::vector<std::string>& outputs) {
  nlohmann::ordered_json j;
  j["version"] = kVersion;
  j["config_hash"] = c.fingerprint();
  j["seed"] = seed;
  j["seeds"] = c.seeds;
  j["deterministic"] = deterministic;
  nlohmann::ordered_json t;
  for (const auto& [name, secs] : stage_seconds) t[name] = deterministic ? 0.0 : secs;
  j["stage_seconds"] = t;
  j["outputs"] = outputs;
  write_file_atomic(dir / "manifest.json", j.dump(2) + "\n");
}

// ---- commands ----------------------------------------------------------------

// train: dataset -> (optional manipulation) -> federated training; persists
// the global model, traces, and the manifest.
inline void cmd_train(const ExperimentConfig& c, uint64_t seed, const fs::path& out_dir,
                      bool deterministic) {
  StageClock clock;
  std::vector<std::pair<std::string, double>> timings;

  Dataset data = build_dataset(c, seed);
  timings.emplace_back("load", clock.take());

  TrainOutcome t = run_train_stage(c, seed, data);
  timings.emplace_back("train", clock.take());

  std::vector<std::string> outputs = {"config.resolved", "round_trace.csv", "global_model.bin",
                                      "malicious_features.bin"};
  const ClientSlice& mal = data.partition.clients[data.partition.malicious_index];
  Matrix original = t.manipulation->fired ? t.manipulation->original_features
                                          : mal.subgraph.features;
  Matrix current = t.state.clients[data.partition.malicious_index].features;
  if (t.manipulation->fired) {
    outputs.push_back("objective_trace.csv");
    outputs.push_back("histogram.csv");
  }

  write_manifest(out_dir, c, seed, deterministic, timings, outputs);
  write_file_atomic(out_dir / "config.resolved", c.canonical_dump());
  write_file_atomic(out_dir / "round_trace.csv", round_trace_csv(t.state));
  {
    std::ostringstream model_buf(std::ios::binary);
    save_model(t.state.global_model, model_buf);
    write_file_atomic(out_dir / "global_model.bin", model_buf.str());
  }
  write_file_atomic(out_dir / "malicious_features.bin",
                    encode_matrices({{"original", original}, {"current", current}}));
  if (t.manipulation->fired) {
    write_file_atomic(out_dir / "objective_trace.csv", objective_trace_csv(*t.manipulation));
    EvalContext ctx{&t.state.global_model, &data.graph, &t.state.full_cache, &data.partition,
                    &data.split};
    StealthDiagnostics d = stealth_diagnostics(ctx, original, current, c.cus_similarity_id(),
                                               derive_seed(seed, "auc_cus"));
    write_file_atomic(out_dir / "histogram.csv", histogram_csv(d.hist_before, d.hist_after));
  }
}

// attack: rebuilds the dataset deterministically, loads the trained model,
// runs shadow -> attack training -> reconstruction -> report.
inline MetricReport cmd_attack(const ExperimentConfig& c, uint64_t seed, const fs::path& run_dir) {
  if (!fs::exists(run_dir / "global_model.bin"))
    throw DataError("no trained model in " + run_dir.string() + " (run `train` first)");

  Dataset data = build_dataset(c, seed);
  ModelState global_model = load_model((run_dir / "global_model.bin").string());
  auto mats = decode_matrices(read_file(run_dir / "malicious_features.bin"));
  if (mats.size() != 2) throw DataError("malicious_features.bin: expected 2 matrices");

  AttackOutcome a =
      run_attack_stage(c, seed, data, global_model, mats[0].second, mats[1].second);

  write_file_atomic(run_dir / "scored_pairs.csv", scored_pairs_csv(a.recon, nullptr));
  write_file_atomic(run_dir / "scored_pairs_labeled.csv",
                    scored_pairs_csv(a.recon, &a.eval.labels));
  write_file_atomic(run_dir / "report.json", a.report.to_json().dump(2) + "\n");
  return a.report;
}

// ---- sweep --------------------------------------------------------------------

struct SweepCell {
  std::map<std::string, std::string> overrides;
  std::string label;
};

inline std::vector<SweepCell> expand_grid(const ExperimentConfig& c) {
  if (c.sweep_grid.empty()) throw ConfigError("sweep: config has no sweep.* keys");
  std::vector<SweepCell> cells = {{{}, ""}};
  for (const auto& [key, values] : c.sweep_grid) {
    if (values.empty()) throw ConfigError("sweep: empty value list for " + key);
    std::vector<SweepCell> next;
    for (const auto& cell : cells) {
      for (const auto& v : values) {
        SweepCell nc = cell;
        nc.overrides[key] = v;
        nc.label += (nc.label.empty() ? "" : " ") + key + "=" + v;
        next.push_back(std::move(nc));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

struct CellResult {
  SweepCell cell;
  std::vector<MetricReport> reports;  // per seed
  std::string error;                  // non-empty when the cell failed

  double mean(double MetricReport::*field) const {
    double s = 0.0;
    for (const auto& r : reports) s += r.*field;
    return reports.empty() ? 0.0 : s / reports.size();
  }
  double stddev(double MetricReport::*field) const {
    if (reports.size() < 2) return 0.0;
    double m = mean(field);
    double s = 0.0;
    for (const auto& r : reports) s += (r.*field - m) * (r.*field - m);
    return std::sqrt(s / (reports.size() - 1));
  }
};

inline std::string sweep_csv(const std::vector<CellResult>& results) {
  std::ostringstream o;
  o << "cell,seeds,status,attack_auc_mean,attack_auc_std,attack_precision_mean,"
       "attack_precision_std,attack_ap_mean,attack_ap_std,main_acc_mean,main_acc_std\n";
  for (const auto& r : results) {
    o << '"' << r.cell.label << '"' << ',' << r.reports.size() << ','
      << (r.error.empty() ? "ok" : "failed");
    if (r.error.empty()) {
      o << ',' << format_double(r.mean(&MetricReport::attack_auc)) << ','
        << format_double(r.stddev(&MetricReport::attack_auc)) << ','
        << format_double(r.mean(&MetricReport::attack_precision)) << ','
        << format_double(r.stddev(&MetricReport::attack_precision)) << ','
        << format_double(r.mean(&MetricReport::attack_ap)) << ','
        << format_double(r.stddev(&MetricReport::attack_ap)) << ','
        << format_double(r.mean(&MetricReport::main_acc)) << ','
        << format_double(r.stddev(&MetricReport::main_acc));
    } else {
      o << ",,,,,,,,";
    }
    o << '\n';
  }
  return o.str();
}

// One full pipeline (train + attack) in a cell subdirectory.
inline MetricReport run_cell(const ExperimentConfig& c, uint64_t seed, const fs::path& dir,
                             bool deterministic) {
  cmd_train(c, seed, dir, deterministic);
  return cmd_attack(c, seed, dir);
}

inline std::vector<CellResult> cmd_sweep(const ExperimentConfig& base, const fs::path& out_dir,
                                         bool deterministic, int workers) {
  std::vector<SweepCell> cells = expand_grid(base);
  std::vector<CellResult> results(cells.size());

  struct Task {
    size_t cell_idx;
    uint64_t seed;
  };
  std::vector<Task> tasks;
  for (size_t i = 0; i < cells.size(); ++i) {
    results[i].cell = cells[i];
    results[i].reports.reserve(base.seeds.size());
    for (uint64_t s : base.seeds) tasks.push_back({i, s});
  }

  std::mutex mu;
  std::vector<std::vector<std::pair<uint64_t, MetricReport>>> cell_reports(cells.size());
  std::vector<std::string> cell_errors(cells.size());
  std::atomic<size_t> next{0};

  auto worker = [&]() {
    while (true) {
      size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      const Task& task = tasks[t];
      ExperimentConfig cc = base;
      cc.sweep_grid.clear();
      std::string cell_dir_name = "cell" + std::to_string(task.cell_idx);
      try {
        for (const auto& [k, v] : cells[task.cell_idx].overrides) cc.set(k, v);
        fs::path dir = out_dir / cell_dir_name / ("seed" + std::to_string(task.seed));
        MetricReport rep = run_cell(cc, task.seed, dir, deterministic);
        std::lock_guard<std::mutex> lock(mu);
        cell_reports[task.cell_idx].emplace_back(task.seed, rep);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        if (cell_errors[task.cell_idx].empty()) cell_errors[task.cell_idx] = e.what();
      }
    }
  };

  workers = std::max(1, workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (size_t i = 0; i < cells.size(); ++i) {
    auto& reps = cell_reports[i];
    std::sort(reps.begin(), reps.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [s, r] : reps) results[i].reports.push_back(std::move(r));
    results[i].error = cell_errors[i];
  }
  write_file_atomic(out_dir / "sweep.csv", sweep_csv(results));
  return results;
}

// ---- report -------------------------------------------------------------------

inline std::string summarize_run(const fs::path& dir, std::ostream& warnings) {
  nlohmann::json manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  std::ostringstream o;
  o << "run " << dir.string() << "\n";
  o << "  version:      " << manifest.at("version").get<std::string>() << "\n";
  o << "  config hash:  " << manifest.at("config_hash").get<std::string>() << "\n";
  o << "  seed:         " << manifest.at("seed") << "\n";

  if (fs::exists(dir / "config.resolved")) {
    std::string stored_hash = hex64(fnv1a64(read_file(dir / "config.resolved")));
    if (stored_hash != manifest.at("config_hash").get<std::string>())
      warnings << "warning: " << (dir / "config.resolved").string()
               << " does not match the manifest hash\n";
  }
  if (fs::exists(dir / "report.json")) {
    MetricReport r = MetricReport::from_json(nlohmann::json::parse(read_file(dir / "report.json")));
    if (r.config_hash != manifest.at("config_hash").get<std::string>())
      warnings << "warning: " << (dir / "report.json").string()
               << " carries a different config hash than the manifest\n";
    o << "  attack_auc:        " << format_double(r.attack_auc) << "\n";
    o << "  attack_precision:  " << format_double(r.attack_precision) << "\n";
    o << "  attack_ap:         " << format_double(r.attack_ap) << "\n";
    o << "  main_acc:          " << format_double(r.main_acc) << "\n";
    o << "  auc_cus_before:    " << format_double(r.auc_cus_before) << "\n";
    o << "  auc_cus_after:     " << format_double(r.auc_cus_after) << "\n";
    o << "  hist_overlap_l1:   " << format_double(r.hist_overlap_l1) << "\n";
  } else {
    o << "  (no report.json; attack stage not run)\n";
  }
  return o.str();
}

inline std::string cmd_report(const fs::path& dir, std::ostream& warnings) {
  if (fs::exists(dir / "sweep.csv")) {
    std::ostringstream o;
    o << "sweep " << dir.string() << "\n";
    o << read_file(dir / "sweep.csv");
    // per-cell summaries for completeness
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_directory()) continue;
      for (const auto& seed_dir : fs::directory_iterator(entry)) {
        if (seed_dir.is_directory() && fs::exists(seed_dir.path() / "manifest.json"))
          o << summarize_run(seed_dir.path(), warnings);
      }
    }
    return o.str();
  }
  if (!fs::exists(dir / "manifest.json"))
    throw DataError("no manifest.json in " + dir.string() + " (not a run directory)");
  return summarize_run(dir, warnings);
}

}  // namespace gfl::harness
