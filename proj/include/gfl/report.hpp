// report.hpp -- assembled metrics for one run, serialized as flat JSON with
// fixed keys.
#pragma once

#include <string>

#include <json.hpp>

#include "gfl/attack.hpp"
#include "gfl/manipulation.hpp"
#include "gfl/metrics.hpp"

namespace gfl {

struct MetricReport {
  double attack_auc = 0.0;
  double attack_precision = 0.0;  // at threshold 0.5
  double attack_ap = 0.0;
  double main_acc = 0.0;          // global model on the test mask
  double auc_cus_before = 0.0;
  double auc_cus_after = 0.0;
  double hist_overlap_l1 = 0.0;
  uint64_t seed = 0;
  std::string config_hash;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["attack_auc"] = attack_auc;
    j["attack_precision"] = attack_precision;
    j["attack_ap"] = attack_ap;
    j["main_acc"] = main_acc;
    j["auc_cus_before"] = auc_cus_before;
    j["auc_cus_after"] = auc_cus_after;
    j["hist_overlap_l1"] = hist_overlap_l1;
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    return j;
  }

  static MetricReport from_json(const nlohmann::json& j) {
    MetricReport r;
    r.attack_auc = j.at("attack_auc").get<double>();
    r.attack_precision = j.at("attack_precision").get<double>();
    r.attack_ap = j.at("attack_ap").get<double>();
    r.main_acc = j.at("main_acc").get<double>();
    r.auc_cus_before = j.at("auc_cus_before").get<double>();
    r.auc_cus_after = j.at("auc_cus_after").get<double>();
    r.hist_overlap_l1 = j.at("hist_overlap_l1").get<double>();
    r.seed = j.at("seed").get<uint64_t>();
    r.config_hash = j.at("config_hash").get<std::string>();
    return r;
  }
};

// Everything the evaluator needs to score a finished run.
struct EvalContext {
  const ModelState* global_model = nullptr;
  const Graph* full_graph = nullptr;
  const GraphCache* full_cache = nullptr;
  const Partition* partition = nullptr;
  const DataSplit* split = nullptr;
};

// Stealth diagnostics are computed on the malicious client's subgraph: the
// final global model's posteriors under the original features ("before") and
// the manipulated ones ("after"). In ablation runs the two coincide exactly.
struct StealthDiagnostics {
  double auc_cus_before = 0.0;
  double auc_cus_after = 0.0;
  double hist_overlap_l1 = 0.0;
  Histogram hist_before;
  Histogram hist_after;
};

inline StealthDiagnostics stealth_diagnostics(const EvalContext& ctx,
                                              const Matrix& malicious_original_features,
                                              const Matrix& malicious_current_features,
                                              SimilarityId similarity, uint64_t seed) {
  const ClientSlice& mal = ctx.partition->clients[ctx.partition->malicious_index];
  GraphCache cache = build_graph_cache(mal.subgraph);
  Matrix post_before =
      forward(*ctx.global_model, cache, malicious_original_features).posteriors();
  Matrix post_after =
      forward(*ctx.global_model, cache, malicious_current_features).posteriors();

  StealthDiagnostics d;
  d.auc_cus_before = auc_cus(mal.subgraph, post_before, similarity, seed);
  d.auc_cus_after = auc_cus(mal.subgraph, post_after, similarity, seed);
  d.hist_before = homophily_report(mal.subgraph, post_before);
  d.hist_after = homophily_report(mal.subgraph, post_after);
  d.hist_overlap_l1 = histogram_overlap_l1(d.hist_before, d.hist_after);
  return d;
}

// Joins the attacker's scores with the sealed evaluation labels and the
// stealth diagnostics into one report.
inline MetricReport full_report(const EvalContext& ctx, const ReconstructionResult& attack,
                                const EvaluationSet& eval, const StealthDiagnostics& stealth,
                                uint64_t seed, const std::string& config_hash) {
  if (attack.scores.size() != eval.labels.size())
    throw std::invalid_argument("full_report: scores and evaluation labels misaligned");
  MetricReport r;
  r.attack_auc = auc(attack.scores, eval.labels);
  auto prec = precision_metrics(attack.scores, eval.labels, attack.threshold);
  r.attack_precision = prec.precision;
  r.attack_ap = prec.average_precision;
  Matrix post =
      forward(*ctx.global_model, *ctx.full_cache, ctx.full_graph->features).posteriors();
  r.main_acc = accuracy(post, ctx.full_graph->labels, ctx.split->test_mask);
  r.auc_cus_before = stealth.auc_cus_before;
  r.auc_cus_after = stealth.auc_cus_after;
  r.hist_overlap_l1 = stealth.hist_overlap_l1;
  r.seed = seed;
  r.config_hash = config_hash;
  return r;
}

}  // namespace gfl
