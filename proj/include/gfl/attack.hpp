// attack.hpp -- graph reconstruction from queried posteriors: shadow pair set
// built from the malicious client's own subgraph, attack classifiers (MLP and
// multi-head self-attention over feature-group tokens), adjacency scoring,
// and the sealed evaluation-pair universe.
//
// Everything here sees the federation only through PosteriorOracle: no global
// parameters, no benign edges, no ground-truth labels.
#pragma once

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gfl/adam.hpp"
#include "gfl/autodiff.hpp"
#include "gfl/federation.hpp"
#include "gfl/pair_features.hpp"

namespace gfl {

enum class AttackVariant { Mlp, Attention };

inline const char* attack_variant_name(AttackVariant v) {
  return v == AttackVariant::Mlp ? "mlp" : "attention";
}

inline AttackVariant attack_variant_from_name(const std::string& s) {
  if (s == "mlp") return AttackVariant::Mlp;
  if (s == "attention") return AttackVariant::Attention;
  throw ConfigError("unknown attack variant '" + s + "' (expected mlp|attention)");
}

struct ShadowPairSet {
  std::vector<Edge> pairs;  // global node ids
  std::vector<int> labels;  // 1 = edge, 0 = sampled non-edge
  Matrix features;          // |pairs| x feature dim
  int num_classes = 0;
  bool entropy_summary = false;
  size_t positive_count = 0;
  size_t negative_count = 0;
};

namespace detail {

inline Matrix pair_feature_matrix(const std::vector<Edge>& pairs,
                                  const std::unordered_map<int, std::vector<double>>& posteriors,
                                  int num_classes, bool entropy_summary) {
  Matrix out(static_cast<int>(pairs.size()), PairFeatureVector::dim(num_classes, entropy_summary));
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& fu = posteriors.at(pairs[i].first);
    const auto& fv = posteriors.at(pairs[i].second);
    auto flat = pair_features(fu, fv).flatten(entropy_summary);
    for (size_t j = 0; j < flat.size(); ++j) out(static_cast<int>(i), static_cast<int>(j)) = flat[j];
  }
  return out;
}

// queries each distinct node exactly once
inline std::unordered_map<int, std::vector<double>> fetch_posteriors(
    PosteriorOracle& oracle, const std::vector<Edge>& pairs) {
  std::vector<int> ids;
  ids.reserve(pairs.size() * 2);
  for (auto [u, v] : pairs) {
    ids.push_back(u);
    ids.push_back(v);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  auto vecs = oracle.query(ids);
  std::unordered_map<int, std::vector<double>> map;
  map.reserve(ids.size());
  for (size_t i = 0; i < ids.size(); ++i) map[ids[i]] = std::move(vecs[i]);
  return map;
}

}  // namespace detail

// Positives are all of the malicious client's local edges; negatives are a
// seeded uniform sample of its local non-edges. Posteriors come only from
// the oracle.
inline ShadowPairSet build_shadow_set(const ClientSlice& malicious, PosteriorOracle& oracle,
                                      double negative_ratio, uint64_t seed,
                                      bool entropy_summary = false) {
  const Graph& sub = malicious.subgraph;
  if (sub.edges.empty()) throw std::invalid_argument("build_shadow_set: subgraph has no edges");

  ShadowPairSet shadow;
  shadow.num_classes = oracle.num_classes();
  shadow.entropy_summary = entropy_summary;
  for (auto [lu, lv] : sub.edges) {
    shadow.pairs.emplace_back(malicious.local_to_global[lu], malicious.local_to_global[lv]);
    shadow.labels.push_back(1);
  }
  shadow.positive_count = shadow.pairs.size();

  size_t neg_count = static_cast<size_t>(
      std::llround(negative_ratio * static_cast<double>(sub.num_edges())));
  auto rng = make_rng(derive_seed(seed, "shadow.negatives"));
  std::uniform_int_distribution<int> pick(0, sub.num_nodes - 1);
  std::unordered_set<long> seen;
  size_t guard = 0, guard_max = 1000 * neg_count + 1000;
  while (shadow.negative_count < neg_count && guard < guard_max) {
    ++guard;
    int u = pick(rng), v = pick(rng);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (sub.has_edge(u, v)) continue;
    long key = static_cast<long>(u) * sub.num_nodes + v;
    if (!seen.insert(key).second) continue;
    shadow.pairs.emplace_back(malicious.local_to_global[u], malicious.local_to_global[v]);
    shadow.labels.push_back(0);
    shadow.negative_count += 1;
  }
  if (shadow.negative_count < neg_count)
    throw std::runtime_error("build_shadow_set: could not sample enough local non-edges");

  auto posteriors = detail::fetch_posteriors(oracle, shadow.pairs);
  shadow.features =
      detail::pair_feature_matrix(shadow.pairs, posteriors, shadow.num_classes, entropy_summary);
  return shadow;
}

// Binary classifier over pair features. MLP: in -> 64 -> 32 -> 1. Attention:
// each feature group embedded to d_emb as one token (scalars via 1 x d_emb,
// blocks via C x d_emb), one multi-head self-attention layer, mean pool over
// tokens, fully connected head.
struct AttackModel {
  AttackVariant variant = AttackVariant::Mlp;
  int num_classes = 0;
  bool entropy_summary = false;
  std::vector<NamedParam> params;

  static constexpr int kEmbedDim = 32;
  static constexpr int kHeads = 4;
  static constexpr int kMlpHidden1 = 64;
  static constexpr int kMlpHidden2 = 32;

  int input_dim() const { return PairFeatureVector::dim(num_classes, entropy_summary); }
  int token_count() const { return 8 + 4 + (entropy_summary ? 4 : 0); }
};

inline AttackModel init_attack_model(AttackVariant variant, int num_classes, uint64_t seed,
                                     bool entropy_summary = false) {
  AttackModel m;
  m.variant = variant;
  m.num_classes = num_classes;
  m.entropy_summary = entropy_summary;
  auto rng = make_rng(derive_seed(seed, "attack.init"));
  if (variant == AttackVariant::Mlp) {
    int d = m.input_dim();
    m.params.push_back({"W1", detail::glorot(d, AttackModel::kMlpHidden1, rng)});
    m.params.push_back({"b1", Matrix(1, AttackModel::kMlpHidden1)});
    m.params.push_back({"W2", detail::glorot(AttackModel::kMlpHidden1, AttackModel::kMlpHidden2, rng)});
    m.params.push_back({"b2", Matrix(1, AttackModel::kMlpHidden2)});
    m.params.push_back({"W3", detail::glorot(AttackModel::kMlpHidden2, 1, rng)});
    m.params.push_back({"b3", Matrix(1, 1)});
  } else {
    int de = AttackModel::kEmbedDim;
    int T = m.token_count();
    for (int t = 0; t < T; ++t) {
      int gd = (t < 8 || t >= 12) ? 1 : num_classes;  // scalar tokens vs block tokens
      m.params.push_back({"emb" + std::to_string(t) + ".W", detail::glorot(gd, de, rng)});
      m.params.push_back({"emb" + std::to_string(t) + ".b", Matrix(1, de)});
    }
    for (const char* n : {"Wq", "Wk", "Wv", "Wo"})
      m.params.push_back({n, detail::glorot(de, de, rng)});
    for (const char* n : {"bq", "bk", "bv", "bo"}) m.params.push_back({std::string(n), Matrix(1, de)});
    m.params.push_back({"Wf", detail::glorot(de, 1, rng)});
    m.params.push_back({"bf", Matrix(1, 1)});
  }
  return m;
}

namespace detail {

// Appends the attack model's forward graph to the tape; returns the logits
// node (B x 1). x_node holds the B x input_dim pair-feature matrix.
inline int attack_logits(nn::Tape& t, const AttackModel& m, const std::vector<int>& pv,
                         int x_node) {
  if (m.variant == AttackVariant::Mlp) {
    int h1 = t.relu(t.add_rowvec(t.matmul(x_node, pv[0]), pv[1]));
    int h2 = t.relu(t.add_rowvec(t.matmul(h1, pv[2]), pv[3]));
    return t.add_rowvec(t.matmul(h2, pv[4]), pv[5]);
  }

  int C = m.num_classes;
  int T = m.token_count();
  int de = AttackModel::kEmbedDim;
  int dh = de / AttackModel::kHeads;

  // feature-group tokens: 8 scalar distances, 4 element-wise blocks, then
  // optional entropy-summary scalars
  std::vector<int> tokens;
  tokens.reserve(T);
  int col = 0;
  for (int tok = 0; tok < T; ++tok) {
    int gd = (tok < 8 || tok >= 12) ? 1 : C;
    int slice = t.slice_cols(x_node, col, col + gd);
    col += gd;
    tokens.push_back(t.add_rowvec(t.matmul(slice, pv[2 * tok]), pv[2 * tok + 1]));
  }
  int stacked = t.stack_tokens(tokens);  // (B*T) x de

  int base = 2 * T;
  int q = t.add_rowvec(t.matmul(stacked, pv[base + 0]), pv[base + 4]);
  int k = t.add_rowvec(t.matmul(stacked, pv[base + 1]), pv[base + 5]);
  int v = t.add_rowvec(t.matmul(stacked, pv[base + 2]), pv[base + 6]);

  std::vector<int> head_outs;
  head_outs.reserve(AttackModel::kHeads);
  for (int h = 0; h < AttackModel::kHeads; ++h) {
    int qh = t.slice_cols(q, h * dh, (h + 1) * dh);
    int kh = t.slice_cols(k, h * dh, (h + 1) * dh);
    int vh = t.slice_cols(v, h * dh, (h + 1) * dh);
    int scores = t.scalar_mul(t.block_matmul_nt(qh, kh, T), 1.0 / std::sqrt(double(dh)));
    int attn = t.row_softmax(scores);
    head_outs.push_back(t.block_matmul_nn(attn, vh, T));
  }
  int merged = t.concat_cols(head_outs);                                    // (B*T) x de
  int projected = t.add_rowvec(t.matmul(merged, pv[base + 3]), pv[base + 7]);
  int pooled = t.mean_pool_blocks(projected, T);                            // B x de
  return t.add_rowvec(t.matmul(pooled, pv[base + 8]), pv[base + 9]);        // B x 1
}

}  // namespace detail

// Edge probabilities in (0,1) for each row of `features`.
inline std::vector<double> attack_scores(const AttackModel& m, const Matrix& features) {
  nn::Tape t;
  int x = t.constant(features);
  std::vector<int> pv;
  pv.reserve(m.params.size());
  for (const auto& p : m.params) pv.push_back(t.constant(p.value));
  int logits = detail::attack_logits(t, m, pv, x);
  int probs = t.sigmoid(logits);
  const Matrix& P = t.val(probs);
  return std::vector<double>(P.a.begin(), P.a.end());
}

struct AttackTrainResult {
  AttackModel model;
  double train_auc = 0.0;
  std::vector<double> loss_trace;
};

// Full-batch binary cross-entropy with Adam (lr 0.001 by default).
inline AttackTrainResult train_attack_model(const ShadowPairSet& shadow, AttackVariant variant,
                                            int epochs, uint64_t seed, double lr = 0.001) {
  if (shadow.pairs.empty()) throw std::invalid_argument("train_attack_model: empty shadow set");
  if (shadow.positive_count == 0 || shadow.negative_count == 0)
    throw std::invalid_argument("train_attack_model: shadow set must contain both classes");

  AttackTrainResult res;
  res.model = init_attack_model(variant, shadow.num_classes, seed, shadow.entropy_summary);
  AttackModel& m = res.model;

  Matrix labels(static_cast<int>(shadow.labels.size()), 1);
  for (size_t i = 0; i < shadow.labels.size(); ++i)
    labels(static_cast<int>(i), 0) = shadow.labels[i];

  AdamState opt = AdamState::for_params(m.params, lr);

  res.loss_trace.reserve(epochs);
  for (int e = 0; e < epochs; ++e) {
    nn::Tape t;
    int x = t.constant(shadow.features);
    std::vector<int> pv;
    pv.reserve(m.params.size());
    for (const auto& p : m.params) pv.push_back(t.input(p.value, true));
    int logits = detail::attack_logits(t, m, pv, x);
    int loss = t.bce_with_logits(logits, labels);
    res.loss_trace.push_back(t.val(loss)(0, 0));
    t.backward(loss);
    std::vector<Matrix> grads;
    grads.reserve(pv.size());
    for (int node : pv) grads.push_back(t.grad(node));
    adam_step(opt, m.params, grads);
  }

  auto scores = attack_scores(m, shadow.features);
  res.train_auc = auc(scores, shadow.labels);
  return res;
}

struct ReconstructionResult {
  std::vector<Edge> pairs;           // deduplicated, first-seen order
  std::vector<double> scores;        // sigmoid outputs, aligned with pairs
  double threshold = 0.5;
  std::vector<Edge> predicted_edges; // scores >= threshold
  std::string universe = "candidate list";
};

// Scores every candidate pair, querying each distinct node's posterior once.
inline ReconstructionResult reconstruct(const AttackModel& model, PosteriorOracle& oracle,
                                        const std::vector<Edge>& candidate_pairs) {
  ReconstructionResult res;
  std::unordered_set<long> seen;
  seen.reserve(candidate_pairs.size() * 2);
  for (auto [u, v] : candidate_pairs) {
    if (u > v) std::swap(u, v);
    long key = static_cast<long>(u) * (oracle.num_nodes() + 1) + v;
    if (seen.insert(key).second) res.pairs.emplace_back(u, v);
  }
  if (res.pairs.empty()) return res;

  auto posteriors = detail::fetch_posteriors(oracle, res.pairs);
  Matrix feats = detail::pair_feature_matrix(res.pairs, posteriors, model.num_classes,
                                             model.entropy_summary);
  res.scores = attack_scores(model, feats);
  for (size_t i = 0; i < res.pairs.size(); ++i)
    if (res.scores[i] >= res.threshold) res.predicted_edges.push_back(res.pairs[i]);
  return res;
}

// Balanced evaluation universe: every ground-truth edge inside the target
// node set plus an equal count of sampled non-edges. Labels stay here, on
// the evaluator's side; the attacker path receives pairs() only.
struct EvaluationSet {
  std::vector<Edge> pairs;
  std::vector<int> labels;  // consumed by eval-defense, never by the attacker
};

inline EvaluationSet default_evaluation_pairs(const Graph& ground_truth,
                                              const std::vector<int>& target_nodes,
                                              uint64_t seed) {
  std::vector<char> in_target(ground_truth.num_nodes, 0);
  for (int u : target_nodes) {
    if (u < 0 || u >= ground_truth.num_nodes)
      throw std::invalid_argument("default_evaluation_pairs: node id out of range");
    in_target[u] = 1;
  }
  EvaluationSet ev;
  for (auto [u, v] : ground_truth.edges) {
    if (in_target[u] && in_target[v]) {
      ev.pairs.emplace_back(u, v);
      ev.labels.push_back(1);
    }
  }
  if (ev.pairs.empty())
    throw std::invalid_argument("default_evaluation_pairs: target set has no internal edges");

  size_t want = ev.pairs.size();
  std::vector<int> targets(target_nodes);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  auto rng = make_rng(derive_seed(seed, "evaluation.negatives"));
  std::uniform_int_distribution<size_t> pick(0, targets.size() - 1);
  std::unordered_set<long> seen;
  size_t added = 0, guard = 0, guard_max = 1000 * want + 1000;
  while (added < want && guard < guard_max) {
    ++guard;
    int u = targets[pick(rng)], v = targets[pick(rng)];
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (ground_truth.has_edge(u, v)) continue;
    long key = static_cast<long>(u) * ground_truth.num_nodes + v;
    if (!seen.insert(key).second) continue;
    ev.pairs.emplace_back(u, v);
    ev.labels.push_back(0);
    ++added;
  }
  if (added < want)
    throw std::runtime_error("default_evaluation_pairs: not enough non-edges in target set");
  return ev;
}

}  // namespace gfl
