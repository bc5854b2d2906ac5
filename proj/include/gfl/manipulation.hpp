// manipulation.hpp -- the malicious client's data-manipulation stage: label
// smoothing, connected-pair attraction, unconnected-pair repulsion, the
// combined objective, and projected gradient descent on local node features.
// The graph structure is never modified, only X.
#pragma once

#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "gfl/federation.hpp"
#include "gfl/gnn.hpp"

namespace gfl {

enum class SmoothingMode {
  Uniform,          // one_hot * (1-eps) + eps/C
  LossNormalized,   // one_hot * (1-eps) + eps/CE(initial posteriors), renormalized
};

struct ManipulationConfig {
  double alpha = 1.0;    // attraction weight on connected pairs
  double beta = 0.01;    // repulsion weight on sampled unconnected pairs
  double lambda = 1.0;   // cross-entropy weight
  double epsilon = 0.1;  // label-smoothing parameter
  double eta = 0.01;     // feature step size
  int steps = 100;
  double negative_sample_ratio = 1.0;  // unconnected pairs per edge per step
  SmoothingMode smoothing = SmoothingMode::Uniform;

  void validate() const {
    if (alpha < 0.0 || beta < 0.0 || lambda < 0.0)
      throw std::invalid_argument("manipulation: weights must be >= 0");
    if (!(epsilon >= 0.0 && epsilon < 1.0))
      throw std::invalid_argument("manipulation: epsilon must be in [0,1)");
    if (eta < 0.0) throw std::invalid_argument("manipulation: eta must be >= 0");
    if (steps < 0) throw std::invalid_argument("manipulation: steps must be >= 0");
    if (negative_sample_ratio < 0.0)
      throw std::invalid_argument("manipulation: negative ratio must be >= 0");
  }
};

// one_hot(y) * (1-eps) + eps/C per entry; rows sum to exactly 1.
inline Matrix smooth_labels(const std::vector<int>& labels, double epsilon, int num_classes) {
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw std::invalid_argument("smooth_labels: epsilon must be in [0,1)");
  Matrix t(static_cast<int>(labels.size()), num_classes, epsilon / num_classes);
  for (size_t i = 0; i < labels.size(); ++i)
    t(static_cast<int>(i), labels[i]) += 1.0 - epsilon;
  return t;
}

// sum over edges of ||f(u) - f(v)||^2
inline double attraction_term(const Matrix& posteriors, const std::vector<Edge>& edges) {
  double s = 0.0;
  for (auto [u, v] : edges)
    s += sqeuclidean_distance(posteriors.row(u), posteriors.row(v), posteriors.cols);
  return s;
}

// sum over sampled unconnected pairs of (1 - cos(f(u), f(v)))^2; the cosine
// of a zero vector is taken as 0.
inline double repulsion_term(const Matrix& posteriors, const std::vector<Edge>& non_edges) {
  double s = 0.0;
  for (auto [u, v] : non_edges) {
    double c = cosine_similarity(posteriors.row(u), posteriors.row(v), posteriors.cols);
    s += (1.0 - c) * (1.0 - c);
  }
  return s;
}

struct ObjectiveParts {
  double total = 0.0;       // J = lambda*CE + alpha*attraction - beta*repulsion
  double ce = 0.0;          // unweighted components
  double attraction = 0.0;
  double repulsion = 0.0;
  Matrix dpost;             // exact dJ/dposteriors, for backward_external
};

// The minimized objective. Descending it pulls connected posteriors together
// (attraction), pushes sampled unconnected posteriors apart (the repulsion
// term enters negatively), and anchors predictions to the smoothed labels.
inline ObjectiveParts combined_objective(const Matrix& posteriors, const std::vector<Edge>& edges,
                                         const Matrix& smoothed_targets,
                                         const std::vector<int>& ce_mask,
                                         const std::vector<Edge>& non_edges,
                                         const ManipulationConfig& cfg) {
  cfg.validate();
  check_shape(posteriors.same_shape(smoothed_targets), "combined_objective targets");
  if (ce_mask.empty()) throw std::invalid_argument("combined_objective: empty CE mask");

  ObjectiveParts out;
  int C = posteriors.cols;
  out.dpost = Matrix(posteriors.rows, posteriors.cols);

  // cross-entropy over the mask (mean form matching loss_and_backward)
  for (int u : ce_mask)
    for (int c = 0; c < C; ++c)
      out.ce -= smoothed_targets(u, c) * std::log(posteriors(u, c) + nn::Tape::kLogFloor);
  out.ce /= static_cast<double>(ce_mask.size());
  double ce_w = cfg.lambda / static_cast<double>(ce_mask.size());
  for (int u : ce_mask)
    for (int c = 0; c < C; ++c)
      out.dpost(u, c) -= ce_w * smoothed_targets(u, c) / (posteriors(u, c) + nn::Tape::kLogFloor);

  // attraction: d/df(u) of ||f(u)-f(v)||^2 is 2(f(u)-f(v))
  for (auto [u, v] : edges) {
    const double* pu = posteriors.row(u);
    const double* pv = posteriors.row(v);
    for (int c = 0; c < C; ++c) {
      double d = pu[c] - pv[c];
      out.attraction += d * d;
      out.dpost(u, c) += cfg.alpha * 2.0 * d;
      out.dpost(v, c) -= cfg.alpha * 2.0 * d;
    }
  }

  // repulsion enters J with a minus sign; gradient of cos via quotient rule
  for (auto [u, v] : non_edges) {
    const double* pu = posteriors.row(u);
    const double* pv = posteriors.row(v);
    double dot = 0.0, nu2 = 0.0, nv2 = 0.0;
    for (int c = 0; c < C; ++c) {
      dot += pu[c] * pv[c];
      nu2 += pu[c] * pu[c];
      nv2 += pv[c] * pv[c];
    }
    if (nu2 == 0.0 || nv2 == 0.0) {
      out.repulsion += 1.0;  // cos defined 0, gradient 0
      continue;
    }
    double nu = std::sqrt(nu2), nv = std::sqrt(nv2);
    double cos = dot / (nu * nv);
    double term = (1.0 - cos) * (1.0 - cos);
    out.repulsion += term;
    // dJ/df(u) = -beta * 2(1-cos) * (-dcos/df(u)) = beta*2(1-cos)*dcos/df(u)
    double w = cfg.beta * 2.0 * (1.0 - cos);
    for (int c = 0; c < C; ++c) {
      double dcos_du = pv[c] / (nu * nv) - cos * pu[c] / nu2;
      double dcos_dv = pu[c] / (nu * nv) - cos * pv[c] / nv2;
      out.dpost(u, c) += w * dcos_du;
      out.dpost(v, c) += w * dcos_dv;
    }
  }

  out.total = cfg.lambda * out.ce + cfg.alpha * out.attraction - cfg.beta * out.repulsion;
  return out;
}

struct StepTrace {
  double total = 0.0, ce = 0.0, attraction = 0.0, repulsion = 0.0;
};

struct ManipulatedDataset {
  Matrix original_features;
  Matrix manipulated_features;
  Matrix smoothed_targets;
  std::vector<StepTrace> objective_trace;  // steps+1 entries; last is the final state
  // J at the first and last iterate under one shared non-edge sample, so the
  // start/end comparison is free of per-step resampling noise
  double j_initial = 0.0;
  double j_final = 0.0;
};

namespace detail {

inline std::vector<Edge> sample_non_edges(const Graph& g, size_t count, std::mt19937_64& rng) {
  std::unordered_set<long> edge_keys;
  edge_keys.reserve(g.edges.size() * 2);
  for (auto [u, v] : g.edges) edge_keys.insert(static_cast<long>(u) * g.num_nodes + v);
  std::uniform_int_distribution<int> pick(0, g.num_nodes - 1);
  std::vector<Edge> out;
  out.reserve(count);
  size_t guard = 0, guard_max = 1000 * count + 1000;
  while (out.size() < count && guard < guard_max) {
    ++guard;
    int u = pick(rng), v = pick(rng);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (edge_keys.count(static_cast<long>(u) * g.num_nodes + v)) continue;
    out.emplace_back(u, v);
  }
  if (out.size() < count)
    throw std::runtime_error("sample_non_edges: graph too dense to sample non-edges");
  return out;
}

inline uint64_t edge_set_hash(const std::vector<Edge>& edges) {
  std::string buf;
  buf.reserve(edges.size() * 8);
  for (auto [u, v] : edges) {
    buf += std::to_string(u);
    buf += ',';
    buf += std::to_string(v);
    buf += ';';
  }
  return fnv1a64(buf);
}

}  // namespace detail

// Projected gradient descent on the malicious client's node features. Each
// step: forward, resample non-edges, evaluate the combined objective, pull
// its gradient back to X, step by -eta, clip every feature column into the
// [min,max] box of the original features (or of box_reference when the PGD
// is re-run from already-manipulated features). Structure and labels are
// untouched.
inline ManipulatedDataset pgd_manipulate(const ModelState& local_model, const Graph& g_m,
                                         const GraphCache& gc, const Matrix& X_m,
                                         const std::vector<int>& labels,
                                         const std::vector<int>& ce_mask,
                                         const ManipulationConfig& cfg, uint64_t seed,
                                         const Matrix* box_reference = nullptr) {
  cfg.validate();
  if (static_cast<int>(labels.size()) != g_m.num_nodes)
    throw std::invalid_argument("pgd_manipulate: label count mismatch");

  ManipulatedDataset out;
  out.original_features = X_m;

  Matrix smoothed = smooth_labels(labels, cfg.epsilon, g_m.num_classes);
  if (cfg.smoothing == SmoothingMode::LossNormalized) {
    // alternative reading of the smoothing rule: additive term eps / CE of
    // the untouched model, then rows renormalized to stay stochastic
    ForwardTape ft0 = forward(local_model, gc, X_m);
    const Matrix& P0 = ft0.posteriors();
    Matrix onehot = one_hot(labels, g_m.num_classes);
    double ce0 = 0.0;
    for (int u : ce_mask)
      for (int c = 0; c < P0.cols; ++c)
        ce0 -= onehot(u, c) * std::log(P0(u, c) + nn::Tape::kLogFloor);
    ce0 /= static_cast<double>(ce_mask.size());
    double add = ce0 > 0.0 ? cfg.epsilon / ce0 : 0.0;
    smoothed = onehot;
    for (double& v : smoothed.a) v = v * (1.0 - cfg.epsilon) + add;
    for (int r = 0; r < smoothed.rows; ++r) {
      double s = 0.0;
      for (int c = 0; c < smoothed.cols; ++c) s += smoothed(r, c);
      for (int c = 0; c < smoothed.cols; ++c) smoothed(r, c) /= s;
    }
  }
  out.smoothed_targets = smoothed;

  // projection box over the original data, per feature column
  const Matrix& box_src = box_reference ? *box_reference : X_m;
  check_shape(box_src.cols == X_m.cols, "pgd_manipulate box reference");
  std::vector<double> lo(X_m.cols), hi(X_m.cols);
  for (int j = 0; j < X_m.cols; ++j) {
    lo[j] = hi[j] = box_src(0, j);
    for (int i = 1; i < box_src.rows; ++i) {
      lo[j] = std::min(lo[j], box_src(i, j));
      hi[j] = std::max(hi[j], box_src(i, j));
    }
  }

  size_t neg_count = static_cast<size_t>(
      std::llround(cfg.negative_sample_ratio * static_cast<double>(g_m.num_edges())));
  uint64_t hash_before = detail::edge_set_hash(g_m.edges);

  Matrix X = X_m;
  for (int step = 0; step <= cfg.steps; ++step) {
    ForwardTape ft = forward(local_model, gc, X);
    auto rng = make_rng(derive_seed(seed, "manipulation.negatives", static_cast<uint64_t>(step)));
    std::vector<Edge> non_edges = detail::sample_non_edges(g_m, neg_count, rng);
    ObjectiveParts parts =
        combined_objective(ft.posteriors(), g_m.edges, smoothed, ce_mask, non_edges, cfg);
    out.objective_trace.push_back({parts.total, parts.ce, parts.attraction, parts.repulsion});
    if (!std::isfinite(parts.total))
      throw std::runtime_error("pgd_manipulate: non-finite objective at step " +
                               std::to_string(step));
    if (step == cfg.steps) break;  // final entry records the end state only

    Gradients grads = backward_external(ft, parts.dpost);
    if (cfg.eta != 0.0) {
      for (int i = 0; i < X.rows; ++i)
        for (int j = 0; j < X.cols; ++j) {
          double v = X(i, j) - cfg.eta * grads.input_grads(i, j);
          X(i, j) = std::clamp(v, lo[j], hi[j]);
        }
    }
  }
  if (detail::edge_set_hash(g_m.edges) != hash_before)
    throw std::logic_error("pgd_manipulate: edge set changed");  // structurally impossible

  // start/end objective under one shared sample
  {
    auto rng = make_rng(derive_seed(seed, "manipulation.negatives.eval"));
    std::vector<Edge> eval_sample = detail::sample_non_edges(g_m, neg_count, rng);
    ForwardTape f0 = forward(local_model, gc, X_m);
    out.j_initial =
        combined_objective(f0.posteriors(), g_m.edges, smoothed, ce_mask, eval_sample, cfg).total;
    ForwardTape f1 = forward(local_model, gc, X);
    out.j_final =
        combined_objective(f1.posteriors(), g_m.edges, smoothed, ce_mask, eval_sample, cfg).total;
  }

  out.manipulated_features = std::move(X);
  return out;
}

// --- homophily diagnostics ------------------------------------------------

struct Histogram {
  static constexpr int kBins = 64;  // over [-1, 1]
  std::vector<long> counts = std::vector<long>(kBins, 0);

  long total() const {
    long t = 0;
    for (long c : counts) t += c;
    return t;
  }
};

// Cosine similarity across all connected pairs of `rows` (features or
// posteriors), binned over [-1, 1].
inline Histogram homophily_report(const Graph& g, const Matrix& rows) {
  if (rows.rows != g.num_nodes) throw std::invalid_argument("homophily_report: row count");
  Histogram h;
  for (auto [u, v] : g.edges) {
    double c = cosine_similarity(rows.row(u), rows.row(v), rows.cols);
    int bin = static_cast<int>(std::floor((c + 1.0) / 2.0 * Histogram::kBins));
    bin = std::clamp(bin, 0, Histogram::kBins - 1);
    h.counts[bin] += 1;
  }
  return h;
}

// L1 distance between the normalized histograms, in [0, 2].
inline double histogram_overlap_l1(const Histogram& a, const Histogram& b) {
  double ta = static_cast<double>(a.total()), tb = static_cast<double>(b.total());
  double s = 0.0;
  for (int i = 0; i < Histogram::kBins; ++i) {
    double pa = ta > 0 ? a.counts[i] / ta : 0.0;
    double pb = tb > 0 ? b.counts[i] / tb : 0.0;
    s += std::abs(pa - pb);
  }
  return s;
}

// --- federation hook --------------------------------------------------------

struct ManipulationPlan {
  ManipulationConfig config;
  int fire_round = 1;    // first round at whose start the manipulation runs
  int refresh_every = 0; // 0: run once; r > 0: re-run every r rounds after that
  // White-box: run PGD against the malicious client's current model, i.e. the
  // global parameters it just downloaded for this round. Black-box: train a
  // private surrogate of the malicious architecture on the clean local data.
  bool use_client_model = true;
  int surrogate_epochs = 100;
  // The attacker trains on every node it holds, not just the protocol's
  // train-mask slice; benign clients keep the protocol mask.
  bool full_local_labels = true;
  uint64_t seed = 0;
};

struct ManipulationOutcome {
  bool fired = false;
  int fire_count = 0;
  Matrix original_features;
  Matrix manipulated_features;
  Matrix smoothed_targets;
  std::vector<StepTrace> objective_trace;  // from the first PGD run
  double j_initial = 0.0;
  double j_final = 0.0;
};

// Builds the run_round hook. Uses only the malicious client's own data plus
// the parameters the protocol hands it anyway; the projection box is always
// the original clean feature range, so repeated refreshes cannot drift.
inline ManipulationHook make_manipulation_hook(ManipulationPlan plan,
                                               std::shared_ptr<ManipulationOutcome> outcome) {
  auto surrogate_cache = std::make_shared<ModelState>();
  return [plan, outcome, surrogate_cache](FederationState& st, int client_index) {
    int round = st.round_index;
    bool fire = round == plan.fire_round ||
                (plan.refresh_every > 0 && round > plan.fire_round &&
                 (round - plan.fire_round) % plan.refresh_every == 0);
    if (!fire) return;

    const ClientSlice& slice = st.partition.clients[client_index];
    ClientRuntime& rt = st.clients[client_index];
    if (!outcome->fired) outcome->original_features = rt.features;
    if (plan.full_local_labels && static_cast<int>(rt.train_mask.size()) < rt.features.rows) {
      rt.train_mask.resize(rt.features.rows);
      std::iota(rt.train_mask.begin(), rt.train_mask.end(), 0);
    }

    const ModelState* local_model = nullptr;
    if (plan.use_client_model) {
      // run_round copies the current global parameters into the client model
      // before this hook runs
      local_model = &st.client_models[client_index];
    } else {
      if (surrogate_cache->params.empty()) {
        *surrogate_cache = init_model(st.config.malicious_arch, st.full_graph.feature_dim,
                                      st.full_graph.num_classes,
                                      derive_seed(plan.seed, "manipulation.surrogate_init"));
        AdamState opt = AdamState::for_model(*surrogate_cache, st.config.learning_rate);
        Matrix clean_targets = one_hot(slice.subgraph.labels, st.full_graph.num_classes);
        train_local(*surrogate_cache, rt.cache, outcome->original_features, clean_targets,
                    rt.train_mask, plan.surrogate_epochs, opt);
      }
      local_model = surrogate_cache.get();
    }

    ManipulatedDataset md = pgd_manipulate(
        *local_model, slice.subgraph, rt.cache, rt.features, slice.subgraph.labels, rt.train_mask,
        plan.config, derive_seed(plan.seed, "manipulation.pgd", static_cast<uint64_t>(round)),
        &outcome->original_features);

    rt.features = md.manipulated_features;
    rt.targets = md.smoothed_targets;
    outcome->manipulated_features = rt.features;
    outcome->smoothed_targets = rt.targets;
    if (!outcome->fired) {
      outcome->objective_trace = std::move(md.objective_trace);
      outcome->j_initial = md.j_initial;
      outcome->j_final = md.j_final;
    }
    outcome->fired = true;
    outcome->fire_count += 1;
  };
}

}  // namespace gfl
