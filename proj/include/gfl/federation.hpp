// federation.hpp -- horizontal GFL rounds: per-client local training, size-
// weighted parameter aggregation, and the query-only posterior oracle the
// attacker is limited to.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gfl/defense.hpp"
#include "gfl/metrics.hpp"
#include "gfl/partition.hpp"
#include "gfl/train.hpp"

namespace gfl {

struct FederationConfig {
  int rounds = 100;        // T
  int local_epochs = 1;    // E
  int k = 3;
  double learning_rate = 0.01;
  ModelArch server_arch;
  ModelArch malicious_arch;  // local surrogate used by the manipulation stage
  uint64_t seed = 0;

  void validate() const {
    if (rounds < 1 || local_epochs < 1 || k < 2)
      throw std::invalid_argument("federation: need rounds >= 1, local_epochs >= 1, k >= 2");
    server_arch.validate();
    malicious_arch.validate();
  }
};

// Every parameter tensor of the result is sum_k (N_k / sum_j N_j) * param_k.
inline ModelState fedavg_aggregate(const std::vector<ModelState>& client_models,
                                   const std::vector<int>& client_sizes) {
  if (client_models.empty() || client_models.size() != client_sizes.size())
    throw std::invalid_argument("fedavg_aggregate: empty or mismatched inputs");
  double total = 0.0;
  for (int s : client_sizes) {
    if (s <= 0) throw std::invalid_argument("fedavg_aggregate: client sizes must be positive");
    total += s;
  }
  for (const auto& m : client_models)
    if (!m.same_shapes(client_models[0]))
      throw std::invalid_argument("fedavg_aggregate: client parameter shapes differ");

  ModelState out = client_models[0];
  for (auto& p : out.params) scale_inplace(p.value, 0.0);
  for (size_t c = 0; c < client_models.size(); ++c) {
    double w = client_sizes[c] / total;
    for (size_t i = 0; i < out.params.size(); ++i)
      axpy_inplace(out.params[i].value, w, client_models[c].params[i].value);
  }
  return out;
}

struct ClientRuntime {
  GraphCache cache;
  Matrix features;               // manipulated in place by the malicious hook
  Matrix targets;                // row-stochastic training targets
  std::vector<int> train_mask;   // local ids
  AdamState opt;
  double last_loss = std::numeric_limits<double>::quiet_NaN();
};

struct RoundTraceRow {
  int round = 0;
  double global_train_acc = 0.0;
  double global_val_acc = 0.0;
  double malicious_local_loss = 0.0;
};

struct FederationState {
  FederationConfig config;
  Graph full_graph;
  Partition partition;
  DataSplit split;
  GraphCache full_cache;
  std::vector<ModelState> client_models;
  ModelState global_model;
  std::vector<ClientRuntime> clients;
  int round_index = 0;
  std::vector<RoundTraceRow> trace;
};

// Called for the malicious client just before its local training each round.
using ManipulationHook = std::function<void(FederationState&, int client_index)>;

inline FederationState init_federation(const FederationConfig& config, const Graph& full,
                                       const Partition& partition, const DataSplit& split) {
  config.validate();
  if (partition.k != config.k)
    throw std::invalid_argument("init_federation: partition client count != config.k");

  FederationState st;
  st.config = config;
  st.full_graph = full;
  st.partition = partition;
  st.split = split;
  st.full_cache = build_graph_cache(full);
  st.global_model = init_model(config.server_arch, full.feature_dim, full.num_classes,
                               derive_seed(config.seed, "federation.global_init"));
  st.client_models.assign(config.k, st.global_model);
  st.clients.reserve(config.k);
  for (int c = 0; c < config.k; ++c) {
    const ClientSlice& slice = st.partition.clients[c];
    ClientRuntime rt;
    rt.cache = build_graph_cache(slice.subgraph);
    rt.features = slice.subgraph.features;
    rt.targets = one_hot(slice.subgraph.labels, full.num_classes);
    rt.train_mask = localize_mask(slice, split.train_mask);
    if (rt.train_mask.empty())
      throw std::invalid_argument("init_federation: a client has no training nodes");
    rt.opt = AdamState::for_model(st.global_model, config.learning_rate);
    st.clients.push_back(std::move(rt));
  }
  return st;
}

// One synchronous FedAvg round: broadcast global params, optional malicious
// manipulation, E local epochs per client, size-weighted aggregation.
inline void run_round(FederationState& st, const ManipulationHook& hook = nullptr) {
  if (st.round_index >= st.config.rounds)
    throw std::logic_error("run_round: all rounds already executed");

  for (int c = 0; c < st.config.k; ++c) {
    for (size_t i = 0; i < st.global_model.params.size(); ++i)
      st.client_models[c].params[i].value = st.global_model.params[i].value;
    if (c == st.partition.malicious_index && hook) hook(st, c);
    ClientRuntime& rt = st.clients[c];
    auto losses = train_local(st.client_models[c], rt.cache, rt.features, rt.targets,
                              rt.train_mask, st.config.local_epochs, rt.opt);
    rt.last_loss = losses.empty() ? std::numeric_limits<double>::quiet_NaN() : losses.back();
  }
  st.global_model = fedavg_aggregate(st.client_models, st.partition.client_sizes());

  RoundTraceRow row;
  row.round = st.round_index;
  Matrix post = forward(st.global_model, st.full_cache, st.full_graph.features).posteriors();
  row.global_train_acc = accuracy(post, st.full_graph.labels, st.split.train_mask);
  row.global_val_acc = accuracy(post, st.full_graph.labels, st.split.val_mask);
  row.malicious_local_loss = st.clients[st.partition.malicious_index].last_loss;
  st.trace.push_back(row);
  st.round_index += 1;
}

inline FederationState run_training(const FederationConfig& config, const Graph& full,
                                    const Partition& partition, const DataSplit& split,
                                    const ManipulationHook& hook = nullptr) {
  FederationState st = init_federation(config, full, partition, split);
  for (int r = 0; r < config.rounds; ++r) run_round(st, hook);
  return st;
}

// Query-only access to the trained global model, evaluated once on the full
// inference graph. Returns posterior vectors only; never parameters,
// gradients, or adjacency. Thread-safe; the serve counter is the only
// mutable state and per-query noise streams are keyed by (node, serve count)
// so concurrent interleaving cannot change a given query's noise.
class PosteriorOracle {
 public:
  PosteriorOracle(const ModelState& model, const Graph& inference_graph, DefenseSetting defense,
                  long query_budget, uint64_t defense_seed)
      : defense_(defense), budget_(query_budget), defense_seed_(defense_seed) {
    defense_.validate();
    GraphCache cache = build_graph_cache(inference_graph);
    posteriors_ = forward(model, cache, inference_graph.features).posteriors();
    serve_count_.assign(posteriors_.rows, 0);
  }

  std::vector<std::vector<double>> query(const std::vector<int>& node_ids) {
    std::lock_guard<std::mutex> lock(mu_);
    if (budget_ > 0 && served_ + static_cast<long>(node_ids.size()) > budget_)
      throw std::runtime_error("posterior oracle: query budget exhausted");
    for (int id : node_ids)
      if (id < 0 || id >= posteriors_.rows)
        throw std::invalid_argument("posterior oracle: invalid node id " + std::to_string(id));

    std::vector<std::vector<double>> out;
    out.reserve(node_ids.size());
    for (int id : node_ids) {
      std::vector<double> p(posteriors_.row(id), posteriors_.row(id) + posteriors_.cols);
      auto rng = make_rng(derive_seed(defense_seed_, "defense.noise",
                                      static_cast<uint64_t>(id) * 0x10001ULL +
                                          static_cast<uint64_t>(serve_count_[id])));
      out.push_back(apply_defense(p, defense_, rng));
      serve_count_[id] += 1;
    }
    served_ += static_cast<long>(node_ids.size());
    return out;
  }

  long query_log() const { return served_; }
  int num_classes() const { return posteriors_.cols; }
  int num_nodes() const { return posteriors_.rows; }
  const DefenseSetting& defense() const { return defense_; }

 private:
  Matrix posteriors_;
  DefenseSetting defense_;
  long budget_ = 0;  // 0 = unlimited
  uint64_t defense_seed_ = 0;
  long served_ = 0;
  std::vector<long> serve_count_;
  std::mutex mu_;
};

inline std::vector<std::vector<double>> query_posteriors(PosteriorOracle& oracle,
                                                         const std::vector<int>& node_ids) {
  return oracle.query(node_ids);
}

}  // namespace gfl
