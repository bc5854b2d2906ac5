// partition.hpp -- horizontal split of one underlying graph into client
// subgraphs, plus stratified train/val/test node splits.
#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "gfl/common.hpp"
#include "gfl/graph.hpp"

namespace gfl {

struct ClientSlice {
  std::vector<int> nodes;          // global ids owned by this client (sorted)
  std::vector<int> local_to_global;  // local id -> global id
  std::vector<int> global_to_local;  // -1 where absent
  Graph subgraph;                  // induced on `nodes`, local ids
};

struct Partition {
  int k = 0;
  int malicious_index = 0;
  std::vector<ClientSlice> clients;
  std::vector<Edge> lost_edges;  // ground-truth edges internal to no client

  std::vector<int> client_sizes() const {
    std::vector<int> s;
    s.reserve(clients.size());
    for (const auto& c : clients) s.push_back(static_cast<int>(c.nodes.size()));
    return s;
  }
};

struct DataSplit {
  std::vector<int> train_mask;
  std::vector<int> val_mask;
  std::vector<int> test_mask;
};

namespace detail {

inline ClientSlice make_slice(const Graph& g, std::vector<int> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  ClientSlice s;
  s.nodes = nodes;
  s.local_to_global = nodes;
  s.global_to_local.assign(g.num_nodes, -1);
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) s.global_to_local[nodes[i]] = i;

  Graph& sub = s.subgraph;
  sub.num_nodes = static_cast<int>(nodes.size());
  sub.num_classes = g.num_classes;
  sub.feature_dim = g.feature_dim;
  sub.features = Matrix(sub.num_nodes, g.feature_dim);
  sub.labels.resize(sub.num_nodes);
  for (int i = 0; i < sub.num_nodes; ++i) {
    int gid = nodes[i];
    sub.labels[i] = g.labels[gid];
    for (int j = 0; j < g.feature_dim; ++j) sub.features(i, j) = g.features(gid, j);
  }
  for (auto [u, v] : g.edges) {
    int lu = s.global_to_local[u], lv = s.global_to_local[v];
    if (lu >= 0 && lv >= 0) sub.edges.emplace_back(std::min(lu, lv), std::max(lu, lv));
  }
  std::sort(sub.edges.begin(), sub.edges.end());
  sub.validate();
  return s;
}

}  // namespace detail

// Shuffles nodes by seed, deals them round-robin into k sets, then gives each
// client an extra overlap_fraction sample of the other clients' nodes.
inline Partition partition_graph(const Graph& g, int k, double overlap_fraction,
                                 int malicious_index, uint64_t seed) {
  if (k < 2) throw std::invalid_argument("partition_graph: k must be >= 2");
  if (k > g.num_nodes) throw std::invalid_argument("partition_graph: k > N");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0))
    throw std::invalid_argument("partition_graph: overlap fraction must be in [0,1)");
  if (malicious_index < 0 || malicious_index >= k)
    throw std::invalid_argument("partition_graph: malicious index out of range");

  std::vector<int> order(g.num_nodes);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(derive_seed(seed, "partition.shuffle"));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<int>> own(k);
  for (int i = 0; i < g.num_nodes; ++i) own[i % k].push_back(order[i]);

  Partition part;
  part.k = k;
  part.malicious_index = malicious_index;

  auto orng = make_rng(derive_seed(seed, "partition.overlap"));
  for (int c = 0; c < k; ++c) {
    std::vector<int> members = own[c];
    int extra = static_cast<int>(std::llround(overlap_fraction * own[c].size()));
    if (extra > 0) {
      std::vector<int> others;
      for (int o = 0; o < k; ++o)
        if (o != c) others.insert(others.end(), own[o].begin(), own[o].end());
      std::shuffle(others.begin(), others.end(), orng);
      extra = std::min<int>(extra, static_cast<int>(others.size()));
      members.insert(members.end(), others.begin(), others.begin() + extra);
    }
    part.clients.push_back(detail::make_slice(g, std::move(members)));
  }

  for (auto [u, v] : g.edges) {
    bool covered = false;
    for (const auto& c : part.clients) {
      if (c.global_to_local[u] >= 0 && c.global_to_local[v] >= 0) {
        covered = true;
        break;
      }
    }
    if (!covered) part.lost_edges.emplace_back(u, v);
  }
  return part;
}

// Stratified by label, deterministic in the seed.
inline DataSplit make_split(const Graph& g, double train_frac, double val_frac, uint64_t seed) {
  if (!(train_frac > 0.0 && val_frac > 0.0))
    throw std::invalid_argument("make_split: fractions must be positive");
  if (train_frac + val_frac >= 1.0)
    throw std::invalid_argument("make_split: train_frac + val_frac must be < 1");

  std::vector<std::vector<int>> by_class(g.num_classes);
  for (int i = 0; i < g.num_nodes; ++i) by_class[g.labels[i]].push_back(i);

  auto rng = make_rng(derive_seed(seed, "split.shuffle"));
  DataSplit split;
  for (int c = 0; c < g.num_classes; ++c) {
    auto& ids = by_class[c];
    if (ids.size() < 3)
      throw std::invalid_argument("make_split: class " + std::to_string(c) +
                                  " has fewer than 3 nodes, cannot stratify");
    std::shuffle(ids.begin(), ids.end(), rng);
    int n = static_cast<int>(ids.size());
    int n_train = std::max(1, static_cast<int>(std::llround(train_frac * n)));
    int n_val = std::max(1, static_cast<int>(std::llround(val_frac * n)));
    while (n_train + n_val > n - 1) (n_train > n_val ? n_train : n_val)--;
    for (int i = 0; i < n_train; ++i) split.train_mask.push_back(ids[i]);
    for (int i = n_train; i < n_train + n_val; ++i) split.val_mask.push_back(ids[i]);
    for (int i = n_train + n_val; i < n; ++i) split.test_mask.push_back(ids[i]);
  }
  std::sort(split.train_mask.begin(), split.train_mask.end());
  std::sort(split.val_mask.begin(), split.val_mask.end());
  std::sort(split.test_mask.begin(), split.test_mask.end());
  return split;
}

// Global mask restricted to a client's node set, in local ids.
inline std::vector<int> localize_mask(const ClientSlice& slice, const std::vector<int>& mask) {
  std::vector<int> local;
  for (int gid : mask) {
    int lid = slice.global_to_local[gid];
    if (lid >= 0) local.push_back(lid);
  }
  std::sort(local.begin(), local.end());
  return local;
}

}  // namespace gfl
