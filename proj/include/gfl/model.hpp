// model.hpp -- GNN architecture descriptor, parameter container, Glorot init,
// per-graph propagation cache, and bit-exact model serialization.
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "gfl/common.hpp"
#include "gfl/graph.hpp"
#include "gfl/matrix.hpp"

namespace gfl {

enum class ArchKind { GCN, GraphSAGE, GAT };

inline const char* arch_name(ArchKind k) {
  switch (k) {
    case ArchKind::GCN: return "gcn";
    case ArchKind::GraphSAGE: return "graphsage";
    case ArchKind::GAT: return "gat";
  }
  return "?";
}

inline ArchKind arch_from_name(const std::string& s) {
  if (s == "gcn") return ArchKind::GCN;
  if (s == "graphsage" || s == "sage") return ArchKind::GraphSAGE;
  if (s == "gat") return ArchKind::GAT;
  throw ConfigError("unknown architecture '" + s + "' (expected gcn|graphsage|gat)");
}

struct ModelArch {
  ArchKind kind = ArchKind::GCN;
  int num_layers = 2;
  int hidden_dim = 16;
  int heads = 4;  // GAT only

  void validate() const {
    if (num_layers < 1 || hidden_dim < 1 || heads < 1)
      throw std::invalid_argument("model arch: layers, hidden_dim and heads must be >= 1");
  }

  // width of the representation leaving layer l (0-based)
  int layer_out_dim(int l, int num_classes) const {
    bool last = l == num_layers - 1;
    if (last) return num_classes;
    return kind == ArchKind::GAT ? hidden_dim * heads : hidden_dim;
  }

  int layer_in_dim(int l, int feature_dim, int num_classes) const {
    return l == 0 ? feature_dim : layer_out_dim(l - 1, num_classes);
  }
};

struct NamedParam {
  std::string name;
  Matrix value;
};

struct ModelState {
  ModelArch arch;
  int feature_dim = 0;
  int num_classes = 0;
  std::vector<NamedParam> params;

  size_t param_count() const {
    size_t n = 0;
    for (const auto& p : params) n += p.value.size();
    return n;
  }

  bool same_shapes(const ModelState& o) const {
    if (params.size() != o.params.size()) return false;
    for (size_t i = 0; i < params.size(); ++i)
      if (params[i].name != o.params[i].name || !params[i].value.same_shape(o.params[i].value))
        return false;
    return true;
  }
};

struct Gradients {
  std::vector<Matrix> param_grads;  // aligned with ModelState::params
  Matrix input_grads;               // d loss / d X
};

namespace detail {

inline Matrix glorot(int rows, int cols, std::mt19937_64& rng) {
  double bound = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix m(rows, cols);
  for (double& v : m.a) v = u(rng);
  return m;
}

}  // namespace detail

inline ModelState init_model(const ModelArch& arch, int feature_dim, int num_classes,
                             uint64_t seed) {
  arch.validate();
  ModelState m;
  m.arch = arch;
  m.feature_dim = feature_dim;
  m.num_classes = num_classes;
  auto rng = make_rng(derive_seed(seed, "model.init"));

  for (int l = 0; l < arch.num_layers; ++l) {
    int din = arch.layer_in_dim(l, feature_dim, num_classes);
    int dout = l == arch.num_layers - 1 ? num_classes : arch.hidden_dim;
    std::string prefix = "l" + std::to_string(l) + ".";
    switch (arch.kind) {
      case ArchKind::GCN:
        m.params.push_back({prefix + "W", detail::glorot(din, dout, rng)});
        m.params.push_back({prefix + "b", Matrix(1, dout)});
        break;
      case ArchKind::GraphSAGE:
        m.params.push_back({prefix + "W", detail::glorot(2 * din, dout, rng)});
        m.params.push_back({prefix + "b", Matrix(1, dout)});
        break;
      case ArchKind::GAT:
        for (int h = 0; h < arch.heads; ++h) {
          std::string hp = prefix + "h" + std::to_string(h) + ".";
          m.params.push_back({hp + "W", detail::glorot(din, dout, rng)});
          m.params.push_back({hp + "a_src", detail::glorot(dout, 1, rng)});
          m.params.push_back({hp + "a_dst", detail::glorot(dout, 1, rng)});
          m.params.push_back({hp + "b", Matrix(1, dout)});
        }
        break;
    }
  }
  return m;
}

// Fixed propagation structure of one graph, shared by every forward pass on
// it. Must outlive any tape built from it.
struct GraphCache {
  int num_nodes = 0;
  Csr norm_adj;      // GCN propagation, symmetric
  Csr norm_adj_t;
  Csr mean_agg;      // GraphSAGE neighbor mean (zero row when no neighbors)
  Csr mean_agg_t;
  // GAT: entry list grouped by target node u, each segment = N(u) + {u}
  std::vector<int> att_offsets;   // num_nodes + 1
  std::vector<int> att_targets;   // u per entry
  std::vector<int> att_neighbors; // v per entry
};

inline GraphCache build_graph_cache(const Graph& g) {
  GraphCache c;
  c.num_nodes = g.num_nodes;
  c.norm_adj = normalized_adjacency_csr(g);
  c.norm_adj_t = csr_transpose(c.norm_adj);
  c.mean_agg = neighbor_mean_csr(g);
  c.mean_agg_t = csr_transpose(c.mean_agg);

  auto adj = g.adjacency_lists();
  c.att_offsets.assign(g.num_nodes + 1, 0);
  for (int u = 0; u < g.num_nodes; ++u) {
    std::sort(adj[u].begin(), adj[u].end());
    c.att_offsets[u + 1] = c.att_offsets[u] + static_cast<int>(adj[u].size()) + 1;
  }
  c.att_targets.reserve(c.att_offsets.back());
  c.att_neighbors.reserve(c.att_offsets.back());
  for (int u = 0; u < g.num_nodes; ++u) {
    bool self_placed = false;
    for (int v : adj[u]) {
      if (!self_placed && v > u) {
        c.att_targets.push_back(u);
        c.att_neighbors.push_back(u);
        self_placed = true;
      }
      c.att_targets.push_back(u);
      c.att_neighbors.push_back(v);
    }
    if (!self_placed) {
      c.att_targets.push_back(u);
      c.att_neighbors.push_back(u);
    }
  }
  return c;
}

// --- serialization ------------------------------------------------------
// Flat binary container of named f64 arrays with an arch header. Round-trip
// is bit-exact.

inline void save_model(const ModelState& m, std::ostream& out) {
  const char magic[8] = {'G', 'F', 'L', 'M', 'O', 'D', '1', '\n'};
  out.write(magic, 8);
  auto w32 = [&](int32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto w64 = [&](uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  w32(static_cast<int32_t>(m.arch.kind));
  w32(m.arch.num_layers);
  w32(m.arch.hidden_dim);
  w32(m.arch.heads);
  w32(m.feature_dim);
  w32(m.num_classes);
  w64(m.params.size());
  for (const auto& p : m.params) {
    w64(p.name.size());
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    w32(p.value.rows);
    w32(p.value.cols);
    out.write(reinterpret_cast<const char*>(p.value.a.data()),
              static_cast<std::streamsize>(p.value.a.size() * sizeof(double)));
  }
}

inline ModelState load_model(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "GFLMOD1\n", 8) != 0)
    throw DataError("model file: bad magic");
  auto r32 = [&]() {
    int32_t v;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto r64 = [&]() {
    uint64_t v;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  ModelState m;
  m.arch.kind = static_cast<ArchKind>(r32());
  m.arch.num_layers = r32();
  m.arch.hidden_dim = r32();
  m.arch.heads = r32();
  m.feature_dim = r32();
  m.num_classes = r32();
  uint64_t np = r64();
  for (uint64_t i = 0; i < np; ++i) {
    uint64_t len = r64();
    if (len > 4096) throw DataError("model file: absurd name length");
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    int32_t rows = r32(), cols = r32();
    if (rows < 0 || cols < 0) throw DataError("model file: negative shape");
    Matrix v(rows, cols);
    in.read(reinterpret_cast<char*>(v.a.data()),
            static_cast<std::streamsize>(v.a.size() * sizeof(double)));
    m.params.push_back({std::move(name), std::move(v)});
  }
  if (!in) throw DataError("model file: truncated");
  return m;
}

inline void save_model(const ModelState& m, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open model file for write: " + path);
  save_model(m, f);
}

inline ModelState load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open model file: " + path);
  return load_model(f);
}

}  // namespace gfl
