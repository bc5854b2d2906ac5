// graph.hpp -- undirected attributed labeled graph: representation, text I/O,
// normalized adjacency, and a planted-partition (SBM) generator.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <bit>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gfl/common.hpp"
#include "gfl/matrix.hpp"

namespace gfl {

using Edge = std::pair<int, int>;  // stored with first < second

struct Graph {
  int num_nodes = 0;
  int num_classes = 0;
  int feature_dim = 0;
  std::vector<Edge> edges;     // sorted, deduplicated, no self-loops
  Matrix features;             // num_nodes x feature_dim
  std::vector<int> labels;     // values in 0..num_classes-1

  int num_edges() const { return static_cast<int>(edges.size()); }

  void validate() const {
    if (features.rows != num_nodes || features.cols != feature_dim)
      throw DataError("graph: feature matrix shape does not match N x L");
    if (!features.all_finite()) throw DataError("graph: non-finite feature value");
    if (static_cast<int>(labels.size()) != num_nodes)
      throw DataError("graph: label count does not match N");
    for (int y : labels)
      if (y < 0 || y >= num_classes) throw DataError("graph: label outside 0..C-1");
    for (auto [u, v] : edges) {
      if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes)
        throw DataError("graph: edge endpoint outside 0..N-1");
      if (u == v) throw DataError("graph: self-loop");
      if (u > v) throw DataError("graph: edge not normalized");
    }
    for (size_t i = 1; i < edges.size(); ++i)
      if (edges[i] == edges[i - 1]) throw DataError("graph: duplicate edge");
  }

  bool has_edge(int u, int v) const {
    if (u > v) std::swap(u, v);
    return std::binary_search(edges.begin(), edges.end(), Edge{u, v});
  }

  std::vector<std::vector<int>> adjacency_lists() const {
    std::vector<std::vector<int>> adj(num_nodes);
    for (auto [u, v] : edges) {
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    return adj;
  }
};

inline void normalize_edges(std::vector<Edge>& edges) {
  for (auto& e : edges)
    if (e.first > e.second) std::swap(e.first, e.second);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

namespace detail {

inline DataError parse_error(const std::string& path, int line_no, const std::string& what) {
  std::ostringstream os;
  os << path << ":" << line_no << ": " << what;
  return DataError(os.str());
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline long parse_long(const std::string& tok, const std::string& path, int line_no) {
  size_t consumed = 0;
  long v = 0;
  try {
    v = std::stol(tok, &consumed);
  } catch (const std::exception&) {
    throw parse_error(path, line_no, "expected integer, got '" + tok + "'");
  }
  if (consumed != tok.size()) throw parse_error(path, line_no, "trailing junk in '" + tok + "'");
  return v;
}

inline double parse_double(const std::string& tok, const std::string& path, int line_no) {
  size_t consumed = 0;
  double v = 0;
  try {
    v = std::stod(tok, &consumed);
  } catch (const std::exception&) {
    throw parse_error(path, line_no, "expected real number, got '" + tok + "'");
  }
  if (consumed != tok.size()) throw parse_error(path, line_no, "trailing junk in '" + tok + "'");
  return v;
}

}  // namespace detail

// Nodes file: header "#nodes N=<N> L=<L> C=<C>", then one line per node:
//   <node_id>\t<label>\t<f_0>,<f_1>,...,<f_{L-1}>
// Edges file: "<u>\t<v>" per line, '#' starts a comment.
inline Graph load_graph(const std::string& nodes_path, const std::string& edges_path) {
  std::ifstream nf(nodes_path);
  if (!nf) throw DataError("cannot open nodes file: " + nodes_path);

  std::string line;
  int line_no = 0;
  if (!std::getline(nf, line)) throw DataError(nodes_path + ": empty file");
  ++line_no;
  long n = -1, l = -1, c = -1;
  {
    std::istringstream hs(line);
    std::string tag, kn, kl, kc;
    hs >> tag >> kn >> kl >> kc;
    if (tag != "#nodes" || kn.rfind("N=", 0) != 0 || kl.rfind("L=", 0) != 0 ||
        kc.rfind("C=", 0) != 0)
      throw detail::parse_error(nodes_path, line_no, "expected header '#nodes N=<N> L=<L> C=<C>'");
    n = detail::parse_long(kn.substr(2), nodes_path, line_no);
    l = detail::parse_long(kl.substr(2), nodes_path, line_no);
    c = detail::parse_long(kc.substr(2), nodes_path, line_no);
    if (n < 1 || l < 1 || c < 1)
      throw detail::parse_error(nodes_path, line_no, "header counts must be >= 1");
  }

  Graph g;
  g.num_nodes = static_cast<int>(n);
  g.feature_dim = static_cast<int>(l);
  g.num_classes = static_cast<int>(c);
  g.features = Matrix(g.num_nodes, g.feature_dim);
  g.labels.assign(g.num_nodes, -1);

  std::vector<bool> seen(g.num_nodes, false);
  while (std::getline(nf, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 3)
      throw detail::parse_error(nodes_path, line_no, "expected <id>\\t<label>\\t<features>");
    long id = detail::parse_long(fields[0], nodes_path, line_no);
    if (id < 0 || id >= n)
      throw detail::parse_error(nodes_path, line_no,
                                "node id " + fields[0] + " outside 0..N-1 (ids must be contiguous)");
    if (seen[id]) throw detail::parse_error(nodes_path, line_no, "duplicate node id " + fields[0]);
    seen[id] = true;
    long y = detail::parse_long(fields[1], nodes_path, line_no);
    if (y < 0 || y >= c)
      throw detail::parse_error(nodes_path, line_no, "label " + fields[1] + " outside 0..C-1");
    g.labels[id] = static_cast<int>(y);
    auto feats = detail::split(fields[2], ',');
    if (static_cast<long>(feats.size()) != l)
      throw detail::parse_error(nodes_path, line_no, "expected " + std::to_string(l) + " features");
    for (long j = 0; j < l; ++j) {
      double v = detail::parse_double(feats[j], nodes_path, line_no);
      if (!std::isfinite(v))
        throw detail::parse_error(nodes_path, line_no, "non-finite feature value");
      g.features(static_cast<int>(id), static_cast<int>(j)) = v;
    }
  }
  for (int i = 0; i < g.num_nodes; ++i)
    if (!seen[i])
      throw DataError(nodes_path + ": node id " + std::to_string(i) +
                      " missing (ids must be contiguous 0..N-1)");

  std::ifstream ef(edges_path);
  if (!ef) throw DataError("cannot open edges file: " + edges_path);
  line_no = 0;
  while (std::getline(ef, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto fields = detail::split(line, '\t');
    if (fields.size() != 2) throw detail::parse_error(edges_path, line_no, "expected <u>\\t<v>");
    long u = detail::parse_long(fields[0], edges_path, line_no);
    long v = detail::parse_long(fields[1], edges_path, line_no);
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw detail::parse_error(edges_path, line_no, "unknown node id in edge");
    if (u == v) throw detail::parse_error(edges_path, line_no, "self-loop rejected");
    g.edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
  }
  normalize_edges(g.edges);
  g.validate();
  return g;
}

// Emits the loader's formats bit-exactly (shortest round-trip decimals).
inline void write_graph(const Graph& g, std::ostream& nodes_out, std::ostream& edges_out) {
  nodes_out << "#nodes N=" << g.num_nodes << " L=" << g.feature_dim << " C=" << g.num_classes
            << "\n";
  for (int i = 0; i < g.num_nodes; ++i) {
    nodes_out << i << '\t' << g.labels[i] << '\t';
    for (int j = 0; j < g.feature_dim; ++j) {
      if (j) nodes_out << ',';
      nodes_out << format_double(g.features(i, j));
    }
    nodes_out << '\n';
  }
  edges_out << "# edges\n";
  for (auto [u, v] : g.edges) edges_out << u << '\t' << v << '\n';
}

inline void write_graph(const Graph& g, const std::string& nodes_path,
                        const std::string& edges_path) {
  std::ofstream nf(nodes_path);
  std::ofstream ef(edges_path);
  if (!nf || !ef) throw DataError("cannot open output files for write_graph");
  write_graph(g, nf, ef);
}

// D^{-1/2} (A+I) D^{-1/2} as CSR; rows of isolated nodes equal identity rows.
inline Csr normalized_adjacency_csr(const Graph& g) {
  int n = g.num_nodes;
  auto adj = g.adjacency_lists();
  std::vector<double> dinv(n);
  for (int i = 0; i < n; ++i) {
    std::sort(adj[i].begin(), adj[i].end());
    dinv[i] = 1.0 / std::sqrt(static_cast<double>(adj[i].size()) + 1.0);
  }
  Csr S;
  S.rows = S.cols = n;
  S.offsets.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) S.offsets[i + 1] = S.offsets[i] + static_cast<int>(adj[i].size()) + 1;
  S.idx.resize(S.offsets[n]);
  S.val.resize(S.offsets[n]);
  for (int i = 0; i < n; ++i) {
    int p = S.offsets[i];
    bool self_written = false;
    for (int v : adj[i]) {
      if (!self_written && v > i) {
        S.idx[p] = i;
        S.val[p] = dinv[i] * dinv[i];
        ++p;
        self_written = true;
      }
      S.idx[p] = v;
      S.val[p] = dinv[i] * dinv[v];
      ++p;
    }
    if (!self_written) {
      S.idx[p] = i;
      S.val[p] = dinv[i] * dinv[i];
      ++p;
    }
  }
  return S;
}

inline Matrix normalized_adjacency(const Graph& g) { return csr_to_dense(normalized_adjacency_csr(g)); }

// Row-stochastic neighbor-mean operator (no self edges); isolated nodes get a
// zero row, realizing the empty-neighborhood-is-zero aggregation rule.
inline Csr neighbor_mean_csr(const Graph& g) {
  int n = g.num_nodes;
  auto adj = g.adjacency_lists();
  Csr S;
  S.rows = S.cols = n;
  S.offsets.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    std::sort(adj[i].begin(), adj[i].end());
    S.offsets[i + 1] = S.offsets[i] + static_cast<int>(adj[i].size());
  }
  S.idx.resize(S.offsets[n]);
  S.val.resize(S.offsets[n]);
  for (int i = 0; i < n; ++i) {
    double w = adj[i].empty() ? 0.0 : 1.0 / static_cast<double>(adj[i].size());
    int p = S.offsets[i];
    for (int v : adj[i]) {
      S.idx[p] = v;
      S.val[p] = w;
      ++p;
    }
  }
  return S;
}

// Planted-partition graph. Block id doubles as the class label; node features
// are standard normal plus a per-block +/-feature_shift sign pattern. When the
// feature width allows, the patterns are Sylvester-Hadamard rows over a fixed
// prefix of the coordinates (remaining coordinates shared), so every pair of
// block means sits at the same distance regardless of seed and of how wide
// the feature vector is; otherwise seeded distinct random sign patterns.
inline Graph generate_sbm(int num_blocks, int nodes_per_block, double p_in, double p_out,
                          int feature_dim, double feature_shift, uint64_t seed) {
  if (num_blocks < 1 || nodes_per_block < 1 || feature_dim < 1)
    throw std::invalid_argument("generate_sbm: counts must be >= 1");
  if (!(0.0 <= p_out && p_out <= p_in && p_in <= 1.0))
    throw std::invalid_argument("generate_sbm: need 0 <= p_out <= p_in <= 1");

  Graph g;
  g.num_nodes = num_blocks * nodes_per_block;
  g.num_classes = num_blocks;
  g.feature_dim = feature_dim;
  g.labels.resize(g.num_nodes);
  for (int i = 0; i < g.num_nodes; ++i) g.labels[i] = i / nodes_per_block;

  auto rng = make_rng(derive_seed(seed, "sbm.edges"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < g.num_nodes; ++i) {
    for (int j = i + 1; j < g.num_nodes; ++j) {
      double p = (g.labels[i] == g.labels[j]) ? p_in : p_out;
      if (unit(rng) < p) g.edges.emplace_back(i, j);
    }
  }

  std::vector<std::vector<int>> pattern(num_blocks, std::vector<int>(feature_dim, 1));
  int hadamard_cols = 1;
  while (hadamard_cols * 2 <= std::min(feature_dim, 16)) hadamard_cols *= 2;
  while (hadamard_cols < num_blocks) hadamard_cols *= 2;
  if (feature_dim >= hadamard_cols) {
    // rows of the Sylvester matrix: any two differ in exactly half the prefix
    for (int b = 0; b < num_blocks; ++b)
      for (int j = 0; j < hadamard_cols; ++j)
        pattern[b][j] = (std::popcount(static_cast<unsigned>(b & j)) & 1) ? -1 : 1;
  } else {
    // narrow features: fall back to distinct random sign patterns
    auto prng = make_rng(derive_seed(seed, "sbm.patterns"));
    std::set<std::vector<int>> used;
    for (int b = 0; b < num_blocks; ++b) {
      std::vector<int> s(feature_dim);
      do {
        for (int j = 0; j < feature_dim; ++j) s[j] = (prng() & 1) ? 1 : -1;
      } while (used.count(s) && used.size() < (1ULL << std::min(feature_dim, 62)));
      used.insert(s);
      pattern[b] = s;
    }
  }

  auto frng = make_rng(derive_seed(seed, "sbm.features"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  g.features = Matrix(g.num_nodes, feature_dim);
  for (int i = 0; i < g.num_nodes; ++i)
    for (int j = 0; j < feature_dim; ++j)
      g.features(i, j) = gauss(frng) + feature_shift * pattern[g.labels[i]][j];

  g.validate();
  return g;
}

}  // namespace gfl
