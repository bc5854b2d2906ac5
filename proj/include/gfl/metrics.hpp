// metrics.hpp -- ranking and classification metrics: ROC AUC (Mann-Whitney
// with average ranks), precision@threshold, average precision, accuracy, and
// the connected-vs-unconnected similarity AUC used as a stealth diagnostic.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "gfl/common.hpp"
#include "gfl/distances.hpp"
#include "gfl/graph.hpp"
#include "gfl/matrix.hpp"

namespace gfl {

// Mann-Whitney U with average-rank tie handling:
// Pr(score_pos > score_neg) + 0.5 * Pr(equal).
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc: size mismatch");
  size_t p = 0, n = 0;
  for (int y : labels) (y ? p : n)++;
  if (p == 0 || n == 0) throw std::invalid_argument("auc: both classes must be present");

  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (size_t t = i; t < j; ++t)
      if (labels[order[t]]) rank_sum_pos += avg_rank;
    i = j;
  }
  double pd = static_cast<double>(p), nd = static_cast<double>(n);
  return (rank_sum_pos - pd * (pd + 1.0) / 2.0) / (pd * nd);
}

struct PrecisionReport {
  double precision = 0.0;          // at the given threshold; 0 when nothing predicted
  double average_precision = 0.0;  // rank-accumulated AP, ties broken by index
};

inline PrecisionReport precision_metrics(const std::vector<double>& scores,
                                         const std::vector<int>& labels,
                                         double threshold = 0.5) {
  if (scores.size() != labels.size()) throw std::invalid_argument("precision: size mismatch");
  size_t p = 0;
  for (int y : labels) p += y ? 1 : 0;
  if (p == 0 || p == labels.size())
    throw std::invalid_argument("precision: both classes must be present");

  PrecisionReport rep;
  long tp = 0, fp = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= threshold) (labels[i] ? tp : fp)++;
  }
  rep.precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);

  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  long hits = 0;
  double ap = 0.0;
  for (size_t k = 0; k < order.size(); ++k) {
    if (labels[order[k]]) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  rep.average_precision = ap / static_cast<double>(p);
  return rep;
}

// Fraction of mask nodes whose argmax posterior matches the label; argmax
// ties break to the lowest class index.
inline double accuracy(const Matrix& posteriors, const std::vector<int>& labels,
                       const std::vector<int>& mask) {
  if (mask.empty()) throw std::invalid_argument("accuracy: empty mask");
  int correct = 0;
  for (int u : mask) {
    int arg = 0;
    for (int c = 1; c < posteriors.cols; ++c)
      if (posteriors(u, c) > posteriors(u, arg)) arg = c;
    correct += arg == labels[u] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(mask.size());
}

// Similarity functions selectable for AUC-CUS. Cosine is the default; the
// remaining ones are the negated pairwise distances so that larger always
// means more similar.
enum class SimilarityId {
  Cosine,
  NegEuclidean,
  NegCorrelation,
  NegChebyshev,
  NegBraycurtis,
  NegManhattan,
  NegCanberra,
  NegSqeuclidean,
};

inline SimilarityId similarity_from_name(const std::string& s) {
  if (s == "cosine") return SimilarityId::Cosine;
  if (s == "neg_euclidean") return SimilarityId::NegEuclidean;
  if (s == "neg_correlation") return SimilarityId::NegCorrelation;
  if (s == "neg_chebyshev") return SimilarityId::NegChebyshev;
  if (s == "neg_braycurtis") return SimilarityId::NegBraycurtis;
  if (s == "neg_manhattan") return SimilarityId::NegManhattan;
  if (s == "neg_canberra") return SimilarityId::NegCanberra;
  if (s == "neg_sqeuclidean") return SimilarityId::NegSqeuclidean;
  throw ConfigError("unknown similarity '" + s + "'");
}

inline double cosine_similarity(const double* a, const double* b, int dim) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int i = 0; i < dim; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double similarity_score(SimilarityId id, const double* a, const double* b, int dim) {
  switch (id) {
    case SimilarityId::Cosine: return cosine_similarity(a, b, dim);
    case SimilarityId::NegEuclidean: return -euclidean_distance(a, b, dim);
    case SimilarityId::NegCorrelation: return -correlation_distance(a, b, dim);
    case SimilarityId::NegChebyshev: return -chebyshev_distance(a, b, dim);
    case SimilarityId::NegBraycurtis: return -braycurtis_distance(a, b, dim);
    case SimilarityId::NegManhattan: return -manhattan_distance(a, b, dim);
    case SimilarityId::NegCanberra: return -canberra_distance(a, b, dim);
    case SimilarityId::NegSqeuclidean: return -sqeuclidean_distance(a, b, dim);
  }
  return 0.0;
}

// AUC separating connected pairs (label 1) from an equal-size seeded sample
// of unconnected pairs (label 0) under the chosen similarity of row vectors.
inline double auc_cus(const Graph& g, const Matrix& rows, SimilarityId id, uint64_t seed) {
  if (g.edges.empty()) throw std::invalid_argument("auc_cus: graph has no edges");
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(2 * g.edges.size());
  for (auto [u, v] : g.edges) {
    scores.push_back(similarity_score(id, rows.row(u), rows.row(v), rows.cols));
    labels.push_back(1);
  }
  auto rng = make_rng(derive_seed(seed, "auc_cus.negatives"));
  std::uniform_int_distribution<int> pick(0, g.num_nodes - 1);
  size_t want = g.edges.size();
  size_t guard = 0;
  while (want > 0 && guard < 1000 * g.edges.size() + 1000) {
    ++guard;
    int u = pick(rng), v = pick(rng);
    if (u == v || g.has_edge(u, v)) continue;
    scores.push_back(similarity_score(id, rows.row(u), rows.row(v), rows.cols));
    labels.push_back(0);
    --want;
  }
  if (want > 0) throw std::runtime_error("auc_cus: could not sample enough non-edges");
  return auc(scores, labels);
}

}  // namespace gfl
