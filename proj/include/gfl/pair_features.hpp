// pair_features.hpp -- per node-pair feature vector built from two posterior
// vectors: 8 scalar distances plus 4 element-wise C-dimensional blocks
// (average, weighted-L1, hadamard, weighted-L2). Optionally a scalar entropy
// summary per block (off by default).
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gfl/distances.hpp"
#include "gfl/matrix.hpp"

namespace gfl {

struct PairFeatureVector {
  std::array<double, 8> distances{};  // cosine, euclidean, correlation, chebyshev,
                                      // braycurtis, manhattan, canberra, sqeuclidean
  std::vector<double> average;
  std::vector<double> weighted_l1;
  std::vector<double> hadamard;
  std::vector<double> weighted_l2;

  std::vector<double> flatten(bool entropy_summary = false) const {
    std::vector<double> out;
    out.reserve(8 + 4 * average.size() + (entropy_summary ? 4 : 0));
    out.insert(out.end(), distances.begin(), distances.end());
    out.insert(out.end(), average.begin(), average.end());
    out.insert(out.end(), weighted_l1.begin(), weighted_l1.end());
    out.insert(out.end(), hadamard.begin(), hadamard.end());
    out.insert(out.end(), weighted_l2.begin(), weighted_l2.end());
    if (entropy_summary) {
      for (const auto* block : {&average, &weighted_l1, &hadamard, &weighted_l2})
        out.push_back(block_entropy(*block));
    }
    return out;
  }

  static int dim(int num_classes, bool entropy_summary = false) {
    return 8 + 4 * num_classes + (entropy_summary ? 4 : 0);
  }

  // entropy of the block's absolute mass distribution; 0 for an all-zero block
  static double block_entropy(const std::vector<double>& block) {
    double total = 0.0;
    for (double v : block) total += std::abs(v);
    if (total == 0.0) return 0.0;
    double h = 0.0;
    for (double v : block) {
      double q = std::abs(v) / total;
      if (q > 0.0) h -= q * std::log(q);
    }
    return h;
  }
};

inline PairFeatureVector pair_features(const double* fu, const double* fv, int dim) {
  if (dim < 2) throw std::invalid_argument("pair_features: need C >= 2");
  PairFeatureVector p;
  p.distances[0] = cosine_distance(fu, fv, dim);
  p.distances[1] = euclidean_distance(fu, fv, dim);
  p.distances[2] = correlation_distance(fu, fv, dim);
  p.distances[3] = chebyshev_distance(fu, fv, dim);
  p.distances[4] = braycurtis_distance(fu, fv, dim);
  p.distances[5] = manhattan_distance(fu, fv, dim);
  p.distances[6] = canberra_distance(fu, fv, dim);
  p.distances[7] = sqeuclidean_distance(fu, fv, dim);
  p.average.resize(dim);
  p.weighted_l1.resize(dim);
  p.hadamard.resize(dim);
  p.weighted_l2.resize(dim);
  for (int i = 0; i < dim; ++i) {
    double d = std::abs(fu[i] - fv[i]);
    p.average[i] = (fu[i] + fv[i]) / 2.0;
    p.weighted_l1[i] = d;
    p.hadamard[i] = fu[i] * fv[i];
    p.weighted_l2[i] = d * d;
  }
  return p;
}

inline PairFeatureVector pair_features(const std::vector<double>& fu,
                                       const std::vector<double>& fv) {
  if (fu.size() != fv.size()) throw std::invalid_argument("pair_features: dim mismatch");
  return pair_features(fu.data(), fv.data(), static_cast<int>(fu.size()));
}

}  // namespace gfl
