// distances.hpp -- the eight pairwise distance functions computed on node
// posterior vectors, with the singular-case conventions used throughout:
// cosine against a zero vector is distance 1, correlation of a constant
// vector is distance 1, canberra terms with zero denominator contribute 0,
// braycurtis with zero denominator is 0.
#pragma once

#include <algorithm>
#include <cmath>

namespace gfl {

inline double cosine_distance(const double* a, const double* b, int dim) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int i = 0; i < dim; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double euclidean_distance(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double correlation_distance(const double* a, const double* b, int dim) {
  double ma = 0.0, mb = 0.0;
  for (int i = 0; i < dim; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= dim;
  mb /= dim;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (int i = 0; i < dim; ++i) {
    double ca = a[i] - ma, cb = b[i] - mb;
    dot += ca * cb;
    na += ca * ca;
    nb += cb * cb;
  }
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double chebyshev_distance(const double* a, const double* b, int dim) {
  double m = 0.0;
  for (int i = 0; i < dim; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double braycurtis_distance(const double* a, const double* b, int dim) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < dim; ++i) {
    num += std::abs(a[i] - b[i]);
    den += std::abs(a[i] + b[i]);
  }
  if (den == 0.0) return 0.0;
  return num / den;
}

inline double manhattan_distance(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += std::abs(a[i] - b[i]);
  return s;
}

inline double canberra_distance(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    double den = std::abs(a[i]) + std::abs(b[i]);
    if (den > 0.0) s += std::abs(a[i] - b[i]) / den;
  }
  return s;
}

inline double sqeuclidean_distance(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace gfl
