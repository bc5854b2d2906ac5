// pair-feature tests, including an independently transcribed brute-force
// oracle for all eight distance formulas.
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gfl/pair_features.hpp"

using namespace gfl;

namespace {

// Straight transcription of the eight distance definitions, written without
// reference to the production code paths.
struct OracleDistances {
  double cosine, euclidean, correlation, chebyshev, braycurtis, manhattan, canberra, sqeuclidean;
};

OracleDistances oracle(const std::vector<double>& u, const std::vector<double>& v) {
  size_t n = u.size();
  OracleDistances o{};
  double dot = 0, nu = 0, nv = 0;
  for (size_t i = 0; i < n; ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  o.cosine = (nu == 0 || nv == 0) ? 1.0 : 1.0 - dot / (std::sqrt(nu) * std::sqrt(nv));

  double se = 0;
  for (size_t i = 0; i < n; ++i) se += (u[i] - v[i]) * (u[i] - v[i]);
  o.euclidean = std::sqrt(se);
  o.sqeuclidean = se;

  double mu = 0, mv = 0;
  for (size_t i = 0; i < n; ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= n;
  mv /= n;
  double cdot = 0, cnu = 0, cnv = 0;
  for (size_t i = 0; i < n; ++i) {
    cdot += (u[i] - mu) * (v[i] - mv);
    cnu += (u[i] - mu) * (u[i] - mu);
    cnv += (v[i] - mv) * (v[i] - mv);
  }
  o.correlation = (cnu == 0 || cnv == 0) ? 1.0 : 1.0 - cdot / (std::sqrt(cnu) * std::sqrt(cnv));

  double cheb = 0, man = 0, den = 0, canb = 0;
  for (size_t i = 0; i < n; ++i) {
    double d = std::abs(u[i] - v[i]);
    cheb = std::max(cheb, d);
    man += d;
    den += std::abs(u[i] + v[i]);
    double cd = std::abs(u[i]) + std::abs(v[i]);
    if (cd > 0) canb += d / cd;
  }
  o.chebyshev = cheb;
  o.manhattan = man;
  o.braycurtis = den == 0 ? 0.0 : man / den;
  o.canberra = canb;
  return o;
}

}  // namespace

TEST(PairFeatures, IdenticalVectors) {
  std::vector<double> f = {0.1, 0.4, 0.5};
  PairFeatureVector p = pair_features(f, f);
  // cosine/correlation go through sqrt twice; the rest are exactly zero
  EXPECT_NEAR(p.distances[0], 0.0, 1e-12);
  EXPECT_NEAR(p.distances[2], 0.0, 1e-12);
  for (int i : {1, 3, 4, 5, 6, 7}) EXPECT_DOUBLE_EQ(p.distances[i], 0.0);
  for (size_t i = 0; i < f.size(); ++i) {
    EXPECT_DOUBLE_EQ(p.average[i], f[i]);
    EXPECT_DOUBLE_EQ(p.weighted_l1[i], 0.0);
    EXPECT_DOUBLE_EQ(p.hadamard[i], f[i] * f[i]);
    EXPECT_DOUBLE_EQ(p.weighted_l2[i], 0.0);
  }
}

TEST(PairFeatures, HandComputedExample) {
  // f_u=[0.2,0.8], f_v=[0.5,0.5]
  PairFeatureVector p = pair_features({0.2, 0.8}, {0.5, 0.5});
  EXPECT_NEAR(p.distances[3], 0.3, 1e-12);                       // chebyshev
  EXPECT_NEAR(p.distances[5], 0.6, 1e-12);                       // manhattan
  EXPECT_NEAR(p.distances[7], 0.18, 1e-12);                      // sqeuclidean
  EXPECT_NEAR(p.distances[4], 0.3, 1e-12);                       // braycurtis
  EXPECT_NEAR(p.distances[6], 0.3 / 0.7 + 0.3 / 1.3, 1e-12);     // canberra
}

TEST(PairFeatures, CollinearVectors) {
  PairFeatureVector p = pair_features({1.0, 2.0, 3.0}, {2.0, 4.0, 6.0});
  EXPECT_NEAR(p.distances[0], 0.0, 1e-12);  // cosine
  EXPECT_NEAR(p.distances[2], 0.0, 1e-12);  // correlation (perfect linear)
}

TEST(PairFeatures, SymmetryInArguments) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int it = 0; it < 50; ++it) {
    std::vector<double> a(4), b(4);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    PairFeatureVector p = pair_features(a, b);
    PairFeatureVector q = pair_features(b, a);
    for (int i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(p.distances[i], q.distances[i]);
    EXPECT_EQ(p.average, q.average);
    EXPECT_EQ(p.weighted_l1, q.weighted_l1);
    EXPECT_EQ(p.hadamard, q.hadamard);
    EXPECT_EQ(p.weighted_l2, q.weighted_l2);
  }
}

TEST(PairFeatures, IdentityOfIndiscernibles) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int it = 0; it < 50; ++it) {
    std::vector<double> a(3), b(3);
    for (auto& x : a) x = u(rng);
    b = a;
    b[it % 3] += 0.25;
    PairFeatureVector p = pair_features(a, b);
    // euclidean, chebyshev, manhattan, sqeuclidean strictly positive iff different
    for (int i : {1, 3, 5, 7}) EXPECT_GT(p.distances[i], 0.0);
    PairFeatureVector q = pair_features(a, a);
    for (int i : {1, 3, 5, 7}) EXPECT_DOUBLE_EQ(q.distances[i], 0.0);
  }
}

TEST(PairFeatures, MatchesBruteForceOracleOnRandomPosteriors) {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 100; ++it) {
    int dim = 2 + static_cast<int>(rng() % 6);
    std::vector<double> a(dim), b(dim);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double sa = 0, sb = 0;
    for (auto& x : a) {
      x = u(rng) + 1e-3;
      sa += x;
    }
    for (auto& x : b) {
      x = u(rng) + 1e-3;
      sb += x;
    }
    for (auto& x : a) x /= sa;  // make them posterior-like
    for (auto& x : b) x /= sb;

    PairFeatureVector p = pair_features(a, b);
    OracleDistances o = oracle(a, b);
    EXPECT_NEAR(p.distances[0], o.cosine, 1e-9);
    EXPECT_NEAR(p.distances[1], o.euclidean, 1e-9);
    EXPECT_NEAR(p.distances[2], o.correlation, 1e-9);
    EXPECT_NEAR(p.distances[3], o.chebyshev, 1e-9);
    EXPECT_NEAR(p.distances[4], o.braycurtis, 1e-9);
    EXPECT_NEAR(p.distances[5], o.manhattan, 1e-9);
    EXPECT_NEAR(p.distances[6], o.canberra, 1e-9);
    EXPECT_NEAR(p.distances[7], o.sqeuclidean, 1e-9);
  }
}

TEST(PairFeatures, RangeInvariants) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int it = 0; it < 100; ++it) {
    std::vector<double> a(4), b(4);
    for (auto& x : a) x = u(rng);
    for (auto& x : b) x = u(rng);
    PairFeatureVector p = pair_features(a, b);
    EXPECT_GE(p.distances[0], 0.0);
    EXPECT_LE(p.distances[0], 2.0);  // cosine
    EXPECT_GE(p.distances[4], 0.0);
    EXPECT_LE(p.distances[4], 1.0 + 1e-12);  // braycurtis, non-negative inputs
    for (int i : {1, 3, 5, 6, 7}) EXPECT_GE(p.distances[i], 0.0);
  }
}

TEST(PairFeatures, ZeroVectorConventions) {
  std::vector<double> z = {0.0, 0.0, 0.0};
  std::vector<double> a = {0.5, 0.25, 0.25};
  PairFeatureVector p = pair_features(z, a);
  EXPECT_DOUBLE_EQ(p.distances[0], 1.0);  // cosine vs zero vector
  std::vector<double> c = {0.5, 0.5, 0.5};
  PairFeatureVector q = pair_features(c, a);
  EXPECT_DOUBLE_EQ(q.distances[2], 1.0);  // correlation with constant vector
  PairFeatureVector r = pair_features(z, z);
  EXPECT_DOUBLE_EQ(r.distances[6], 0.0);  // canberra zero-denominator terms
  EXPECT_DOUBLE_EQ(r.distances[4], 0.0);  // braycurtis zero denominator
}

TEST(PairFeatures, FlattenLayoutAndEntropySummary) {
  std::vector<double> a = {0.2, 0.8}, b = {0.5, 0.5};
  PairFeatureVector p = pair_features(a, b);
  auto flat = p.flatten(false);
  ASSERT_EQ(flat.size(), 8u + 4u * 2u);
  EXPECT_EQ(PairFeatureVector::dim(2, false), 16);
  auto flat2 = p.flatten(true);
  ASSERT_EQ(flat2.size(), 20u);
  EXPECT_EQ(PairFeatureVector::dim(2, true), 20);
  // entropy of a two-entry uniform block is ln 2
  std::vector<double> uniform = {0.5, 0.5};
  EXPECT_NEAR(PairFeatureVector::block_entropy(uniform), std::log(2.0), 1e-12);
}
