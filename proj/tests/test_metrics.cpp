// metric tests with brute-force oracles: pairwise-comparison AUC, rank-sum
// average precision, accuracy tie rules, AUC-CUS, and the noise defenses.
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gfl/defense.hpp"
#include "gfl/metrics.hpp"
#include "testutil.hpp"

using namespace gfl;

namespace {

// O(P*N) pairwise comparison with half-credit ties
double auc_bruteforce(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  long pairs = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      ++pairs;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

// rank-by-rank accumulation with the same deterministic tie order
double ap_bruteforce(std::vector<double> s, std::vector<int> y) {
  std::vector<int> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (s[a] != s[b]) return s[a] > s[b];
    return a < b;
  });
  long hits = 0, total_pos = 0;
  for (int v : y) total_pos += v;
  double ap = 0.0;
  for (size_t k = 0; k < order.size(); ++k) {
    if (y[order[k]]) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return ap / static_cast<double>(total_pos);
}

}  // namespace

TEST(Auc, PerfectSeparationAndTies) {
  EXPECT_DOUBLE_EQ(auc({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(auc({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0}), 0.5);
  EXPECT_THROW(auc({0.5, 0.4}, {1, 1}), std::invalid_argument);
}

TEST(Auc, MatchesBruteForceExactly) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(200);
  std::vector<int> y(200);
  for (int i = 0; i < 200; ++i) {
    // quantized scores to force plenty of ties
    s[i] = std::round(u(rng) * 20.0) / 20.0;
    y[i] = (u(rng) < 0.4) ? 1 : 0;
  }
  y[0] = 1;
  y[1] = 0;
  EXPECT_EQ(auc(s, y), auc_bruteforce(s, y));
}

TEST(Auc, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(100);
  std::vector<int> y(100);
  for (int i = 0; i < 100; ++i) {
    s[i] = u(rng);
    y[i] = i % 3 == 0;
  }
  std::vector<double> t(100);
  for (int i = 0; i < 100; ++i) t[i] = std::exp(3.0 * s[i]) + 5.0;
  EXPECT_DOUBLE_EQ(auc(s, y), auc(t, y));
}

TEST(Precision, PerfectAndBaseRate) {
  auto rep = precision_metrics({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0});
  EXPECT_DOUBLE_EQ(rep.precision, 1.0);
  EXPECT_DOUBLE_EQ(rep.average_precision, 1.0);

  // all predicted positive on a balanced set: precision = base rate 0.5
  auto rep2 = precision_metrics({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0});
  EXPECT_DOUBLE_EQ(rep2.precision, 0.5);
}

TEST(Precision, NothingPredictedGivesZero) {
  auto rep = precision_metrics({0.1, 0.2, 0.3, 0.4}, {1, 0, 1, 0});
  EXPECT_DOUBLE_EQ(rep.precision, 0.0);
}

TEST(Precision, ApMatchesBruteForce) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(200);
  std::vector<int> y(200);
  for (int i = 0; i < 200; ++i) {
    s[i] = std::round(u(rng) * 25.0) / 25.0;
    y[i] = (u(rng) < 0.3) ? 1 : 0;
  }
  y[5] = 1;
  y[6] = 0;
  auto rep = precision_metrics(s, y);
  EXPECT_NEAR(rep.average_precision, ap_bruteforce(s, y), 1e-12);
}

TEST(Accuracy, OneHotAndTieBreakAndInvariance) {
  Matrix p(3, 4);
  p(0, 2) = 1.0;                    // argmax 2
  for (int c = 0; c < 4; ++c) p(1, c) = 0.25;  // tie -> class 0
  p(2, 0) = 0.1;
  p(2, 3) = 0.9;
  std::vector<int> labels = {2, 0, 3};
  EXPECT_DOUBLE_EQ(accuracy(p, labels, {0, 1, 2}), 1.0);
  labels[1] = 1;  // tie now breaks wrong
  EXPECT_DOUBLE_EQ(accuracy(p, labels, {0, 1, 2}), 2.0 / 3.0);

  // strictly monotone per-row transform cannot change argmax
  Matrix q = p;
  for (double& v : q.a) v = std::exp(2.0 * v);
  EXPECT_DOUBLE_EQ(accuracy(p, labels, {0, 1, 2}), accuracy(q, labels, {0, 1, 2}));
  EXPECT_THROW(accuracy(p, labels, {}), std::invalid_argument);
}

TEST(AucCus, PerfectSeparationAndTies) {
  Graph g = testutil::small_fixture(3);
  // posteriors identical on connected pairs, orthogonal-ish elsewhere is hard
  // to build exactly; instead use the degenerate cases
  Matrix same(g.num_nodes, 2);
  for (int i = 0; i < g.num_nodes; ++i) {
    same(i, 0) = 0.5;
    same(i, 1) = 0.5;
  }
  EXPECT_DOUBLE_EQ(auc_cus(g, same, SimilarityId::Cosine, 1), 0.5);

  // one-hot by block: connected pairs mostly intra-block in the fixture are
  // not guaranteed, so build an explicit two-clique graph
  Graph cliques = generate_sbm(2, 5, 1.0, 0.0, 3, 1.0, 2);
  Matrix block(cliques.num_nodes, 2);
  for (int i = 0; i < cliques.num_nodes; ++i) block(i, cliques.labels[i]) = 1.0;
  EXPECT_DOUBLE_EQ(auc_cus(cliques, block, SimilarityId::Cosine, 3), 1.0);
}

TEST(AucCus, AllSimilaritySelectionsStayInRange) {
  Graph g = testutil::small_fixture(21);
  GraphCache gc = build_graph_cache(g);
  ModelState m = init_model({ArchKind::GCN, 2, 8, 1}, g.feature_dim, g.num_classes, 2);
  Matrix post = forward(m, gc, g.features).posteriors();
  for (SimilarityId id :
       {SimilarityId::Cosine, SimilarityId::NegEuclidean, SimilarityId::NegCorrelation,
        SimilarityId::NegChebyshev, SimilarityId::NegBraycurtis, SimilarityId::NegManhattan,
        SimilarityId::NegCanberra, SimilarityId::NegSqeuclidean}) {
    double v = auc_cus(g, post, id, 9);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Defense, StrengthZeroIsBitwiseIdentity) {
  std::vector<double> p = {0.1, 0.2, 0.7};
  auto rng = make_rng(1);
  DefenseSetting off{DefenseKind::Laplace, 0.0, true};
  EXPECT_EQ(apply_defense(p, off, rng), p);
  DefenseSetting none{DefenseKind::None, 0.5, true};
  EXPECT_EQ(apply_defense(p, none, rng), p);
}

TEST(Defense, RenormalizedOutputIsDistribution) {
  std::vector<double> p = {0.1, 0.2, 0.7};
  for (DefenseKind kind : {DefenseKind::Laplace, DefenseKind::Gaussian}) {
    DefenseSetting d{kind, 0.2, true};
    auto rng = make_rng(7);
    for (int it = 0; it < 500; ++it) {
      auto out = apply_defense(p, d, rng);
      double s = 0.0;
      for (double v : out) {
        EXPECT_GE(v, 0.0);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(Defense, LaplaceMomentsMatchTheory) {
  // mean 0 within 3 sigma_mean, variance 2*lambda^2 within 5%
  double lambda = 0.1;
  auto rng = make_rng(123);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = sample_laplace(lambda, rng);
    sum += x;
    sumsq += x * x;
  }
  double mean = sum / n;
  double var = sumsq / n - mean * mean;
  double true_var = 2.0 * lambda * lambda;
  double sigma_mean = std::sqrt(true_var / n);
  EXPECT_LT(std::abs(mean), 3.0 * sigma_mean);
  EXPECT_NEAR(var, true_var, 0.05 * true_var);
}

TEST(Defense, UniformFallbackWhenEverythingClips) {
  // huge negative noise can zero out everything; force it deterministically
  // by scanning seeds for an all-clipped draw on a tiny posterior
  DefenseSetting d{DefenseKind::Gaussian, 50.0, true};
  std::vector<double> p = {0.5, 0.5};
  bool saw_uniform = false;
  for (uint64_t seed = 0; seed < 200 && !saw_uniform; ++seed) {
    auto rng = make_rng(seed);
    auto out = apply_defense(p, d, rng);
    if (out[0] == 0.5 && out[1] == 0.5) {
      // either untouched (unlikely at sigma 50) or the uniform fallback
      saw_uniform = true;
    }
  }
  EXPECT_TRUE(saw_uniform);
}
