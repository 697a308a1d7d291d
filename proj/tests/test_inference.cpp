#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "naon/error.hpp"
#include "naon/inference.hpp"
#include "naon/rng.hpp"
#include "test_util.hpp"

using namespace naon;
using naon::testing::random_probs;

namespace {

using Order = std::vector<std::size_t>;

bool is_bijection(const Order& a) {
  Order s = a;
  std::sort(s.begin(), s.end());
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] != i) return false;
  return true;
}

// Independent oracle: best objective over all permutations.
double best_objective(const Tensor& p) {
  Order perm(p.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = -INFINITY;
  do {
    double s = 0;
    for (std::size_t i = 0; i < perm.size(); ++i) s += std::log(p.at(i, perm[i]));
    best = std::max(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Tensor diag_dominant(std::size_t n, Rng& rng) {
  Tensor t = random_probs(n, rng);
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) += 10.0;
  return t;
}

}  // namespace

TEST(Greedy, HandTraces) {
  EXPECT_EQ(greedy_assign(Tensor::matrix({{0.9, 0.1}, {0.8, 0.2}})).assignment, (Order{0, 1}));
  EXPECT_EQ(greedy_assign(Tensor::matrix({{0.9, 0.85}, {0.8, 0.1}})).assignment, (Order{0, 1}));
}

TEST(Greedy, TiesGoToSmallestRowThenColumn) {
  EXPECT_EQ(greedy_assign(Tensor({3, 3}, 0.5)).assignment, (Order{0, 1, 2}));
  // Row 1 and row 0 both hold 0.9; row 0 wins and takes column 1.
  EXPECT_EQ(greedy_assign(Tensor::matrix({{0.1, 0.9}, {0.9, 0.9}})).assignment, (Order{1, 0}));
}

TEST(Greedy, RequiresStrictlyPositive) {
  EXPECT_THROW(greedy_assign(Tensor::matrix({{1, 0}, {0, 1}})), ContractError);
  EXPECT_THROW(greedy_assign(Tensor({2, 3}, 0.5)), std::exception);
}

TEST(RawArgmax, Examples) {
  EXPECT_EQ(raw_argmax(Tensor::matrix({{0.9, 0.1}, {0.8, 0.2}})).assignment, (Order{0, 0}));
  EXPECT_EQ(raw_argmax(Tensor({4, 4}, 0.25)).assignment, (Order{0, 0, 0, 0}));
  Rng rng(1);
  const Tensor d = diag_dominant(5, rng);
  EXPECT_EQ(raw_argmax(d).assignment, (Order{0, 1, 2, 3, 4}));
}

TEST(Hungarian, Examples) {
  EXPECT_EQ(hungarian_assign(Tensor::matrix({{0.9, 0.85}, {0.8, 0.1}})).assignment, (Order{1, 0}));
  Rng rng(2);
  for (std::size_t n = 1; n <= 7; ++n) {
    const Order id = [&] { Order o(n); std::iota(o.begin(), o.end(), 0); return o; }();
    EXPECT_EQ(hungarian_assign(diag_dominant(n, rng)).assignment, id);
    EXPECT_EQ(greedy_assign(diag_dominant(n, rng)).assignment, id);
  }
}

TEST(BruteForce, Examples) {
  EXPECT_EQ(brute_force_assign(Tensor({1, 1}, 1.0)).assignment, (Order{0}));
  EXPECT_EQ(brute_force_assign(Tensor({4, 4}, 0.25)).assignment, (Order{0, 1, 2, 3}));
  EXPECT_THROW(brute_force_assign(Tensor({9, 9}, 1.0 / 9)), ScaleError);
}

TEST(Decoders, HungarianMatchesBruteForceOracle) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(6);
    const Tensor p = random_probs(n, rng);
    const double best = best_objective(p);
    const auto h = hungarian_assign(p).assignment;
    const auto b = brute_force_assign(p).assignment;
    ASSERT_TRUE(is_bijection(h));
    EXPECT_NEAR(log_objective(p, h), best, 1e-12);
    EXPECT_EQ(log_objective(p, b), best);
    const auto g = greedy_assign(p).assignment;
    EXPECT_TRUE(is_bijection(g));
    EXPECT_LE(log_objective(p, g), best + 1e-12);
  }
}

TEST(Greedy, ColumnPermutationCovariance) {
  Rng rng(4);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(8);
    const Tensor p = random_probs(n, rng);  // continuous draws: ties have probability zero
    const Order pi = rng.permutation(n);
    // Column k of q holds column pi[k] of p.
    Tensor q({n, n});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) q.at(i, k) = p.at(i, pi[k]);
    const Order gp = greedy_assign(p).assignment;
    const Order gq = greedy_assign(q).assignment;
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(pi[gq[i]], gp[i]);
  }
}

TEST(RawArgmax, AgreesWithGreedyOnPermutedDominantMatrices) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(8);
    const Tensor d = diag_dominant(n, rng);
    const Order pi = rng.permutation(n);
    Tensor q({n, n});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) q.at(pi[i], j) = d.at(i, j);
    const Order raw = raw_argmax(q).assignment;
    ASSERT_TRUE(is_bijection(raw));
    EXPECT_EQ(raw, greedy_assign(q).assignment);
  }
}

TEST(DecodeMethod, Parsing) {
  EXPECT_EQ(parse_decode_method("raw"), DecodeMethod::raw_argmax);
  EXPECT_EQ(parse_decode_method("raw_argmax"), DecodeMethod::raw_argmax);
  EXPECT_EQ(parse_decode_method("hungarian"), DecodeMethod::hungarian);
  EXPECT_EQ(parse_decode_method("greedy"), DecodeMethod::greedy);
  EXPECT_EQ(to_string(DecodeMethod::brute_force), "brute_force");
  EXPECT_THROW(parse_decode_method("beam"), InputError);
}
