#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "naon/decoder.hpp"
#include "naon/error.hpp"
#include "naon/objective.hpp"
#include "naon/rng.hpp"
#include "test_util.hpp"

using namespace naon;
using naon::testing::check_gradients;
using naon::testing::random_tensor;

namespace {

std::vector<std::size_t> identity(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

TEST(Loss, UniformFive) {
  const PointerMatrix pm = PointerMatrix::from_scores(Tensor({5, 5}, 0.0));
  const std::vector<std::size_t> gold = {3, 0, 4, 1, 2};
  EXPECT_NEAR(pointer_loss(pm, gold).value, std::log(5.0), 1e-12);
  EXPECT_NEAR(exclusive_loss(pm, gold).value, 2 * std::log(5.0), 1e-12);
  EXPECT_NEAR(std::log(5.0), 1.60944, 1e-5);
  EXPECT_NEAR(2 * std::log(5.0), 3.21888, 1e-5);
}

TEST(Loss, SymmetricTwoByTwo) {
  const double l3 = std::log(3.0);
  const PointerMatrix pm = PointerMatrix::from_scores(Tensor::matrix({{l3, 0}, {0, l3}}));
  const LossValue lc = pointer_loss(pm, identity(2));
  const LossValue lex = exclusive_loss(pm, identity(2));
  EXPECT_NEAR(lc.value, std::log(4.0 / 3.0), 1e-15);
  EXPECT_NEAR(lc.value, 0.28768, 1e-5);
  EXPECT_NEAR(lex.value, 2 * std::log(4.0 / 3.0), 1e-15);
  EXPECT_NEAR(lex.value, 0.57536, 1e-5);
  ASSERT_EQ(lc.per_position_terms.size(), 2u);
  EXPECT_NEAR(lc.per_position_terms[0], std::log(4.0 / 3.0), 1e-15);
}

TEST(Loss, DiagonalDominanceLimit) {
  double prev = 1e9;
  for (double big : {1.0, 10.0, 30.0, 100.0, 700.0}) {
    Tensor omega({3, 3}, 0.0);
    for (std::size_t i = 0; i < 3; ++i) omega.at(i, i) = big;
    const PointerMatrix pm = PointerMatrix::from_scores(omega);
    const double lc = pointer_loss(pm, identity(3)).value;
    EXPECT_LE(lc, prev);
    EXPECT_TRUE(std::isfinite(lc));
    prev = lc;
  }
  EXPECT_EQ(prev, 0.0);
}

TEST(Loss, OrderingAndShiftInvariance) {
  Rng rng(17);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + rng.below(8);
    Tensor omega = random_tensor({n, n}, rng, -6, 6);
    const auto gold = rng.permutation(n);
    const PointerMatrix pm = PointerMatrix::from_scores(omega);
    const double lc = pointer_loss(pm, gold).value;
    const double lex = exclusive_loss(pm, gold).value;
    EXPECT_GE(lc, 0.0);
    EXPECT_GE(lex, lc);
    for (std::size_t i = 0; i < n; ++i) {
      const double c = rng.uniform(-50, 50);
      for (std::size_t j = 0; j < n; ++j) omega.at(i, j) += c;
    }
    EXPECT_NEAR(pointer_loss(PointerMatrix::from_scores(omega), gold).value, lc, 1e-12);
  }
}

TEST(Loss, RejectsBadGoldAndShapes) {
  const PointerMatrix pm = PointerMatrix::from_scores(Tensor({3, 3}, 0.0));
  const std::vector<std::size_t> dup = {0, 0, 1};
  const std::vector<std::size_t> short_gold = {0, 1};
  EXPECT_THROW(pointer_loss(pm, dup), InputError);
  EXPECT_THROW(exclusive_loss(pm, short_gold), std::exception);
  Tape tape;
  Var rect = tape.constant(Tensor({2, 3}, 0.0));
  EXPECT_THROW(pointer_loss(rect, short_gold), DimensionError);
}

class LossGradient : public ::testing::TestWithParam<LossKind> {};

TEST_P(LossGradient, MatchesFiniteDifferences) {
  Rng rng(31);
  for (std::size_t n : {1, 2, 3, 5}) {
    ParameterStore ps;
    ps.add("omega", {n, n}).storage() = random_tensor({n, n}, rng, -2, 2).storage();
    const auto gold = rng.permutation(n);
    const auto res = check_gradients(ps, [&](Tape& t) {
      return loss(GetParam(), t.param(ps.get("omega")), gold).value;
    });
    EXPECT_LE(res.max_relative_error, 1e-3) << "n=" << n;
  }
}

INSTANTIATE_TEST_SUITE_P(Kinds, LossGradient, ::testing::Values(LossKind::pointer, LossKind::exclusive));

TEST(Loss, TapeAndValueAgree) {
  Rng rng(2);
  const Tensor omega = random_tensor({4, 4}, rng, -3, 3);
  const auto gold = rng.permutation(4);
  Tape tape;
  Var o = tape.constant(omega);
  const PointerMatrix pm = PointerMatrix::from_scores(omega);
  EXPECT_NEAR(exclusive_loss(o, gold).value.value().item(), exclusive_loss(pm, gold).value, 1e-14);
  EXPECT_NEAR(pointer_loss(o, gold).value.value().item(), pointer_loss(pm, gold).value, 1e-14);
}

TEST(Loss, AsymmetricHandCase) {
  // Rows are positions, columns are sentences; the column term normalizes
  // each sentence's scores over positions.
  const PointerMatrix pm = PointerMatrix::from_scores(Tensor::matrix({{1, 2}, {0, 3}}));
  const std::vector<std::size_t> gold = {0, 1};
  const double row0 = std::log(std::exp(1.0) / (std::exp(1.0) + std::exp(2.0)));
  const double row1 = std::log(std::exp(3.0) / (1.0 + std::exp(3.0)));
  const double col0 = std::log(std::exp(1.0) / (std::exp(1.0) + 1.0));
  const double col1 = std::log(std::exp(3.0) / (std::exp(2.0) + std::exp(3.0)));
  EXPECT_NEAR(pointer_loss(pm, gold).value, -(row0 + row1) / 2, 1e-15);
  EXPECT_NEAR(exclusive_loss(pm, gold).value, -(row0 + row1 + col0 + col1) / 2, 1e-15);
}
