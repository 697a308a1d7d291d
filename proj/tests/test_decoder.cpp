#include <gtest/gtest.h>

#include <cmath>

#include "naon/decoder.hpp"
#include "naon/encoder.hpp"
#include "naon/error.hpp"
#include "naon/rng.hpp"
#include "test_util.hpp"

using namespace naon;
using naon::testing::random_tensor;

namespace {

ModelConfig small_config(std::size_t d = 8, std::size_t heads = 2) {
  ModelConfig c;
  c.vocab_size = 20;
  c.d_model = d;
  c.heads = heads;
  c.encoder_blocks = 2;
  c.decoder_blocks = 2;
  c.ffn_dim = 2 * d;
  return c;
}

std::vector<Sentence> random_paragraph(std::size_t n, std::size_t vocab, Rng& rng) {
  std::vector<Sentence> out(n);
  for (auto& s : out) {
    const std::size_t len = 1 + rng.below(4);
    for (std::size_t k = 0; k < len; ++k) s.tokens.push_back(static_cast<TokenId>(rng.below(vocab)));
  }
  return out;
}

}  // namespace

TEST(PositionalEncoding, KnownValues) {
  const Tensor p = positional_encoding(3, 6);
  for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(p.at(0, j), j % 2 == 0 ? 0.0 : 1.0);
  EXPECT_NEAR(p.at(1, 0), 0.841471, 1e-6);
  EXPECT_NEAR(p.at(2, 0), 0.909297, 1e-6);
  EXPECT_NEAR(p.at(1, 1), std::cos(1.0), 1e-15);
  // j = 1 frequency is 10000^(-2/6).
  EXPECT_NEAR(p.at(2, 2), std::sin(2.0 / std::pow(10000.0, 1.0 / 3.0)), 1e-15);
}

TEST(PositionalEncoding, OddWidthRejectedAndCacheMatches) {
  EXPECT_THROW(positional_encoding(3, 5), ConfigError);
  for (std::size_t n : {1, 4, 9})
    for (std::size_t d : {2, 8, 64}) EXPECT_EQ(cached_positional_encoding(n, d), positional_encoding(n, d));
}

TEST(CrossAttend, SingleSentenceIsCopied) {
  Rng rng(1);
  const Tensor pos = random_tensor({3, 4}, rng);
  const Tensor ctx = random_tensor({1, 4}, rng);
  for (std::size_t heads : {1, 2, 4}) {
    const Tensor out = cross_attend(pos, ctx, heads);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(out.at(i, j), ctx[j]);
  }
}

TEST(CrossAttend, IdenticalSentencesGiveThatRow) {
  Rng rng(2);
  const Tensor pos = random_tensor({4, 4}, rng);
  const Tensor row = random_tensor({1, 4}, rng);
  Tensor ctx({4, 4});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) ctx.at(i, j) = row[j];
  const Tensor out = cross_attend(pos, ctx, 2);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out.at(i, j), row[j], 1e-15);
}

TEST(CrossAttend, HandSetTwoByTwo) {
  // One head, d = 2: scores P E^T / sqrt 2.
  const Tensor pos = Tensor::matrix({{1, 0}, {0, 2}});
  const Tensor ctx = Tensor::matrix({{1, 1}, {-1, 3}});
  // Row 0 scores [1, -1] / sqrt2; row 1 scores [2, 6] / sqrt2.
  auto mix = [&](double s0, double s1) {
    const double w0 = 1.0 / (1.0 + std::exp((s1 - s0) / std::sqrt(2.0)));
    return std::make_pair(w0 * 1 + (1 - w0) * -1, w0 * 1 + (1 - w0) * 3);
  };
  const Tensor out = cross_attend(pos, ctx, 1);
  const auto r0 = mix(1, -1), r1 = mix(2, 6);
  EXPECT_NEAR(out.at(0, 0), r0.first, 1e-15);
  EXPECT_NEAR(out.at(0, 1), r0.second, 1e-15);
  EXPECT_NEAR(out.at(1, 0), r1.first, 1e-15);
  EXPECT_NEAR(out.at(1, 1), r1.second, 1e-15);
}

TEST(CrossAttend, HeadsSplitColumns) {
  // With two heads of width 1 each column is attended independently.
  const Tensor pos = Tensor::matrix({{1, 0}});
  const Tensor ctx = Tensor::matrix({{2, 5}, {0, 7}});
  const Tensor out = cross_attend(pos, ctx, 2);
  const double w = 1.0 / (1.0 + std::exp(-2.0));
  EXPECT_NEAR(out[0], w * 2, 1e-15);
  EXPECT_NEAR(out[1], 6.0, 1e-15);  // zero query: uniform weights
  EXPECT_THROW(cross_attend(pos, ctx, 3), ConfigError);
}

TEST(PositionSelfAttention, DependsOnlyOnCountAndWidth) {
  const ModelConfig c = small_config();
  ParameterStore ps = create_parameters(c, 5);
  const Tensor p = positional_encoding(5, 8);
  EXPECT_EQ(position_self_attention(p, ps, c, 0), position_self_attention(p, ps, c, 0));
  const Tensor single = position_self_attention(positional_encoding(1, 8), ps, c, 0);
  EXPECT_TRUE(single.all_finite());
  EXPECT_EQ(single.rows(), 1u);
}

TEST(PointerScores, ZeroVectorGivesUniform) {
  const ModelConfig c = small_config();
  ParameterStore ps = create_parameters(c, 6);
  for (double& v : ps.get("pointer.u").storage()) v = 0.0;
  Rng rng(6);
  const PointerMatrix pm = pointer_scores(random_tensor({3, 8}, rng), random_tensor({3, 8}, rng), ps, c);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(pm.omega[i], 0.0);
    EXPECT_NEAR(pm.row_probs[i], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(pm.col_probs[i], 1.0 / 3.0, 1e-15);
  }
}

TEST(PointerScores, HandSetWidthTwo) {
  const ModelConfig c = small_config(2, 1);
  ParameterStore ps = create_parameters(c, 7);
  auto set = [&](const char* name, std::initializer_list<double> v) {
    std::copy(v.begin(), v.end(), ps.get(name).storage().begin());
  };
  set("pointer.wp", {1, 0, 0, 1});
  set("pointer.wb", {2, 0, 0, -1});
  set("pointer.u", {1, 0.5});
  const Tensor ep = Tensor::matrix({{0.1, 0.2}, {0.3, -0.4}});
  const Tensor eb = Tensor::matrix({{0.5, 0.0}, {-0.2, 0.6}});
  const PointerMatrix pm = pointer_scores(ep, eb, ps, c);
  // W_b e^b rows: [1, 0] and [-0.4, -0.6].
  const double w00 = std::tanh(0.1 + 1) + 0.5 * std::tanh(0.2 + 0);
  const double w01 = std::tanh(0.1 - 0.4) + 0.5 * std::tanh(0.2 - 0.6);
  const double w10 = std::tanh(0.3 + 1) + 0.5 * std::tanh(-0.4 + 0);
  const double w11 = std::tanh(0.3 - 0.4) + 0.5 * std::tanh(-0.4 - 0.6);
  EXPECT_NEAR(pm.omega.at(0, 0), w00, 1e-15);
  EXPECT_NEAR(pm.omega.at(0, 1), w01, 1e-15);
  EXPECT_NEAR(pm.omega.at(1, 0), w10, 1e-15);
  EXPECT_NEAR(pm.omega.at(1, 1), w11, 1e-15);
  EXPECT_NEAR(pm.row_probs.at(0, 0), 1.0 / (1.0 + std::exp(w01 - w00)), 1e-15);
  EXPECT_NEAR(pm.col_probs.at(0, 0), 1.0 / (1.0 + std::exp(w10 - w00)), 1e-15);
}

TEST(PointerMatrix, UniformScores) {
  const PointerMatrix pm = PointerMatrix::from_scores(Tensor({3, 3}, 0.7));
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_NEAR(pm.row_probs[i], 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(pm.col_probs[i], 1.0 / 3.0, 1e-15);
  }
}

TEST(Forward, SingleSentence) {
  const ModelConfig c = small_config();
  ParameterStore ps = create_parameters(c, 8);
  const PointerMatrix pm = forward({Sentence{{3, 4}}}, ps, c);
  ASSERT_EQ(pm.size(), 1u);
  EXPECT_EQ(pm.row_probs[0], 1.0);
  EXPECT_EQ(pm.col_probs[0], 1.0);
  EXPECT_THROW(forward({}, ps, c), InputError);
}

TEST(Forward, EvalDeterministicAndNormalized) {
  const ModelConfig c = small_config();
  ParameterStore ps = create_parameters(c, 9);
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const auto s = random_paragraph(1 + rng.below(7), c.vocab_size, rng);
    const PointerMatrix a = forward(s, ps, c);
    const PointerMatrix b = forward(s, ps, c);
    EXPECT_EQ(a.omega, b.omega);
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0, col = 0;
      for (std::size_t j = 0; j < n; ++j) {
        row += a.row_probs.at(i, j);
        col += a.col_probs.at(j, i);
      }
      EXPECT_NEAR(row, 1.0, 1e-12);
      EXPECT_NEAR(col, 1.0, 1e-12);
    }
  }
}

class ColumnEquivariance : public ::testing::TestWithParam<PointerSource> {};

TEST_P(ColumnEquivariance, PermutingSentencesPermutesColumns) {
  ModelConfig c = small_config();
  c.pointer_source = GetParam();
  ParameterStore ps = create_parameters(c, 10);
  Rng rng(10);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 1 + rng.below(8);
    const auto s = random_paragraph(n, c.vocab_size, rng);
    const auto perm = rng.permutation(n);
    std::vector<Sentence> permuted(n);
    for (std::size_t k = 0; k < n; ++k) permuted[k] = s[perm[k]];
    const Tensor base = forward(s, ps, c).omega;
    const Tensor moved = forward(permuted, ps, c).omega;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) EXPECT_NEAR(moved.at(i, k), base.at(i, perm[k]), 1e-9);
  }
}

INSTANTIATE_TEST_SUITE_P(Sources, ColumnEquivariance,
                         ::testing::Values(PointerSource::basic, PointerSource::contextual));

TEST(Forward, TrainModeDropoutIsSeeded) {
  const ModelConfig c = small_config();
  ParameterStore ps = create_parameters(c, 11);
  const std::vector<Sentence> s = {Sentence{{1}}, Sentence{{2, 3}}, Sentence{{4}}};
  Rng r1(3), r2(3);
  const PointerMatrix a = forward(s, ps, c, Mode::train, 0.3, &r1);
  const PointerMatrix b = forward(s, ps, c, Mode::train, 0.3, &r2);
  EXPECT_EQ(a.omega, b.omega);
  EXPECT_NE(a.omega, forward(s, ps, c).omega);
}
