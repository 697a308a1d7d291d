#pragma once

#include <vector>

#include "naon/encoder.hpp"

namespace naon {

// Sinusoidal position codes, positions counted from 0:
//   p[i][2j] = sin(i / 10000^(2j/d)),  p[i][2j+1] = cos(i / 10000^(2j/d)).
// Throws ConfigError for odd d.
Tensor positional_encoding(std::size_t n, std::size_t d);
// Same values, memoized per (n, d). Thread-safe.
const Tensor& cached_positional_encoding(std::size_t n, std::size_t d);

// Scores omega (rows = positions, columns = sentences) with the row-wise and
// column-wise softmax normalizations.
struct PointerMatrix {
  Tensor omega;
  Tensor row_probs;
  Tensor col_probs;

  static PointerMatrix from_scores(Tensor omega);
  std::size_t size() const noexcept { return omega.rows(); }
};

// Self-attention among position codes (decoder block `block_index`), then
// residual add and layer normalization.
Var position_self_attention(ForwardPass& fp, Var positions, std::size_t block_index);

// Parameter-free multi-head attention of positions over contextual sentence
// representations: each head attends with its own column slice, scaled by
// sqrt(d / heads), and the head outputs are concatenated.
Var cross_attend(Var positions, Var contextual, std::size_t heads);

// Decoder stack: every block runs position self-attention, then the
// cross-attention sublayer with residual add and layer normalization.
Var decode_positions(ForwardPass& fp, Var contextual, std::size_t n);

// omega[i][j] = u^T tanh(W_p e^p_i + W_b e^s_j).
Var pointer_scores(ForwardPass& fp, Var position_reps, Var sentence_reps);

struct ForwardResult {
  Var basic;
  Var contextual;
  Var position_reps;
  Var omega;
};

// Embed, encode, decode and score one paragraph on fp.tape.
ForwardResult forward(ForwardPass& fp, const std::vector<Sentence>& sentences);

// Plain-value forward pass. Train mode needs `rng` for dropout.
PointerMatrix forward(const std::vector<Sentence>& sentences, ParameterStore& params,
                      const ModelConfig& config, Mode mode = Mode::eval, double dropout = 0.0,
                      Rng* rng = nullptr);

// Eval-mode conveniences on plain tensors.
Tensor position_self_attention(const Tensor& positions, ParameterStore& params,
                               const ModelConfig& config, std::size_t block_index);
Tensor cross_attend(const Tensor& positions, const Tensor& contextual, std::size_t heads);
PointerMatrix pointer_scores(const Tensor& position_reps, const Tensor& sentence_reps,
                             ParameterStore& params, const ModelConfig& config);

}  // namespace naon
