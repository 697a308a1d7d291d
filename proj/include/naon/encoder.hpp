#pragma once

#include <string>
#include <vector>

#include "naon/model.hpp"
#include "naon/paragraph.hpp"

namespace naon {

// Basic and contextual sentence representations, one row per sentence.
struct EncoderState {
  Tensor basic;       // E_b, [N x d]
  Tensor contextual;  // E_c, [N x d]
};

// Basic representations for every sentence: mean of token embeddings, then
// tanh(x W + b).
Var embed_sentences(ForwardPass& fp, const std::vector<Sentence>& sentences);

// Multi-head scaled dot-product attention of `queries` over `keys_values`,
// with per-head projections `<prefix>.head<k>.{query,key,value}` and the
// output projection `<prefix>.output`. Scores are divided by sqrt(d / heads).
Var multi_head_attention(ForwardPass& fp, Var queries, Var keys_values, const std::string& prefix);

// Encoder block `block_index`: self-attention and a ReLU feed-forward
// sublayer, each followed by residual add and layer normalization.
Var attention_block(ForwardPass& fp, Var x, std::size_t block_index);

// All configured encoder blocks in sequence. No positional term enters, so the
// result is equivariant under row permutations of `basic`.
Var encode_context(ForwardPass& fp, Var basic);

// Eval-mode conveniences on plain tensors.
std::vector<double> embed_sentence(const Sentence& s, ParameterStore& params,
                                   const ModelConfig& config);
Tensor attention_block(const Tensor& x, ParameterStore& params, const ModelConfig& config,
                       std::size_t block_index);
Tensor encode_context(const Tensor& basic, ParameterStore& params, const ModelConfig& config);
EncoderState encode(const std::vector<Sentence>& sentences, ParameterStore& params,
                    const ModelConfig& config);

}  // namespace naon
