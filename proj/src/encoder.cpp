#include "naon/encoder.hpp"

#include <cmath>

#include "naon/error.hpp"

namespace naon {

Var embed_sentences(ForwardPass& fp, const std::vector<Sentence>& sentences) {
  std::vector<std::vector<TokenId>> bags;
  bags.reserve(sentences.size());
  for (const auto& s : sentences) {
    if (s.tokens.empty()) throw InputError("cannot embed an empty sentence");
    bags.push_back(s.tokens);
  }
  Var pooled = embedding_bag_mean(fp.param("embed.table"), bags);
  return tanh_map(add_row(matmul(pooled, fp.param("embed.proj.weight")),
                          fp.param("embed.proj.bias")));
}

Var multi_head_attention(ForwardPass& fp, Var queries, Var keys_values, const std::string& prefix) {
  const ModelConfig& c = fp.config;
  if (c.heads == 0 || c.d_model % c.heads != 0) {
    throw ConfigError("d_model " + std::to_string(c.d_model) + " is not divisible by heads " +
                      std::to_string(c.heads));
  }
  if (queries.cols() != c.d_model || keys_values.cols() != c.d_model) {
    throw DimensionError("attention inputs must have width " + std::to_string(c.d_model));
  }
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(c.head_dim()));
  std::vector<Var> heads;
  heads.reserve(c.heads);
  for (std::size_t h = 0; h < c.heads; ++h) {
    const std::string head = prefix + ".head" + std::to_string(h);
    Var q = matmul(queries, fp.param(head + ".query"));
    Var k = matmul(keys_values, fp.param(head + ".key"));
    Var v = matmul(keys_values, fp.param(head + ".value"));
    Var weights = row_softmax(scale(matmul_nt(q, k), inv_sqrt_dk));
    heads.push_back(matmul(weights, v));
  }
  Var joined = heads.size() == 1 ? heads[0] : concat_cols(heads);
  return matmul(joined, fp.param(prefix + ".output"));
}

Var attention_block(ForwardPass& fp, Var x, std::size_t block_index) {
  if (block_index >= fp.config.encoder_blocks) {
    throw ContractError("encoder block " + std::to_string(block_index) + " does not exist");
  }
  const std::string p = "enc." + std::to_string(block_index);
  Var attended = multi_head_attention(fp, x, x, p + ".attn");
  Var h = layer_norm(add(x, fp.drop(attended)), fp.param(p + ".norm1.gain"),
                     fp.param(p + ".norm1.bias"));
  Var inner = relu(add_row(matmul(h, fp.param(p + ".ffn.w1")), fp.param(p + ".ffn.b1")));
  Var ffn = add_row(matmul(inner, fp.param(p + ".ffn.w2")), fp.param(p + ".ffn.b2"));
  return layer_norm(add(h, fp.drop(ffn)), fp.param(p + ".norm2.gain"),
                    fp.param(p + ".norm2.bias"));
}

Var encode_context(ForwardPass& fp, Var basic) {
  Var x = basic;
  for (std::size_t b = 0; b < fp.config.encoder_blocks; ++b) x = attention_block(fp, x, b);
  return x;
}

std::vector<double> embed_sentence(const Sentence& s, ParameterStore& params,
                                   const ModelConfig& config) {
  Tape tape;
  ForwardPass fp{tape, params, config};
  Var e = embed_sentences(fp, {s});
  return e.value().storage();
}

Tensor attention_block(const Tensor& x, ParameterStore& params, const ModelConfig& config,
                       std::size_t block_index) {
  Tape tape;
  ForwardPass fp{tape, params, config};
  return attention_block(fp, tape.constant(x), block_index).value();
}

Tensor encode_context(const Tensor& basic, ParameterStore& params, const ModelConfig& config) {
  Tape tape;
  ForwardPass fp{tape, params, config};
  return encode_context(fp, tape.constant(basic)).value();
}

EncoderState encode(const std::vector<Sentence>& sentences, ParameterStore& params,
                    const ModelConfig& config) {
  Tape tape;
  ForwardPass fp{tape, params, config};
  Var basic = embed_sentences(fp, sentences);
  Var contextual = encode_context(fp, basic);
  return {basic.value(), contextual.value()};
}

}  // namespace naon
