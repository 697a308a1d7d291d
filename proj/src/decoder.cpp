#include "naon/decoder.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "naon/error.hpp"

namespace naon {

Tensor positional_encoding(std::size_t n, std::size_t d) {
  if (d % 2 != 0) throw ConfigError("positional encoding needs an even width, got " + std::to_string(d));
  Tensor p({n, d});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; 2 * j < d; ++j) {
      const double angle =
          static_cast<double>(i) / std::pow(10000.0, static_cast<double>(2 * j) / static_cast<double>(d));
      p.at(i, 2 * j) = std::sin(angle);
      p.at(i, 2 * j + 1) = std::cos(angle);
    }
  }
  return p;
}

const Tensor& cached_positional_encoding(std::size_t n, std::size_t d) {
  static std::mutex mu;
  static std::map<std::pair<std::size_t, std::size_t>, Tensor> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({n, d});
  if (it == cache.end()) it = cache.emplace(std::make_pair(n, d), positional_encoding(n, d)).first;
  return it->second;
}

PointerMatrix PointerMatrix::from_scores(Tensor omega) {
  PointerMatrix pm;
  const std::size_t r = omega.rows(), c = omega.cols();
  pm.row_probs = Tensor(omega.shape(), omega.storage());
  kernels::softmax_rows_inplace(pm.row_probs);
  pm.col_probs = Tensor(omega.shape());
  for (std::size_t j = 0; j < c; ++j) {
    double mx = omega.at(0, j);
    for (std::size_t i = 1; i < r; ++i) mx = std::max(mx, omega.at(i, j));
    double total = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      pm.col_probs.at(i, j) = std::exp(omega.at(i, j) - mx);
      total += pm.col_probs.at(i, j);
    }
    for (std::size_t i = 0; i < r; ++i) pm.col_probs.at(i, j) /= total;
  }
  pm.omega = std::move(omega);
  return pm;
}

Var position_self_attention(ForwardPass& fp, Var positions, std::size_t block_index) {
  if (block_index >= fp.config.decoder_blocks) {
    throw ContractError("decoder block " + std::to_string(block_index) + " does not exist");
  }
  const std::string p = "dec." + std::to_string(block_index);
  Var attended = multi_head_attention(fp, positions, positions, p + ".self");
  return layer_norm(add(positions, fp.drop(attended)), fp.param(p + ".norm1.gain"),
                    fp.param(p + ".norm1.bias"));
}

Var cross_attend(Var positions, Var contextual, std::size_t heads) {
  const std::size_t d = positions.cols();
  if (contextual.cols() != d) {
    throw DimensionError("cross_attend: position width " + std::to_string(d) +
                         " differs from sentence width " + std::to_string(contextual.cols()));
  }
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("cross_attend: width " + std::to_string(d) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  const std::size_t dk = d / heads;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  if (heads == 1) {
    return matmul(row_softmax(scale(matmul_nt(positions, contextual), inv_sqrt_dk)), contextual);
  }
  std::vector<Var> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Var q = slice_cols(positions, h * dk, dk);
    Var kv = slice_cols(contextual, h * dk, dk);
    outs.push_back(matmul(row_softmax(scale(matmul_nt(q, kv), inv_sqrt_dk)), kv));
  }
  return concat_cols(outs);
}

Var decode_positions(ForwardPass& fp, Var contextual, std::size_t n) {
  Var x = fp.tape.constant(cached_positional_encoding(n, fp.config.d_model));
  for (std::size_t b = 0; b < fp.config.decoder_blocks; ++b) {
    const std::string p = "dec." + std::to_string(b);
    x = position_self_attention(fp, x, b);
    Var attended = cross_attend(x, contextual, fp.config.heads);
    x = layer_norm(add(x, fp.drop(attended)), fp.param(p + ".norm2.gain"),
                   fp.param(p + ".norm2.bias"));
  }
  return x;
}

Var pointer_scores(ForwardPass& fp, Var position_reps, Var sentence_reps) {
  Var a = matmul(position_reps, fp.param("pointer.wp"));
  Var b = matmul(sentence_reps, fp.param("pointer.wb"));
  return additive_scores(a, b, fp.param("pointer.u"));
}

ForwardResult forward(ForwardPass& fp, const std::vector<Sentence>& sentences) {
  if (sentences.empty()) throw InputError("cannot order an empty paragraph");
  ForwardResult r;
  r.basic = embed_sentences(fp, sentences);
  r.contextual = encode_context(fp, r.basic);
  r.position_reps = decode_positions(fp, r.contextual, sentences.size());
  Var keys = fp.config.pointer_source == PointerSource::basic ? r.basic : r.contextual;
  r.omega = pointer_scores(fp, r.position_reps, keys);
  return r;
}

PointerMatrix forward(const std::vector<Sentence>& sentences, ParameterStore& params,
                      const ModelConfig& config, Mode mode, double dropout, Rng* rng) {
  Tape tape;
  ForwardPass fp{tape, params, config, mode, dropout, rng};
  return PointerMatrix::from_scores(forward(fp, sentences).omega.value());
}

Tensor position_self_attention(const Tensor& positions, ParameterStore& params,
                               const ModelConfig& config, std::size_t block_index) {
  Tape tape;
  ForwardPass fp{tape, params, config};
  return position_self_attention(fp, tape.constant(positions), block_index).value();
}

Tensor cross_attend(const Tensor& positions, const Tensor& contextual, std::size_t heads) {
  Tape tape;
  return cross_attend(tape.constant(positions), tape.constant(contextual), heads).value();
}

PointerMatrix pointer_scores(const Tensor& position_reps, const Tensor& sentence_reps,
                             ParameterStore& params, const ModelConfig& config) {
  if (position_reps.rows() != sentence_reps.rows()) {
    throw DimensionError("pointer_scores: " + std::to_string(position_reps.rows()) +
                         " positions for " + std::to_string(sentence_reps.rows()) + " sentences");
  }
  Tape tape;
  ForwardPass fp{tape, params, config};
  return PointerMatrix::from_scores(
      pointer_scores(fp, tape.constant(position_reps), tape.constant(sentence_reps)).value());
}

}  // namespace naon
