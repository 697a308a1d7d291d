#pragma once

#include <span>
#include <vector>

#include "naon/decoder.hpp"

namespace naon {

enum class LossKind { pointer, exclusive };

struct LossValue {
  double value = 0.0;
  std::vector<double> per_position_terms;
};

// Differentiable loss: the scalar mean and the [N x 1] per-position terms.
struct LossVars {
  Var value;
  Var terms;
};

// L_c: mean over positions i of -log row_softmax(omega)[i][gold[i]].
LossVars pointer_loss(Var omega, std::span<const std::size_t> gold_order);

// L_ex: mean over positions i of
//   -(log row_softmax(omega)[i][gold[i]] + log col_softmax(omega)[i][gold[i]]).
// The column term is the probability of position i among all positions for
// the sentence that belongs there.
LossVars exclusive_loss(Var omega, std::span<const std::size_t> gold_order);

LossVars loss(LossKind kind, Var omega, std::span<const std::size_t> gold_order);

LossValue pointer_loss(const PointerMatrix& ptr, std::span<const std::size_t> gold_order);
LossValue exclusive_loss(const PointerMatrix& ptr, std::span<const std::size_t> gold_order);

}  // namespace naon
