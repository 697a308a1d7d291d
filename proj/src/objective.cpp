#include "naon/objective.hpp"

#include "naon/error.hpp"

namespace naon {

namespace {

void check_gold(Var omega, std::span<const std::size_t> gold_order) {
  if (omega.rows() != omega.cols()) {
    throw DimensionError("pointer scores must be square, got " +
                         shape_string(omega.value().shape()));
  }
  require_permutation(gold_order, omega.rows());
}

LossValue to_value(const LossVars& v) {
  return {v.value.value().item(), v.terms.value().storage()};
}

}  // namespace

LossVars pointer_loss(Var omega, std::span<const std::size_t> gold_order) {
  check_gold(omega, gold_order);
  Var terms = scale(pick_per_row(row_log_softmax(omega), gold_order), -1.0);
  return {mean(terms), terms};
}

LossVars exclusive_loss(Var omega, std::span<const std::size_t> gold_order) {
  check_gold(omega, gold_order);
  Var row_term = pick_per_row(row_log_softmax(omega), gold_order);
  Var col_term = pick_per_row(col_log_softmax(omega), gold_order);
  Var terms = scale(add(row_term, col_term), -1.0);
  return {mean(terms), terms};
}

LossVars loss(LossKind kind, Var omega, std::span<const std::size_t> gold_order) {
  return kind == LossKind::pointer ? pointer_loss(omega, gold_order)
                                   : exclusive_loss(omega, gold_order);
}

LossValue pointer_loss(const PointerMatrix& ptr, std::span<const std::size_t> gold_order) {
  Tape tape;
  return to_value(pointer_loss(tape.constant(ptr.omega), gold_order));
}

LossValue exclusive_loss(const PointerMatrix& ptr, std::span<const std::size_t> gold_order) {
  Tape tape;
  return to_value(exclusive_loss(tape.constant(ptr.omega), gold_order));
}

}  // namespace naon
