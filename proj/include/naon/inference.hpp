#pragma once

#include <span>
#include <string>
#include <vector>

#include "naon/decoder.hpp"

namespace naon {

enum class DecodeMethod { greedy, raw_argmax, hungarian, brute_force };

std::string to_string(DecodeMethod method);
// Accepts "greedy", "raw" / "raw_argmax", "hungarian", "brute_force".
DecodeMethod parse_decode_method(const std::string& name);

// assignment[i] is the sentence placed at position i. Every method except
// raw_argmax yields a permutation.
struct OrderPrediction {
  std::vector<std::size_t> assignment;
  DecodeMethod method = DecodeMethod::greedy;
};

// Greedy selective-and-removing: take the largest remaining cell, record
// (row, column), zero that row and column, repeat until the matrix is zero.
// Ties go to the smallest row, then the smallest column. Throws ContractError
// unless every entry is strictly positive.
OrderPrediction greedy_assign(const Tensor& probs);

// Per-row argmax, repetitions allowed; ties go to the smallest column.
OrderPrediction raw_argmax(const Tensor& probs);

// Permutation maximizing sum_i log probs[i][assignment[i]] (O(N^3)).
OrderPrediction hungarian_assign(const Tensor& probs);

// Exhaustive search over all N! permutations in lexicographic order, keeping
// the first maximum. Throws ScaleError for N > 8.
OrderPrediction brute_force_assign(const Tensor& probs);

inline constexpr std::size_t kBruteForceLimit = 8;

// Decoders applied to ptr.row_probs.
OrderPrediction decode(const PointerMatrix& ptr, DecodeMethod method);
OrderPrediction decode(const Tensor& probs, DecodeMethod method);

// sum_i log probs[i][assignment[i]], accumulated in position order.
double log_objective(const Tensor& probs, std::span<const std::size_t> assignment);

}  // namespace naon
