#include "naon/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "naon/error.hpp"

namespace naon {

std::string to_string(DecodeMethod method) {
  switch (method) {
    case DecodeMethod::greedy: return "greedy";
    case DecodeMethod::raw_argmax: return "raw_argmax";
    case DecodeMethod::hungarian: return "hungarian";
    case DecodeMethod::brute_force: return "brute_force";
  }
  return "unknown";
}

DecodeMethod parse_decode_method(const std::string& name) {
  if (name == "greedy") return DecodeMethod::greedy;
  if (name == "raw" || name == "raw_argmax") return DecodeMethod::raw_argmax;
  if (name == "hungarian") return DecodeMethod::hungarian;
  if (name == "brute_force") return DecodeMethod::brute_force;
  throw InputError("unknown decode method '" + name + "' (expected greedy, raw or hungarian)");
}

namespace {

void require_square(const Tensor& probs) {
  if (probs.rows() != probs.cols()) {
    throw DimensionError("probability matrix must be square, got " + shape_string(probs.shape()));
  }
}

void require_positive(const Tensor& probs, const char* who) {
  require_square(probs);
  for (double v : probs.data()) {
    if (!(v > 0.0)) throw ContractError(std::string(who) + ": matrix has a non-positive entry");
  }
}

}  // namespace

OrderPrediction greedy_assign(const Tensor& probs) {
  require_positive(probs, "greedy_assign");
  const std::size_t n = probs.rows();
  Tensor work(probs.shape(), probs.storage());
  OrderPrediction out{std::vector<std::size_t>(n, 0), DecodeMethod::greedy};
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t best_r = 0, best_c = 0;
    double best = -1.0;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        if (work.at(r, c) > best) {
          best = work.at(r, c);
          best_r = r;
          best_c = c;
        }
      }
    }
    out.assignment[best_r] = best_c;
    for (std::size_t k = 0; k < n; ++k) {
      work.at(best_r, k) = 0.0;
      work.at(k, best_c) = 0.0;
    }
  }
  return out;
}

OrderPrediction raw_argmax(const Tensor& probs) {
  const std::size_t r = probs.rows(), c = probs.cols();
  OrderPrediction out{std::vector<std::size_t>(r, 0), DecodeMethod::raw_argmax};
  for (std::size_t i = 0; i < r; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j)
      if (probs.at(i, j) > probs.at(i, best)) best = j;
    out.assignment[i] = best;
  }
  return out;
}

OrderPrediction hungarian_assign(const Tensor& probs) {
  require_positive(probs, "hungarian_assign");
  const std::size_t n = probs.rows();
  constexpr double inf = std::numeric_limits<double>::infinity();
  // Shortest augmenting paths with row/column potentials on cost = -log p.
  // Index 0 is a sentinel; rows and columns are 1-based inside the loop.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  auto cost = [&](std::size_t r, std::size_t c) { return -std::log(probs.at(r - 1, c - 1)); };
  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const std::size_t r0 = match[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double cur = cost(r0, c) - u[r0] - v[c];
        if (cur < minv[c]) {
          minv[c] = cur;
          way[c] = col0;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          col1 = c;
        }
      }
      for (std::size_t c = 0; c <= n; ++c) {
        if (used[c]) {
          u[match[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  OrderPrediction out{std::vector<std::size_t>(n, 0), DecodeMethod::hungarian};
  for (std::size_t c = 1; c <= n; ++c) out.assignment[match[c] - 1] = c - 1;
  return out;
}

OrderPrediction brute_force_assign(const Tensor& probs) {
  require_square(probs);
  const std::size_t n = probs.rows();
  if (n > kBruteForceLimit) {
    throw ScaleError("brute_force_assign supports N <= " + std::to_string(kBruteForceLimit) +
                     ", got " + std::to_string(n));
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::size_t> best = perm;
  double best_score = -std::numeric_limits<double>::infinity();
  do {
    const double score = log_objective(probs, perm);
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return {best, DecodeMethod::brute_force};
}

OrderPrediction decode(const Tensor& probs, DecodeMethod method) {
  switch (method) {
    case DecodeMethod::greedy: return greedy_assign(probs);
    case DecodeMethod::raw_argmax: return raw_argmax(probs);
    case DecodeMethod::hungarian: return hungarian_assign(probs);
    case DecodeMethod::brute_force: return brute_force_assign(probs);
  }
  throw ContractError("unhandled decode method");
}

OrderPrediction decode(const PointerMatrix& ptr, DecodeMethod method) {
  return decode(ptr.row_probs, method);
}

double log_objective(const Tensor& probs, std::span<const std::size_t> assignment) {
  if (assignment.size() != probs.rows()) {
    throw DimensionError("assignment length " + std::to_string(assignment.size()) +
                         " does not match " + std::to_string(probs.rows()) + " rows");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i) total += std::log(probs.at(i, assignment[i]));
  return total;
}

}  // namespace naon
