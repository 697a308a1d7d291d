#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "naon/parameter_store.hpp"
#include "naon/rng.hpp"
#include "naon/tape.hpp"

namespace naon::testing {

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.storage()) v = rng.uniform(lo, hi);
  return t;
}

// Strictly positive N x N matrix with rows normalized to sum 1.
inline Tensor random_probs(std::size_t n, Rng& rng) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) total += t.at(i, j) = rng.uniform(0.01, 1.0);
    for (std::size_t j = 0; j < n; ++j) t.at(i, j) /= total;
  }
  return t;
}

// |a - n| / max(|a|, |n|), with an absolute floor for entries whose true
// gradient is (numerically) zero.
inline double relative_error(double analytic, double numeric, double floor = 1e-7) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

struct GradCheck {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

// Central finite differences over every entry of every tensor in `params`
// against the tape's analytic gradient of the scalar built by `loss`.
inline GradCheck check_gradients(ParameterStore& params, const std::function<Var(Tape&)>& loss,
                                 double eps = 1e-4) {
  params.zero_grad();
  for (auto& [name, t] : params) t.ensure_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  GradCheck out;
  for (auto& [name, t] : params) {
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t[i];
      t[i] = saved + eps;
      double plus, minus;
      {
        Tape tape;
        plus = loss(tape).value().item();
      }
      t[i] = saved - eps;
      {
        Tape tape;
        minus = loss(tape).value().item();
      }
      t[i] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      out.max_relative_error = std::max(out.max_relative_error, relative_error(analytic[i], numeric));
      ++out.checked;
    }
  }
  return out;
}

inline std::vector<std::size_t> apply_permutation(const std::vector<std::size_t>& perm,
                                                  const std::vector<std::size_t>& xs) {
  std::vector<std::size_t> out(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out[i] = xs[perm[i]];
  return out;
}

}  // namespace naon::testing
