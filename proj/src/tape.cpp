#include "naon/tape.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "naon/error.hpp"
#include "naon/rng.hpp"

namespace naon {

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Tensor value) {
  value.set_requires_grad(false);
  nodes_.push_back(Node{std::move(value), Tensor{}, nullptr, false, nullptr});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::param(Tensor& tensor) {
  if (auto it = param_ids_.find(&tensor); it != param_ids_.end()) return Var(this, it->second);
  // The leaf keeps its own copy of the value so later in-place updates to the
  // parameter cannot change a recorded forward pass.
  Tensor copy(tensor.shape(), tensor.storage());
  nodes_.push_back(Node{std::move(copy), Tensor{}, &tensor, true, nullptr});
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_ids_.emplace(&tensor, id);
  return Var(this, id);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backprop backprop) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backprop));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Backprop backprop) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw ContractError("operands recorded on different tapes");
    needs = needs || nodes_[in.id()].needs_grad;
  }
  nodes_.push_back(Node{std::move(value), Tensor{}, nullptr, needs,
                        needs ? std::move(backprop) : Backprop{}});
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Tensor& Tape::grad_buffer(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.size() != n.value.size()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ContractError("backward on a foreign tape");
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " + shape_string(lv.shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor{};
  grad_buffer(loss.id())[0] = 1.0;
  for (std::int64_t i = loss.id(); i >= 0; --i) {
    const auto id = static_cast<std::uint32_t>(i);
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.param) {
      auto dst = n.param->ensure_grad();
      const auto src = n.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    } else if (n.backprop) {
      n.backprop(*this, id);
    }
  }
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

template <typename F>
void accumulate(Tape& t, Var v, F&& f) {
  if (t.needs_grad(v)) f(t.grad_buffer(v.id()));
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.rows()) {
    throw DimensionError("matmul: inner dimensions differ for " + shape_string(A.shape()) +
                         " and " + shape_string(B.shape()));
  }
  Tensor out({A.rows(), B.cols()});
  kernels::gemm(A, false, B, false, out, false);
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad_of(self);
    accumulate(t, a, [&](Tensor& ga) { kernels::gemm(g, false, b.value(), true, ga, true); });
    accumulate(t, b, [&](Tensor& gb) { kernels::gemm(a.value(), true, g, false, gb, true); });
  });
}

Var matmul_nt(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.cols()) {
    throw DimensionError("matmul_nt: inner dimensions differ for " + shape_string(A.shape()) +
                         " and " + shape_string(B.shape()) + "^T");
  }
  Tensor out({A.rows(), B.rows()});
  kernels::gemm(A, false, B, true, out, false);
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad_of(self);
    accumulate(t, a, [&](Tensor& ga) { kernels::gemm(g, false, b.value(), false, ga, true); });
    accumulate(t, b, [&](Tensor& gb) { kernels::gemm(g, true, a.value(), false, gb, true); });
  });
}

Var transpose(Var a) {
  const Tensor& A = a.value();
  const std::size_t r = A.rows(), c = A.cols();
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = A.at(i, j);
  return a.tape().record(std::move(out), {a}, [a, r, c](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad_of(self);
    accumulate(t, a, [&](Tensor& ga) {
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) ga.at(i, j) += g.at(j, i);
    });
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = Tensor(a.value().shape(), a.value().storage());
  const auto bd = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const auto g = t.grad_of(self).data();
    for (Var v : {a, b}) {
      accumulate(t, v, [&](Tensor& gv) {
        for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
      });
    }
  });
}

Var add_row(Var x, Var bias) {
  const Tensor& X = x.value();
  const Tensor& B = bias.value();
  if (B.size() != X.cols()) {
    throw DimensionError("add_row: bias " + shape_string(B.shape()) + " does not fit " +
                         shape_string(X.shape()));
  }
  Tensor out(X.shape(), X.storage());
  const std::size_t r = X.rows(), c = X.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) += B[j];
  return x.tape().record(std::move(out), {x, bias}, [x, bias, r, c](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad_of(self);
    accumulate(t, x, [&](Tensor& gx) {
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
    accumulate(t, bias, [&](Tensor& gb) {
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) gb[j] += g.at(i, j);
    });
  });
}

Var scale(Var a, double s) {
  Tensor out(a.value().shape(), a.value().storage());
  for (double& v : out.storage()) v *= s;
  return a.tape().record(std::move(out), {a}, [a, s](Tape& t, std::uint32_t self) {
    const auto g = t.grad_of(self).data();
    accumulate(t, a, [&](Tensor& ga) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
    });
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out(a.value().shape(), a.value().storage());
  const auto bd = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bd[i];
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape& t, std::uint32_t self) {
    const auto g = t.grad_of(self).data();
    const auto av = a.value().data();
    const auto bv = b.value().data();
    accumulate(t, a, [&](Tensor& ga) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    });
    accumulate(t, b, [&](Tensor& gb) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    });
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return a.tape().record(Tensor::scalar(total), {a}, [a](Tape& t, std::uint32_t self) {
    const double g = t.grad_of(self)[0];
    accumulate(t, a, [&](Tensor& ga) {
      for (double& v : ga.storage()) v += g;
    });
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw DimensionError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var tanh_map(Var a) {
  Tensor out(a.value().shape(), a.value().storage());
  for (double& v : out.storage()) v = std::tanh(v);
  return a.tape().record(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    const auto g = t.grad_of(self).data();
    const auto y = t.value_of(self).data();
    accumulate(t, a, [&](Tensor& ga) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    });
  });
}

Var relu(Var a) {
  Tensor out(a.value().shape(), a.value().storage());
  for (double& v : out.storage()) v = v > 0.0 ? v : 0.0;
  return a.tape().record(std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
    const auto g = t.grad_of(self).data();
    const auto x = a.value().data();
    accumulate(t, a, [&](Tensor& ga) {
      for (std::size_t i = 0; i < g.size(); ++i)
        if (x[i] > 0.0) ga[i] += g[i];
    });
  });
}

Var row_softmax(Var x) {
  Tensor out(x.value().shape(), x.value().storage());
  kernels::softmax_rows_inplace(out);
  return x.tape().record(std::move(out), {x}, [x](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad_of(self);
    const Tensor& y = t.value_of(self);
    const std::size_t r = y.rows(), c = y.cols();
    accumulate(t, x, [&](Tensor& gx) {
      for (std::size_t i = 0; i < r; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += g.at(i, j) * y.at(i, j);
        for (std::size_t j = 0; j < c; ++j) gx.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
      }
    });
  });
}

namespace {

// Log-softmax along rows (by_rows) or columns, from max-shifted exponentials.
Var log_softmax_impl(Var x, bool by_rows) {
  const Tensor& X = x.value();
  const std::size_t r = X.rows(), c = X.cols();
  const std::size_t groups = by_rows ? r : c;
  const std::size_t len = by_rows ? c : r;
  auto idx = [=](std::size_t g, std::size_t k) { return by_rows ? g * c + k : k * c + g; };
  Tensor out(X.shape());
  for (std::size_t g = 0; g < groups; ++g) {
    double mx = X[idx(g, 0)];
    for (std::size_t k = 1; k < len; ++k) mx = std::max(mx, X[idx(g, k)]);
    double total = 0.0;
    for (std::size_t k = 0; k < len; ++k) total += std::exp(X[idx(g, k)] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t k = 0; k < len; ++k) out[idx(g, k)] = X[idx(g, k)] - lse;
  }
  return x.tape().record(std::move(out), {x}, [=](Tape& t, std::uint32_t self) {
    const Tensor& gr = t.grad_of(self);
    const Tensor& y = t.value_of(self);
    accumulate(t, x, [&](Tensor& gx) {
      for (std::size_t g = 0; g < groups; ++g) {
        double gsum = 0.0;
        for (std::size_t k = 0; k < len; ++k) gsum += gr[idx(g, k)];
        for (std::size_t k = 0; k < len; ++k)
          gx[idx(g, k)] += gr[idx(g, k)] - std::exp(y[idx(g, k)]) * gsum;
      }
    });
  });
}

}  // namespace

Var row_log_softmax(Var x) { return log_softmax_impl(x, true); }
Var col_log_softmax(Var x) { return log_softmax_impl(x, false); }

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& X = x.value();
  const std::size_t r = X.rows(), c = X.cols();
  if (gain.value().size() != c || bias.value().size() != c) {
    throw DimensionError("layer_norm: gain/bias width does not match " + shape_string(X.shape()));
  }
  auto xhat = std::make_shared<Tensor>(X.shape());
  auto rstd = std::make_shared<std::vector<double>>(r);
  Tensor out(X.shape());
  const auto G = gain.value().data();
  const auto B = bias.value().data();
  for (std::size_t i = 0; i < r; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += X.at(i, j);
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (X.at(i, j) - mu) * (X.at(i, j) - mu);
    var /= static_cast<double>(c);
    const double rs = 1.0 / std::sqrt(var + eps);
    (*rstd)[i] = rs;
    for (std::size_t j = 0; j < c; ++j) {
      const double h = (X.at(i, j) - mu) * rs;
      xhat->at(i, j) = h;
      out.at(i, j) = h * G[j] + B[j];
    }
  }
  return x.tape().record(
      std::move(out), {x, gain, bias}, [=](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad_of(self);
        const auto Gv = gain.value().data();
        accumulate(t, gain, [&](Tensor& gg) {
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) gg[j] += g.at(i, j) * xhat->at(i, j);
        });
        accumulate(t, bias, [&](Tensor& gb) {
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) gb[j] += g.at(i, j);
        });
        accumulate(t, x, [&](Tensor& gx) {
          const double inv_c = 1.0 / static_cast<double>(c);
          for (std::size_t i = 0; i < r; ++i) {
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
              const double dh = g.at(i, j) * Gv[j];
              m1 += dh;
              m2 += dh * xhat->at(i, j);
            }
            m1 *= inv_c;
            m2 *= inv_c;
            for (std::size_t j = 0; j < c; ++j) {
              const double dh = g.at(i, j) * Gv[j];
              gx.at(i, j) += (*rstd)[i] * (dh - m1 - xhat->at(i, j) * m2);
            }
          }
        });
      });
}

Var dropout(Var x, double p, bool training, Rng& rng) {
  if (!training || p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout probability must be below 1");
  const Tensor& X = x.value();
  const double keep_scale = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(X.size());
  Tensor out(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) {
    (*mask)[i] = rng.bernoulli(p) ? 0.0 : keep_scale;
    out[i] = X[i] * (*mask)[i];
  }
  return x.tape().record(std::move(out), {x}, [x, mask](Tape& t, std::uint32_t self) {
    const auto g = t.grad_of(self).data();
    accumulate(t, x, [&](Tensor& gx) {
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*mask)[i];
    });
  });
}

Var slice_cols(Var x, std::size_t begin, std::size_t count) {
  const Tensor& X = x.value();
  const std::size_t r = X.rows(), c = X.cols();
  if (begin + count > c) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") exceeds " + shape_string(X.shape()));
  }
  Tensor out({r, count});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < count; ++j) out.at(i, j) = X.at(i, begin + j);
  return x.tape().record(std::move(out), {x}, [=](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad_of(self);
    accumulate(t, x, [&](Tensor& gx) {
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < count; ++j) gx.at(i, begin + j) += g.at(i, j);
    });
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  const std::size_t r = parts[0].rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.rows() != r) throw DimensionError("concat_cols: row counts differ");
    total += p.cols();
  }
  Tensor out({r, total});
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& P = p.value();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < P.cols(); ++j) out.at(i, off + j) = P.at(i, j);
    off += P.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape().record(std::move(out), parts, [inputs, r](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad_of(self);
    std::size_t offset = 0;
    for (const Var& p : inputs) {
      const std::size_t pc = p.cols();
      accumulate(t, p, [&](Tensor& gp) {
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < pc; ++j) gp.at(i, j) += g.at(i, offset + j);
      });
      offset += pc;
    }
  });
}

Var embedding_bag_mean(Var table, const std::vector<std::vector<std::int32_t>>& tokens) {
  const Tensor& T = table.value();
  const std::size_t vocab = T.rows(), d = T.cols();
  Tensor out({tokens.size(), d});
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const auto& bag = tokens[k];
    if (bag.empty()) throw InputError("empty sentence at index " + std::to_string(k));
    for (std::int32_t tok : bag) {
      if (tok < 0 || static_cast<std::size_t>(tok) >= vocab) {
        throw InputError("token id " + std::to_string(tok) + " outside vocabulary of size " +
                         std::to_string(vocab));
      }
      for (std::size_t j = 0; j < d; ++j) out.at(k, j) += T.at(static_cast<std::size_t>(tok), j);
    }
    const double inv = 1.0 / static_cast<double>(bag.size());
    for (std::size_t j = 0; j < d; ++j) out.at(k, j) *= inv;
  }
  return table.tape().record(std::move(out), {table}, [table, tokens, d](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad_of(self);
    accumulate(t, table, [&](Tensor& gt) {
      for (std::size_t k = 0; k < tokens.size(); ++k) {
        const double inv = 1.0 / static_cast<double>(tokens[k].size());
        for (std::int32_t tok : tokens[k])
          for (std::size_t j = 0; j < d; ++j)
            gt.at(static_cast<std::size_t>(tok), j) += inv * g.at(k, j);
      }
    });
  });
}

Var additive_scores(Var a, Var b, Var u) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const Tensor& U = u.value();
  const std::size_t n = A.rows(), m = B.rows(), k = A.cols();
  if (B.cols() != k || U.size() != k) {
    throw DimensionError("additive_scores: widths differ among " + shape_string(A.shape()) + ", " +
                         shape_string(B.shape()) + ", " + shape_string(U.shape()));
  }
  auto th = std::make_shared<std::vector<double>>(n * m * k);
  Tensor out({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double* cell = th->data() + (i * m + j) * k;
      double acc = 0.0;
      for (std::size_t q = 0; q < k; ++q) {
        cell[q] = std::tanh(A.at(i, q) + B.at(j, q));
        acc += U[q] * cell[q];
      }
      out.at(i, j) = acc;
    }
  }
  return a.tape().record(std::move(out), {a, b, u}, [=](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad_of(self);
    const auto Uv = u.value().data();
    const bool need_a = t.needs_grad(a), need_b = t.needs_grad(b), need_u = t.needs_grad(u);
    Tensor* ga = need_a ? &t.grad_buffer(a.id()) : nullptr;
    Tensor* gb = need_b ? &t.grad_buffer(b.id()) : nullptr;
    Tensor* gu = need_u ? &t.grad_buffer(u.id()) : nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double gij = g.at(i, j);
        const double* cell = th->data() + (i * m + j) * k;
        for (std::size_t q = 0; q < k; ++q) {
          if (gu) (*gu)[q] += gij * cell[q];
          const double ds = gij * Uv[q] * (1.0 - cell[q] * cell[q]);
          if (ga) ga->at(i, q) += ds;
          if (gb) gb->at(j, q) += ds;
        }
      }
    }
  });
}

Var pick_per_row(Var x, std::span<const std::size_t> index) {
  const Tensor& X = x.value();
  const std::size_t r = X.rows(), c = X.cols();
  if (index.size() != r) {
    throw DimensionError("pick_per_row: " + std::to_string(index.size()) + " indices for " +
                         std::to_string(r) + " rows");
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  Tensor out({r, 1});
  for (std::size_t i = 0; i < r; ++i) {
    if (idx[i] >= c) throw DimensionError("pick_per_row: column index out of range");
    out[i] = X.at(i, idx[i]);
  }
  return x.tape().record(std::move(out), {x}, [x, idx](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad_of(self);
    accumulate(t, x, [&](Tensor& gx) {
      for (std::size_t i = 0; i < idx.size(); ++i) gx.at(i, idx[i]) += g[i];
    });
  });
}

}  // namespace naon
