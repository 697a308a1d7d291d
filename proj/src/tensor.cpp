#include "naon/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "naon/error.hpp"

namespace naon {

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw DimensionError("tensor shape " + shape_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::rows() const noexcept {
  if (shape_.empty()) return 1;
  if (shape_.size() == 1) return 1;
  return shape_[0];
}

std::size_t Tensor::cols() const noexcept {
  if (shape_.empty()) return 1;
  if (shape_.size() == 1) return shape_[0];
  return data_.size() / shape_[0];
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ContractError("item() on non-scalar tensor " + shape_string(shape_));
  }
  return data_[0];
}

std::span<double> Tensor::grad() {
  if (grad_.empty()) throw ContractError("tensor has no gradient");
  return grad_;
}

std::span<const double> Tensor::grad() const {
  if (grad_.empty()) throw ContractError("tensor has no gradient");
  return grad_;
}

std::span<double> Tensor::ensure_grad() {
  if (grad_.size() != data_.size()) grad_.assign(data_.size(), 0.0);
  return grad_;
}

void Tensor::zero_grad() {
  if (!grad_.empty()) std::fill(grad_.begin(), grad_.end(), 0.0);
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace kernels {

void gemm(const Tensor& a, bool trans_a, const Tensor& b, bool trans_b, Tensor& out,
          bool accumulate) {
  const std::size_t m = trans_a ? a.cols() : a.rows();
  const std::size_t k = trans_a ? a.rows() : a.cols();
  const std::size_t kb = trans_b ? b.cols() : b.rows();
  const std::size_t n = trans_b ? b.rows() : b.cols();
  if (k != kb || out.rows() != m || out.cols() != n) {
    throw DimensionError("gemm shape mismatch: " + shape_string(a.shape()) + " and " +
                         shape_string(b.shape()));
  }
  auto o = out.data();
  if (!accumulate) std::fill(o.begin(), o.end(), 0.0);
  const auto A = a.data();
  const auto B = b.data();
  const std::size_t lda = a.cols();
  const std::size_t ldb = b.cols();

  if (!trans_b) {
    // i-p-j order streams rows of B and out.
    for (std::size_t i = 0; i < m; ++i) {
      double* orow = o.data() + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = trans_a ? A[p * lda + i] : A[i * lda + p];
        if (av == 0.0) continue;
        const double* brow = B.data() + p * ldb;
        for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      double* orow = o.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double* brow = B.data() + j * ldb;
        double acc = 0.0;
        if (!trans_a) {
          const double* arow = A.data() + i * lda;
          for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        } else {
          for (std::size_t p = 0; p < k; ++p) acc += A[p * lda + i] * brow[p];
        }
        orow[j] += acc;
      }
    }
  }
}

void softmax_rows_inplace(Tensor& x) {
  const std::size_t r = x.rows();
  const std::size_t c = x.cols();
  auto d = x.data();
  for (std::size_t i = 0; i < r; ++i) {
    double* row = d.data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    for (std::size_t j = 0; j < c; ++j) row[j] /= total;
  }
}

}  // namespace kernels

}  // namespace naon
