#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "cac/error.hpp"

namespace cac {

/// Dense row-major 2-D array.
template <typename T>
class BasicMatrix {
 public:
  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("matrix data length does not equal rows*cols");
    }
  }
  BasicMatrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("ragged matrix initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using IndexMatrix = BasicMatrix<std::size_t>;

/// a * b.
Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// Adds `bias` to every row in place.
void add_row_vector(Matrix& m, std::span<const double> bias);
/// Column sums of m.
std::vector<double> column_sums(const Matrix& m);

double dot(std::span<const double> a, std::span<const double> b);

bool all_finite(std::span<const double> values);

/// Throws NumericError naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

/// Row-wise softmax with max-subtraction.
Matrix softmax(const Matrix& logits);

/// Given softmax output `probs` and dL/dprobs, returns dL/dlogits.
Matrix softmax_backward(const Matrix& probs, const Matrix& grad_probs);

/// Scales each row to unit Euclidean norm. Rows with norm <= 1e-12 are rejected.
Matrix l2_normalize_rows(const Matrix& m);

/// Gathers rows `indices` of m into a new matrix.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices);

}  // namespace cac
