#include "dddm/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "dddm/errors.hpp"

namespace dddm {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols)
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows) + "x" + std::to_string(cols));
}

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(1, n, std::move(values));
}

Tensor Tensor::col(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(n, 1, std::move(values));
}

Tensor Tensor::scalar(double v) { return Tensor(1, 1, v); }

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> d;
  d.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged initializer");
    d.insert(d.end(), row.begin(), row.end());
  }
  return Tensor(r, c, std::move(d));
}

std::vector<double> Tensor::row_vec(std::size_t r) const {
  return std::vector<double>(row_ptr(r), row_ptr(r) + cols_);
}

void Tensor::set_row(std::size_t r, const std::vector<double>& v) {
  if (v.size() != cols_) throw ShapeError("set_row: length mismatch");
  std::copy(v.begin(), v.end(), row_ptr(r));
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::require_finite(const std::string& where) const {
  if (!all_finite()) throw NumericError("non-finite value in " + where);
}

std::string Tensor::shape_str() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

}  // namespace dddm
