#include "bibleqa/tensor.hpp"

#include <sstream>

#include "bibleqa/errors.hpp"

namespace bqa {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), values_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_numel(shape_) != values_.size()) {
    throw ShapeError("shape " + shape_str(shape_) + " does not hold " +
                     std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::filled(Shape shape, double v) {
  Tensor t(std::move(shape));
  for (auto& x : t.values_) x = v;
  return t;
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor(Shape{values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> v;
  v.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    v.insert(v.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(v));
}

double Tensor::item() const {
  if (values_.size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape_));
  return values_[0];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != values_.size()) {
    throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  return Tensor(std::move(shape), values_);
}

Tensor Tensor::rows(std::size_t begin, std::size_t end) const {
  if (rank() != 2 || begin > end || end > shape_[0]) {
    throw ShapeError("rows(" + std::to_string(begin) + "," + std::to_string(end) + ") of " +
                     shape_str(shape_));
  }
  const std::size_t c = shape_[1];
  return Tensor(Shape{end - begin, c},
                std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(begin * c),
                                    values_.begin() + static_cast<std::ptrdiff_t>(end * c)));
}

}  // namespace bqa
