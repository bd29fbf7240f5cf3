#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

namespace ftnas {

// Dense row-major tensor of doubles. Copies share storage; the convention
// throughout is that a tensor is filled once (via mutable_data) and treated
// as immutable after it has been handed to anyone else. Parameter tensors
// are the exception: they have a single-writer contract during training.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64_t> shape);
  Tensor(std::vector<int64_t> shape, std::vector<double> data);

  static Tensor full(std::vector<int64_t> shape, double value);
  static Tensor zeros_like(const Tensor& other);
  static Tensor scalar(double value);

  const std::vector<int64_t>& shape() const { return shape_; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  int64_t size() const { return size_; }
  bool defined() const { return data_ != nullptr; }

  const double* data() const { return data_->data(); }
  double* mutable_data() { return data_->data(); }
  std::span<const double> span() const { return {data_->data(), static_cast<size_t>(size_)}; }

  double operator[](int64_t i) const { return (*data_)[static_cast<size_t>(i)]; }
  double at(std::initializer_list<int64_t> idx) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool shares_storage(const Tensor& other) const { return data_ == other.data_; }
  Tensor clone() const;
  Tensor reshaped(std::vector<int64_t> shape) const;

  double max_abs() const;
  double min() const;
  double max() const;
  double sum() const;
  bool all_finite() const;

 private:
  std::vector<int64_t> shape_;
  std::shared_ptr<std::vector<double>> data_;
  int64_t size_ = 0;
};

int64_t shape_size(const std::vector<int64_t>& shape);
std::string shape_str(const std::vector<int64_t>& shape);

}  // namespace ftnas
