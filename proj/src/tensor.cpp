#include "ftnas/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ftnas/check.hpp"

namespace ftnas {

namespace detail {
void check_fail(const char* expr, const std::string& msg, const char* file,
                int line) {
  std::ostringstream os;
  os << file << ":" << line << " check failed (" << expr << "): " << msg;
  throw CheckError(os.str());
}
}  // namespace detail

int64_t shape_size(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    FTNAS_CHECK(d >= 0, "negative extent in shape " << shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<int64_t> shape)
    : shape_(std::move(shape)), size_(shape_size(shape_)) {
  data_ = std::make_shared<std::vector<double>>(static_cast<size_t>(size_), 0.0);
}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), size_(shape_size(shape_)) {
  FTNAS_CHECK(static_cast<int64_t>(data.size()) == size_,
              "data size " << data.size() << " does not match shape "
                           << shape_str(shape_));
  data_ = std::make_shared<std::vector<double>>(std::move(data));
}

Tensor Tensor::full(std::vector<int64_t> shape, double value) {
  Tensor t(std::move(shape));
  std::fill(t.data_->begin(), t.data_->end(), value);
  return t;
}

Tensor Tensor::zeros_like(const Tensor& other) { return Tensor(other.shape_); }

Tensor Tensor::scalar(double value) { return Tensor({}, {value}); }

double Tensor::at(std::initializer_list<int64_t> idx) const {
  FTNAS_CHECK(idx.size() == shape_.size(),
              "index rank " << idx.size() << " vs tensor rank " << shape_.size());
  int64_t off = 0;
  size_t k = 0;
  for (int64_t i : idx) {
    FTNAS_CHECK(i >= 0 && i < shape_[k], "index out of bounds");
    off = off * shape_[k] + i;
    ++k;
  }
  return (*data_)[static_cast<size_t>(off)];
}

Tensor Tensor::clone() const {
  Tensor t;
  t.shape_ = shape_;
  t.size_ = size_;
  t.data_ = std::make_shared<std::vector<double>>(*data_);
  return t;
}

Tensor Tensor::reshaped(std::vector<int64_t> shape) const {
  FTNAS_CHECK(shape_size(shape) == size_,
              "reshape " << shape_str(shape_) << " -> " << shape_str(shape));
  Tensor t;
  t.shape_ = std::move(shape);
  t.size_ = size_;
  t.data_ = data_;
  return t;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : *data_) m = std::max(m, std::fabs(v));
  return m;
}

double Tensor::min() const {
  double m = (*data_)[0];
  for (double v : *data_) m = std::min(m, v);
  return m;
}

double Tensor::max() const {
  double m = (*data_)[0];
  for (double v : *data_) m = std::max(m, v);
  return m;
}

double Tensor::sum() const {
  double s = 0.0;
  for (double v : *data_) s += v;
  return s;
}

bool Tensor::all_finite() const {
  for (double v : *data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace ftnas
