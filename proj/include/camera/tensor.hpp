#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace camera {

struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InputError : std::runtime_error {
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dense row-major double tensor. The universal value carrier for features,
// parameters, and gradients.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(checkedSize(shape_), fill) {}

  static Tensor scalar(double v) {
    Tensor t({1});
    t.data_[0] = v;
    return t;
  }

  static Tensor fromData(std::vector<int> shape, std::vector<double> data) {
    Tensor t;
    t.shape_ = std::move(shape);
    if (checkedSize(t.shape_) != data.size())
      throw DimensionError("tensor data length does not match shape");
    t.data_ = std::move(data);
    return t;
  }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
  size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  // rank-3 [h×w×c] access
  double& at(int y, int x, int ch) {
    return data_[(static_cast<size_t>(y) * shape_[1] + x) * shape_[2] + ch];
  }
  double at(int y, int x, int ch) const {
    return data_[(static_cast<size_t>(y) * shape_[1] + x) * shape_[2] + ch];
  }
  // rank-2 [rows×cols] access
  double& at(int r, int c) {
    return data_[static_cast<size_t>(r) * shape_[1] + c];
  }
  double at(int r, int c) const {
    return data_[static_cast<size_t>(r) * shape_[1] + c];
  }

  void fill(double v) {
    for (auto& x : data_) x = v;
  }

  bool sameShape(const Tensor& o) const { return shape_ == o.shape_; }

  void reshape(std::vector<int> shape) {
    if (checkedSize(shape) != data_.size())
      throw DimensionError("reshape must preserve element count");
    shape_ = std::move(shape);
  }

  bool allFinite() const;

  bool operator==(const Tensor& o) const {
    return shape_ == o.shape_ && data_ == o.data_;
  }

 private:
  static size_t checkedSize(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
      if (d <= 0) throw DimensionError("tensor extents must be positive");
      n *= static_cast<size_t>(d);
    }
    return shape.empty() ? 0 : n;
  }

  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace camera
