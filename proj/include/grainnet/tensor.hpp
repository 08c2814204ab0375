#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace grainnet {

// Dense row-major n-dimensional array. Value semantics; gradient buffers are
// owned by tape nodes and Params, always shaped identically to their value.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int> shape, T fill = T(0))
      : shape_(std::move(shape)), data_(checked_size(shape_), fill) {}

  static Tensor from(std::vector<int> shape, std::vector<T> data) {
    Tensor t;
    t.shape_ = std::move(shape);
    if (checked_size(t.shape_) != data.size())
      throw std::invalid_argument("tensor data length " + std::to_string(data.size()) +
                                  " does not match shape " + shape_string(t.shape_));
    t.data_ = std::move(data);
    return t;
  }

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::initializer_list<int> idx) { return data_[flat_index(idx)]; }
  const T& at(std::initializer_list<int> idx) const { return data_[flat_index(idx)]; }

  void fill(T v) { data_.assign(data_.size(), v); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  Tensor reshaped(std::vector<int> new_shape) const {
    if (checked_size(new_shape) != data_.size())
      throw std::invalid_argument("reshape from " + shape_string(shape_) + " to " +
                                  shape_string(new_shape) + " changes element count");
    Tensor t;
    t.shape_ = std::move(new_shape);
    t.data_ = data_;
    return t;
  }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  std::string shape_str() const { return shape_string(shape_); }

  static std::string shape_string(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) os << 'x';
      os << shape[i];
    }
    os << ')';
    return os.str();
  }

 private:
  static std::size_t checked_size(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
      if (d < 0) throw std::invalid_argument("negative dimension in shape " + shape_string(shape));
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t flat_index(std::initializer_list<int> idx) const {
    if (idx.size() != shape_.size())
      throw std::invalid_argument("index rank mismatch for shape " + shape_string(shape_));
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (int i : idx) {
      flat = flat * static_cast<std::size_t>(shape_[axis]) + static_cast<std::size_t>(i);
      ++axis;
    }
    return flat;
  }

  std::vector<int> shape_;
  std::vector<T> data_;
};

// Debug-mode finite checks. Off by default (hot path); tests and the
// training loop's divergence guard turn them on where it matters.
bool debug_checks_enabled();
void set_debug_checks(bool on);

template <typename T>
inline void debug_check_finite(const Tensor<T>& t, const char* what) {
  if (!debug_checks_enabled()) return;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(static_cast<double>(t[i])))
      throw std::runtime_error(std::string("non-finite value in ") + what + " at flat index " +
                               std::to_string(i));
  }
}

}  // namespace grainnet
