#pragma once

#include <complex>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hr {

using cplx = std::complex<double>;
using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

/// Dense row-major nd-array (last axis fastest).
template <typename T>
class NdArray {
 public:
  NdArray() = default;
  explicit NdArray(Shape shape, T fill = T{}) : shape_(std::move(shape)) {
    for (int64_t d : shape_) {
      if (d <= 0) throw std::invalid_argument("NdArray: non-positive axis in " + shape_str(shape_));
    }
    data_.assign(static_cast<size_t>(shape_numel(shape_)), fill);
  }
  NdArray(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<int64_t>(data_.size()) != shape_numel(shape_))
      throw std::invalid_argument("NdArray: data length does not match shape " + shape_str(shape_));
  }

  static NdArray zeros(Shape shape) { return NdArray(std::move(shape)); }
  static NdArray full(Shape shape, T v) { return NdArray(std::move(shape), v); }
  static NdArray scalar(T v) { return NdArray(Shape{1}, v); }

  const Shape& shape() const { return shape_; }
  int64_t dim(size_t i) const { return shape_.at(i); }
  size_t ndim() const { return shape_.size(); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  T& at(int64_t i0, int64_t i1) { return data_[static_cast<size_t>(i0 * shape_[1] + i1)]; }
  const T& at(int64_t i0, int64_t i1) const { return data_[static_cast<size_t>(i0 * shape_[1] + i1)]; }
  T& at(int64_t i0, int64_t i1, int64_t i2) {
    return data_[static_cast<size_t>((i0 * shape_[1] + i1) * shape_[2] + i2)];
  }
  const T& at(int64_t i0, int64_t i1, int64_t i2) const {
    return data_[static_cast<size_t>((i0 * shape_[1] + i1) * shape_[2] + i2)];
  }
  T& at(int64_t i0, int64_t i1, int64_t i2, int64_t i3) {
    return data_[static_cast<size_t>(((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3)];
  }
  const T& at(int64_t i0, int64_t i1, int64_t i2, int64_t i3) const {
    return data_[static_cast<size_t>(((i0 * shape_[1] + i1) * shape_[2] + i2) * shape_[3] + i3)];
  }

  NdArray reshaped(Shape s) const {
    if (shape_numel(s) != numel())
      throw std::invalid_argument("reshape: numel mismatch " + shape_str(shape_) + " -> " + shape_str(s));
    NdArray out;
    out.shape_ = std::move(s);
    out.data_ = data_;
    return out;
  }

  bool same_shape(const NdArray& o) const { return shape_ == o.shape_; }

 private:
  Shape shape_;
  std::vector<T> data_;
};

using RArray = NdArray<double>;
using CArray = NdArray<cplx>;
using Tensor = RArray;

inline void check_same_shape(const char* op, const Shape& a, const Shape& b) {
  if (a != b)
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

inline double norm2(const RArray& a) {
  double s = 0;
  for (double v : a.vec()) s += v * v;
  return std::sqrt(s);
}

inline double norm2(const CArray& a) {
  double s = 0;
  for (const cplx& v : a.vec()) s += std::norm(v);
  return std::sqrt(s);
}

/// Complex dot product <a, b> = sum conj(a)*b.
inline cplx cdot(const CArray& a, const CArray& b) {
  check_same_shape("cdot", a.shape(), b.shape());
  cplx s = 0;
  for (int64_t i = 0; i < a.numel(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

/// Pack a complex array [C, ...spatial] into a real tensor [2C, ...spatial]
/// (real/imag as adjacent channels).
inline Tensor complex_to_channels(const CArray& x) {
  if (x.ndim() < 1) throw std::invalid_argument("complex_to_channels: rank-0 input");
  Shape s = x.shape();
  int64_t lead = s[0];
  int64_t inner = x.numel() / lead;
  s[0] = 2 * lead;
  Tensor out(s);
  for (int64_t c = 0; c < lead; ++c)
    for (int64_t i = 0; i < inner; ++i) {
      const cplx& v = x[c * inner + i];
      out[(2 * c) * inner + i] = v.real();
      out[(2 * c + 1) * inner + i] = v.imag();
    }
  return out;
}

inline CArray channels_to_complex(const Tensor& x) {
  if (x.ndim() < 1 || x.shape()[0] % 2 != 0)
    throw std::invalid_argument("channels_to_complex: leading axis must be even, got " + shape_str(x.shape()));
  Shape s = x.shape();
  int64_t lead = s[0] / 2;
  int64_t inner = x.numel() / s[0];
  s[0] = lead;
  CArray out(s);
  for (int64_t c = 0; c < lead; ++c)
    for (int64_t i = 0; i < inner; ++i)
      out[c * inner + i] = cplx(x[(2 * c) * inner + i], x[(2 * c + 1) * inner + i]);
  return out;
}

}  // namespace hr
