#ifndef MICROPOST_ARRAY2D_HPP
#define MICROPOST_ARRAY2D_HPP

#include <complex>
#include <cstddef>
#include <vector>

namespace micropost {

// Dense row-major (n0, n1) array.  Index 0 is radial, index 1 axial, so the
// axial sweep is the contiguous inner loop.
template <typename T>
class Array2D {
 public:
  Array2D() = default;
  Array2D(int n0, int n1, T fill = T{})
      : n0_(n0), n1_(n1), data_(static_cast<std::size_t>(n0) * n1, fill) {}

  int n0() const { return n0_; }
  int n1() const { return n1_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * n1_ + j]; }
  const T& operator()(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * n1_ + j];
  }

  T* row(int i) { return data_.data() + static_cast<std::size_t>(i) * n1_; }
  const T* row(int i) const { return data_.data() + static_cast<std::size_t>(i) * n1_; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  void fill(T v) { data_.assign(data_.size(), v); }

  bool operator==(const Array2D&) const = default;

 private:
  int n0_ = 0;
  int n1_ = 0;
  std::vector<T> data_;
};

using cdouble = std::complex<double>;

// i*z without touching the std::complex multiplication path.
inline cdouble mul_i(cdouble z) { return {-z.imag(), z.real()}; }

}  // namespace micropost

#endif
