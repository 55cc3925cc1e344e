#pragma once
// Dense row-major matrices plus the small set of numeric kernels the
// encoder needs. Mat<float> is the shipped value type; every kernel is
// templated on the scalar so gradient checks can run the identical code
// in double precision.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace eat {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

template <class T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;  // row-major, data.size() == rows * cols

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c) {
    if (r < 0 || c < 0) throw DimensionError("Mat: negative shape");
    data.assign(static_cast<size_t>(r) * static_cast<size_t>(c), T(0));
  }

  static Mat filled(int r, int c, T v) {
    Mat m(r, c);
    std::fill(m.data.begin(), m.data.end(), v);
    return m;
  }

  T& operator()(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
  const T& operator()(int r, int c) const {
    return data[static_cast<size_t>(r) * cols + c];
  }

  std::span<T> row(int r) { return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)}; }
  std::span<const T> row(int r) const {
    return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)};
  }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
  size_t size() const { return data.size(); }
};

using Matrix = Mat<float>;

template <class T>
bool is_finite(const Mat<T>& m) {
  for (T v : m.data)
    if (!std::isfinite(v)) return false;
  return true;
}

template <class T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b) {
  if (a.cols != b.rows)
    throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols) +
                         " vs " + std::to_string(b.rows));
  Mat<T> out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    T* orow = out.data.data() + static_cast<size_t>(i) * out.cols;
    for (int k = 0; k < a.cols; ++k) {
      const T aik = a(i, k);
      if (aik == T(0)) continue;
      const T* brow = b.data.data() + static_cast<size_t>(k) * b.cols;
      for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

template <class T>
Mat<T> transpose(const Mat<T>& a) {
  Mat<T> out(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  return out;
}

template <class T>
Mat<T> add(const Mat<T>& a, const Mat<T>& b) {
  if (!a.same_shape(b)) throw DimensionError("add: shape mismatch");
  Mat<T> out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

template <class T>
Mat<T> hadamard(const Mat<T>& a, const Mat<T>& b) {
  if (!a.same_shape(b)) throw DimensionError("hadamard: shape mismatch");
  Mat<T> out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
  return out;
}

template <class T>
Mat<T> scale(const Mat<T>& a, T s) {
  Mat<T> out = a;
  for (T& v : out.data) v *= s;
  return out;
}

// b must be 1 x a.cols; added to every row.
template <class T>
Mat<T> add_row_vector(const Mat<T>& a, const Mat<T>& b) {
  if (b.rows != 1 || b.cols != a.cols)
    throw DimensionError("add_row_vector: expected 1x" + std::to_string(a.cols));
  Mat<T> out = a;
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) out(i, j) += b(0, j);
  return out;
}

// Row-wise softmax, stabilized by subtracting the row max. NaN input is
// rejected; the output rows are nonnegative and sum to 1.
template <class T>
Mat<T> softmax_rows(const Mat<T>& m) {
  Mat<T> out(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i) {
    T mx = m(i, 0);
    for (int j = 0; j < m.cols; ++j) {
      if (std::isnan(m(i, j))) throw std::invalid_argument("softmax_rows: NaN input");
      mx = std::max(mx, m(i, j));
    }
    T sum = T(0);
    for (int j = 0; j < m.cols; ++j) {
      T e = std::exp(m(i, j) - mx);
      out(i, j) = e;
      sum += e;
    }
    for (int j = 0; j < m.cols; ++j) out(i, j) /= sum;
  }
  return out;
}

// Per-row normalization to zero mean / unit variance (population variance,
// eps-guarded), then the affine transform gain * xhat + bias.
template <class T>
Mat<T> layer_norm(const Mat<T>& m, const Mat<T>& gain, const Mat<T>& bias, T eps) {
  if (gain.rows != 1 || gain.cols != m.cols || bias.rows != 1 || bias.cols != m.cols)
    throw DimensionError("layer_norm: gain/bias must be 1 x cols");
  Mat<T> out(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i) {
    T mean = T(0);
    for (int j = 0; j < m.cols; ++j) mean += m(i, j);
    mean /= T(m.cols);
    T var = T(0);
    for (int j = 0; j < m.cols; ++j) {
      T d = m(i, j) - mean;
      var += d * d;
    }
    var /= T(m.cols);
    const T inv = T(1) / std::sqrt(var + eps);
    for (int j = 0; j < m.cols; ++j)
      out(i, j) = gain(0, j) * ((m(i, j) - mean) * inv) + bias(0, j);
  }
  return out;
}

// tanh-approximate GELU.
template <class T>
T gelu_scalar(T x) {
  const T c = T(0.7978845608028654);  // sqrt(2/pi)
  const T a = T(0.044715);
  return T(0.5) * x * (T(1) + std::tanh(c * (x + a * x * x * x)));
}

template <class T>
T gelu_derivative_scalar(T x) {
  const T c = T(0.7978845608028654);
  const T a = T(0.044715);
  const T u = c * (x + a * x * x * x);
  const T t = std::tanh(u);
  const T sech2 = T(1) - t * t;
  return T(0.5) * (T(1) + t) + T(0.5) * x * sech2 * c * (T(1) + T(3) * a * x * x);
}

template <class T>
Mat<T> gelu(const Mat<T>& m) {
  Mat<T> out = m;
  for (T& v : out.data) v = gelu_scalar(v);
  return out;
}

template <class T>
Mat<T> gather_rows(const Mat<T>& m, std::span<const int> idx) {
  Mat<T> out(static_cast<int>(idx.size()), m.cols);
  for (size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= m.rows)
      throw DimensionError("gather_rows: index out of range");
    std::copy_n(m.data.data() + static_cast<size_t>(idx[i]) * m.cols, m.cols,
                out.data.data() + i * m.cols);
  }
  return out;
}

template <class T>
T sum(const Mat<T>& m) {
  T s = T(0);
  for (T v : m.data) s += v;
  return s;
}

template <class T>
double max_abs_diff(const Mat<T>& a, const Mat<T>& b) {
  if (!a.same_shape(b)) throw DimensionError("max_abs_diff: shape mismatch");
  double m = 0;
  for (size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::abs(double(a.data[i]) - double(b.data[i])));
  return m;
}

template <class Src, class Dst>
Mat<Dst> cast_mat(const Mat<Src>& m) {
  Mat<Dst> out(m.rows, m.cols);
  for (size_t i = 0; i < m.data.size(); ++i) out.data[i] = static_cast<Dst>(m.data[i]);
  return out;
}

}  // namespace eat
