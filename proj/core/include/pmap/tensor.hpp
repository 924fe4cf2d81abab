#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace pmap {

// Dense row-major n-dimensional array of doubles. 64-bit is the reference
// precision for every computation in the library; 32-bit floats appear only
// in serialized datasets and checkpoints.
//
// Values are immutable in spirit: operations return new tensors and never
// mutate their inputs, so tensors can be shared across threads freely.
class Tensor {
 public:
  Tensor() = default;

  // Zero-filled tensor of the given shape. Extents must be positive.
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor row(std::initializer_list<double> v);
  // 2-d tensor from nested lists; every row must have equal length.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t extent(std::size_t axis) const;

  // 2-d accessors; throw DimensionError when rank != 2.
  std::size_t rows() const;
  std::size_t cols() const;
  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_str() const;

  // Reinterpret as a new shape with identical element count.
  Tensor reshaped(std::vector<std::size_t> shape) const;

  bool all_finite() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Throws NumericError naming `op` if any element of `t` is NaN/Inf.
void require_finite(const Tensor& t, const char* op);
// Throws DimensionError with both shapes when they differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

// ---- Elementwise / structural ----------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
void add_inplace(Tensor& dst, const Tensor& src);     // dst += src
void axpy_inplace(Tensor& dst, double alpha, const Tensor& src);  // dst += alpha*src
Tensor transpose(const Tensor& a);                    // 2-d only

// ---- Matrix products --------------------------------------------------------
//
// All products accumulate over the contraction index in a fixed left-to-right
// order, so repeat calls are bit-identical and independent of optimization
// level.

Tensor matmul(const Tensor& a, const Tensor& b);      // [m×k]·[k×n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);   // a·bᵀ, b is [n×k]
Tensor matmul_tn(const Tensor& a, const Tensor& b);   // aᵀ·b, a is [k×m]
// dst += a·b and dst += aᵀ·b, used on gradient accumulators.
void matmul_acc(Tensor& dst, const Tensor& a, const Tensor& b);
void matmul_tn_acc(Tensor& dst, const Tensor& a, const Tensor& b);

// ---- Neural primitives ------------------------------------------------------

// Row-wise softmax with per-row max subtraction. Rows sum to 1 within 1e-12.
Tensor softmax_rows(const Tensor& x);
// Backward of softmax_rows given its output `y` and upstream `dy`.
Tensor softmax_rows_backward(const Tensor& y, const Tensor& dy);

// Row-wise layer normalization: each row is standardized (population
// variance, stabilized by eps) and then scaled by `gain` and shifted by
// `bias`, both of width cols(x).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps);

// Gaussian error linear unit, tanh approximation:
//   gelu(x) = 0.5·x·(1 + tanh(sqrt(2/pi)·(x + 0.044715·x³)))
// with sqrt(2/pi) = 0.7978845608028654.
Tensor gelu(const Tensor& x);
// Derivative of the same approximation, evaluated elementwise at x.
Tensor gelu_grad(const Tensor& x);

// Interleaved sine/cosine positional table, shape [count×width]:
//   row p = [sin(p·w0), cos(p·w0), sin(p·w1), cos(p·w1), ...]
// with w_k = 10000^(-2k/width). Row 0 is [0,1,0,1,...]. Width must be even.
Tensor sinusoidal_positions(std::size_t count, std::size_t width);

// Mean over rows -> [1×n] for a [m×n] input.
Tensor mean_rows(const Tensor& x);

}  // namespace pmap
