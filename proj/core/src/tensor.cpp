#include "pmap/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "pmap/errors.hpp"

namespace pmap {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  for (std::size_t e : shape_) {
    if (e == 0) throw DimensionError("tensor extent must be positive");
  }
  data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (std::size_t e : shape_) {
    if (e == 0) throw DimensionError("tensor extent must be positive");
  }
  if (shape_product(shape_) != data_.size()) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str());
  }
}

Tensor Tensor::row(std::initializer_list<double> v) {
  return Tensor({1, v.size()}, std::vector<double>(v));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  std::size_t c = rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged matrix initializer");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::extent(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError("axis " + std::to_string(axis) +
                         " out of range for shape " + shape_str());
  }
  return shape_[axis];
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("rows(): tensor is not 2-d, shape " + shape_str());
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("cols(): tensor is not 2-d, shape " + shape_str());
  return shape_[1];
}

double& Tensor::at(std::size_t r, std::size_t c) {
  return data_[r * cols() + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return data_[r * cols() + c];
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << "x";
    os << shape_[i];
  }
  os << "]";
  return os.str();
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  if (shape_product(shape) != data_.size()) {
    Tensor probe;
    probe.shape_ = std::move(shape);
    throw DimensionError("reshape from " + shape_str() + " to " +
                         probe.shape_str() + " changes element count");
  }
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = data_;
  return out;
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) {
    throw NumericError(std::string(op) + ": non-finite value in tensor " +
                       t.shape_str());
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() +
                         " vs " + b.shape_str());
  }
}

// ---- Elementwise / structural ----------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  require_finite(out, "add");
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  require_finite(out, "sub");
  return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  require_finite(out, "hadamard");
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  require_finite(out, "scale");
  return out;
}

void add_inplace(Tensor& dst, const Tensor& src) {
  require_same_shape(dst, src, "add_inplace");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void axpy_inplace(Tensor& dst, double alpha, const Tensor& src) {
  require_same_shape(dst, src, "axpy_inplace");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += alpha * src[i];
}

Tensor transpose(const Tensor& a) {
  std::size_t m = a.rows(), n = a.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a[i * n + j];
  return out;
}

// ---- Matrix products --------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  std::size_t m = a.rows(), k = a.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner extents differ, " + a.shape_str() +
                         " x " + b.shape_str());
  }
  std::size_t n = b.cols();
  Tensor out({m, n});
  matmul_acc(out, a, b);
  require_finite(out, "matmul");
  return out;
}

void matmul_acc(Tensor& dst, const Tensor& a, const Tensor& b) {
  std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k || dst.rows() != m || dst.cols() != n) {
    throw DimensionError("matmul_acc: shape mismatch " + a.shape_str() + " x " +
                         b.shape_str() + " -> " + dst.shape_str());
  }
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = dst.data();
  // i-k-j order: for each output element the k-contributions arrive strictly
  // left to right, and the inner j loop vectorizes without reassociation.
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    double* crow = pc + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      double av = arow[kk];
      const double* brow = pb + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  std::size_t m = a.rows(), k = a.cols();
  if (b.cols() != k) {
    throw DimensionError("matmul_nt: inner extents differ, " + a.shape_str() +
                         " x " + b.shape_str() + "ᵀ");
  }
  std::size_t n = b.rows();
  Tensor out({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = pb + j * k;
      double acc = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      pc[i * n + j] = acc;
    }
  }
  require_finite(out, "matmul_nt");
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  std::size_t k = a.rows(), m = a.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul_tn: inner extents differ, " + a.shape_str() +
                         "ᵀ x " + b.shape_str());
  }
  std::size_t n = b.cols();
  Tensor out({m, n});
  matmul_tn_acc(out, a, b);
  require_finite(out, "matmul_tn");
  return out;
}

void matmul_tn_acc(Tensor& dst, const Tensor& a, const Tensor& b) {
  std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  if (b.rows() != k || dst.rows() != m || dst.cols() != n) {
    throw DimensionError("matmul_tn_acc: shape mismatch " + a.shape_str() +
                         "ᵀ x " + b.shape_str() + " -> " + dst.shape_str());
  }
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = dst.data();
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double* arow = pa + kk * m;
    const double* brow = pb + kk * n;
    for (std::size_t i = 0; i < m; ++i) {
      double av = arow[i];
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// ---- Neural primitives ------------------------------------------------------

Tensor softmax_rows(const Tensor& x) {
  require_finite(x, "softmax_rows");
  std::size_t m = x.rows(), n = x.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.data() + i * n;
    double* orow = out.data() + i * n;
    double mx = row[0];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      orow[j] = std::exp(row[j] - mx);
      sum += orow[j];
    }
    double inv = 1.0 / sum;
    for (std::size_t j = 0; j < n; ++j) orow[j] *= inv;
  }
  return out;
}

Tensor softmax_rows_backward(const Tensor& y, const Tensor& dy) {
  require_same_shape(y, dy, "softmax_rows_backward");
  std::size_t m = y.rows(), n = y.cols();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* yr = y.data() + i * n;
    const double* dr = dy.data() + i * n;
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += yr[j] * dr[j];
    double* orow = out.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) orow[j] = yr[j] * (dr[j] - dot);
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
  if (eps <= 0) throw NumericError("layer_norm: eps must be positive");
  std::size_t m = x.rows(), n = x.cols();
  if (gain.size() != n || bias.size() != n) {
    throw DimensionError("layer_norm: gain/bias width mismatch vs " + x.shape_str());
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.data() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double d = row[j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    double inv = 1.0 / std::sqrt(var + eps);
    double* orow = out.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      orow[j] = (row[j] - mean) * inv * gain[j] + bias[j];
    }
  }
  require_finite(out, "layer_norm");
  return out;
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Tensor gelu(const Tensor& x) {
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = out[i];
    out[i] = 0.5 * v * (1.0 + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
  }
  require_finite(out, "gelu");
  return out;
}

Tensor gelu_grad(const Tensor& x) {
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = out[i];
    double u = kGeluC * (v + kGeluA * v * v * v);
    double t = std::tanh(u);
    double sech2 = 1.0 - t * t;
    out[i] = 0.5 * (1.0 + t) +
             0.5 * v * sech2 * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
  }
  return out;
}

Tensor sinusoidal_positions(std::size_t count, std::size_t width) {
  if (width % 2 != 0) {
    throw DimensionError("sinusoidal_positions: width must be even, got " +
                         std::to_string(width));
  }
  Tensor out({count, width});
  for (std::size_t p = 0; p < count; ++p) {
    double* row = out.data() + p * width;
    for (std::size_t k = 0; 2 * k < width; ++k) {
      double freq = std::pow(10000.0, -2.0 * static_cast<double>(k) /
                                          static_cast<double>(width));
      double arg = static_cast<double>(p) * freq;
      row[2 * k] = std::sin(arg);
      row[2 * k + 1] = std::cos(arg);
    }
  }
  return out;
}

Tensor mean_rows(const Tensor& x) {
  std::size_t m = x.rows(), n = x.cols();
  Tensor out({1, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) out[j] += row[j];
  }
  double inv = 1.0 / static_cast<double>(m);
  for (std::size_t j = 0; j < n; ++j) out[j] *= inv;
  return out;
}

}  // namespace pmap
