#include "sublens/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sublens/errors.hpp"

namespace sublens {

template <typename T>
BasicMatrix<T>::BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string());
  }
}

template <typename T>
BasicMatrix<T> BasicMatrix<T>::from_rows(const std::vector<std::vector<T>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  BasicMatrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw ShapeError("ragged rows in matrix literal");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

template <typename T>
BasicMatrix<T> BasicMatrix<T>::identity(std::size_t n) {
  BasicMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
  return m;
}

template <typename T>
std::string BasicMatrix<T>::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

template class BasicMatrix<float>;
template class BasicMatrix<double>;

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul shape mismatch: " + a.shape_string() + " * " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  // i-k-j loop: each out(i, j) still receives its terms in k order.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    const auto arow = a.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const float aik = arow[k];
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix linear(const Matrix& x, const Matrix& w, std::span<const float> bias) {
  if (bias.size() != w.cols()) {
    throw ShapeError("linear bias length " + std::to_string(bias.size()) +
                     " does not match weight " + w.shape_string());
  }
  Matrix out = matmul(x, w);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += bias[j];
  }
  return out;
}

namespace {

void layer_norm_into(std::span<const float> x, std::span<const float> gamma,
                     std::span<const float> beta, float eps, std::span<float> out) {
  const auto n = static_cast<float>(x.size());
  float sum = 0.0f;
  for (float v : x) sum += v;
  const float mean = sum / n;
  float sq = 0.0f;
  for (float v : x) sq += (v - mean) * (v - mean);
  const float inv = 1.0f / std::sqrt(sq / n + eps);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) * inv * gamma[i] + beta[i];
}

void check_layer_norm_shapes(std::size_t n, std::span<const float> gamma,
                             std::span<const float> beta, float eps) {
  if (gamma.size() != n || beta.size() != n) {
    throw ShapeError("layer_norm dims differ: x " + std::to_string(n) + ", gamma " +
                     std::to_string(gamma.size()) + ", beta " + std::to_string(beta.size()));
  }
  if (!(eps > 0.0f)) throw ShapeError("layer_norm eps must be positive");
  if (n == 0) throw ShapeError("layer_norm on empty vector");
}

}  // namespace

Vector layer_norm(std::span<const float> x, std::span<const float> gamma,
                  std::span<const float> beta, float eps) {
  check_layer_norm_shapes(x.size(), gamma, beta, eps);
  Vector out(x.size());
  layer_norm_into(x, gamma, beta, eps, out);
  return out;
}

Matrix layer_norm_rows(const Matrix& x, std::span<const float> gamma,
                       std::span<const float> beta, float eps) {
  check_layer_norm_shapes(x.cols(), gamma, beta, eps);
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) layer_norm_into(x.row(r), gamma, beta, eps, out.row(r));
  return out;
}

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto in = m.row(r);
    auto o = out.row(r);
    if (in.empty()) continue;
    const float mx = *std::max_element(in.begin(), in.end());
    float sum = 0.0f;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (float& v : o) v /= sum;
  }
  return out;
}

float gelu(float x) {
  constexpr float kSqrt2OverPi = 0.7978845608028654f;
  return 0.5f * x * (1.0f + std::tanh(kSqrt2OverPi * (x + 0.044715f * x * x * x)));
}

Vector gelu(std::span<const float> x) {
  Vector out(x.begin(), x.end());
  gelu_inplace(out);
  return out;
}

void gelu_inplace(std::span<float> x) {
  for (float& v : x) v = gelu(v);
}

float cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw ShapeError("cosine dims differ: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  float dot = 0.0f, na = 0.0f, nb = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  // 1e-12 threshold on the norm, i.e. 1e-24 on the squared norm.
  if (!(std::sqrt(static_cast<double>(na)) > 1e-12) || !(std::sqrt(static_cast<double>(nb)) > 1e-12)) {
    throw DegenerateVectorError("cosine of a zero-norm vector");
  }
  // The product of two floats is exact in double, so cosine(v, v) == 1 exactly.
  const double denom = std::sqrt(static_cast<double>(na) * static_cast<double>(nb));
  const auto c = static_cast<float>(static_cast<double>(dot) / denom);
  return std::clamp(c, -1.0f, 1.0f);
}

float squared_l2(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw ShapeError("squared_l2 dims differ: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  float s = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double squared_l2(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("squared_l2 dims differ: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

bool all_finite(std::span<const float> x) noexcept {
  return std::all_of(x.begin(), x.end(), [](float v) { return std::isfinite(v); });
}

Vector mean_rows(const Matrix& m, std::size_t begin, std::size_t end) {
  if (begin >= end || end > m.rows()) {
    throw IndexError("row range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for " + m.shape_string());
  }
  Vector out(m.cols(), 0.0f);
  for (std::size_t r = begin; r < end; ++r) {
    const auto row = m.row(r);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += row[j];
  }
  const auto n = static_cast<float>(end - begin);
  for (float& v : out) v /= n;
  return out;
}

SymmetricEigen jacobi_eigen(const MatrixD& input, double tol, int max_sweeps) {
  const std::size_t n = input.rows();
  if (input.cols() != n) throw ShapeError("jacobi_eigen needs a square matrix, got " + input.shape_string());
  MatrixD a = input;
  MatrixD v = MatrixD::identity(n);

  double total = 0.0;
  for (double x : a.data()) total += x * x;
  const double threshold = tol * std::max(std::sqrt(total), 1e-300);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < max_sweeps && off_norm() > threshold; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  SymmetricEigen out{std::vector<double>(n), MatrixD(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

namespace {

void normalise_sign(std::span<double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (v[best] < 0)
    for (double& x : v) x = -x;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalise(std::span<double> v) {
  const double n = std::sqrt(dot(v, v));
  for (double& x : v) x /= n;
}

// Unit vector orthogonal to `against`, built from the first standard basis
// vector that is not (nearly) parallel to it.
std::vector<double> orthogonal_fallback(std::span<const double> against) {
  const std::size_t d = against.size();
  for (std::size_t e = 0; e < d; ++e) {
    std::vector<double> v(d, 0.0);
    v[e] = 1.0;
    const double proj = dot(v, against);
    for (std::size_t i = 0; i < d; ++i) v[i] -= proj * against[i];
    if (std::sqrt(dot(v, v)) > 1e-6) {
      normalise(v);
      return v;
    }
  }
  return std::vector<double>(d, 0.0);
}

}  // namespace

Pca2 pca_2(const Matrix& m) {
  const std::size_t n = m.rows(), d = m.cols();
  if (n < 3) {
    throw InsufficientSamplesError("pca_2 needs at least 3 rows, got " + std::to_string(n));
  }
  if (d < 2) throw ShapeError("pca_2 needs at least 2 columns, got " + std::to_string(d));

  MatrixD x(n, d);
  double scale = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += m(i, j);
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      x(i, j) = static_cast<double>(m(i, j)) - mean;
      scale = std::max(scale, std::abs(static_cast<double>(m(i, j))));
    }
  }

  Pca2 out{MatrixD(2, d), MatrixD(n, 2), {0.0, 0.0}, false};

  double spread = 0.0;
  for (double v : x.data()) spread = std::max(spread, std::abs(v));
  if (spread <= 1e-12 * std::max(scale, 1.0)) {
    out.zero_variance = true;
    out.components(0, 0) = 1.0;
    out.components(1, 1) = 1.0;
    return out;
  }

  const double denom = static_cast<double>(n - 1);
  if (d <= n) {
    MatrixD cov(d, d);
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a; b < d; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x(i, a) * x(i, b);
        cov(a, b) = cov(b, a) = s / denom;
      }
    const auto eig = jacobi_eigen(cov);
    for (std::size_t k = 0; k < 2; ++k) {
      out.explained_variance[k] = std::max(eig.values[k], 0.0);
      for (std::size_t j = 0; j < d; ++j) out.components(k, j) = eig.vectors(j, k);
    }
  } else {
    // Gram route: eigenvectors u of X X^T map to covariance eigenvectors X^T u / sqrt(lambda).
    MatrixD gram(n, n);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a; b < n; ++b) gram(a, b) = gram(b, a) = dot(x.row(a), x.row(b));
    const auto eig = jacobi_eigen(gram);
    const double lead = std::max(eig.values[0], 0.0);
    for (std::size_t k = 0; k < 2; ++k) {
      const double lambda = std::max(eig.values[k], 0.0);
      auto comp = out.components.row(k);
      if (lambda > 1e-20 * lead && lambda > 0.0) {
        for (std::size_t j = 0; j < d; ++j) {
          double s = 0.0;
          for (std::size_t i = 0; i < n; ++i) s += x(i, j) * eig.vectors(i, k);
          comp[j] = s;
        }
        normalise(comp);
        out.explained_variance[k] = lambda / denom;
      } else {
        const auto fb = orthogonal_fallback(out.components.row(0));
        std::copy(fb.begin(), fb.end(), comp.begin());
        out.explained_variance[k] = 0.0;
      }
    }
  }

  for (std::size_t k = 0; k < 2; ++k) normalise_sign(out.components.row(k));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < 2; ++k) out.projected(i, k) = dot(x.row(i), out.components.row(k));
  return out;
}

}  // namespace sublens
