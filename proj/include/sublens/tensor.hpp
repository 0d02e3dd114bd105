#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sublens {

// Dense row-major matrix. float32 is the working precision of the encoder;
// double is used by PCA only.
template <typename T>
class BasicMatrix {
 public:
  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data);

  static BasicMatrix from_rows(const std::vector<std::vector<T>>& rows);
  static BasicMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  std::string shape_string() const;

  bool operator==(const BasicMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<float>;
using MatrixD = BasicMatrix<double>;
using Vector = std::vector<float>;

/// Standard product a*b. Accumulates each output element left to right in float32.
Matrix matmul(const Matrix& a, const Matrix& b);

/// x*w + bias broadcast over rows; w is in_dim x out_dim.
Matrix linear(const Matrix& x, const Matrix& w, std::span<const float> bias);

/// (x - mean) / sqrt(var + eps) * gamma + beta with population variance.
Vector layer_norm(std::span<const float> x, std::span<const float> gamma,
                  std::span<const float> beta, float eps);

/// Row-wise layer_norm.
Matrix layer_norm_rows(const Matrix& x, std::span<const float> gamma,
                       std::span<const float> beta, float eps);

/// Max-subtracted softmax over each row.
Matrix softmax_rows(const Matrix& m);

/// Tanh-approximated GELU: 0.5x(1 + tanh(sqrt(2/pi)(x + 0.044715x^3))).
/// Differs from the erf form by less than 1e-3 everywhere.
float gelu(float x);
Vector gelu(std::span<const float> x);
void gelu_inplace(std::span<float> x);

/// Cosine similarity clamped to [-1, 1]. Throws DegenerateVectorError if
/// either norm is <= 1e-12.
float cosine(std::span<const float> a, std::span<const float> b);

float squared_l2(std::span<const float> a, std::span<const float> b);
double squared_l2(std::span<const double> a, std::span<const double> b);

bool all_finite(std::span<const float> x) noexcept;

/// Mean of rows [begin, end).
Vector mean_rows(const Matrix& m, std::size_t begin, std::size_t end);

struct Pca2 {
  MatrixD components;               // 2 x cols, orthonormal rows
  MatrixD projected;                // rows x 2
  std::vector<double> explained_variance;  // 2 entries, non-increasing
  bool zero_variance = false;       // basis is an arbitrary fallback
};

/// Two-component PCA of the column-centred rows of m. Computed in double.
///
/// The covariance eigenproblem is solved with cyclic Jacobi rotations on the
/// cols x cols covariance when cols <= rows, otherwise on the rows x rows Gram
/// matrix of the centred data. Each component is sign-normalised so its
/// largest-magnitude entry is positive. Requires at least 3 rows.
Pca2 pca_2(const Matrix& m);

struct SymmetricEigen {
  std::vector<double> values;  // descending
  MatrixD vectors;             // column k is the eigenvector of values[k]
};

/// Cyclic Jacobi eigensolver for a symmetric matrix; stops when the
/// off-diagonal Frobenius norm falls below tol.
SymmetricEigen jacobi_eigen(const MatrixD& a, double tol = 1e-10, int max_sweeps = 100);

}  // namespace sublens
