#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "sublens/errors.hpp"
#include "sublens/tensor.hpp"

namespace sublens {
namespace {

Matrix random_matrix(std::mt19937& rng, std::size_t r, std::size_t c, float scale = 1.0f) {
  std::normal_distribution<float> nd(0.0f, scale);
  Matrix m(r, c);
  for (float& v : m.data()) v = nd(rng);
  return m;
}

// Independent PCA: Eigen's self-adjoint solver on the full covariance in double.
struct OraclePca {
  Eigen::MatrixXd components;  // cols x 2
  Eigen::MatrixXd projected;   // rows x 2
  Eigen::Vector2d variance;
};

OraclePca oracle_pca(const Matrix& m) {
  Eigen::MatrixXd x(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) x(i, j) = m(i, j);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(m.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const auto n = cov.cols();
  OraclePca o;
  o.components = es.eigenvectors().rightCols(2).rowwise().reverse();
  o.variance = {es.eigenvalues()(n - 1), es.eigenvalues()(n - 2)};
  o.projected = x * o.components;
  return o;
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const auto b = Matrix::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(matmul(Matrix::identity(2), b), b);
}

TEST(Matmul, HandComputedProduct) {
  // [[1,2],[3,4]] * [[5],[6]] = [[1*5+2*6],[3*5+4*6]] = [[17],[39]]
  const auto c = matmul(Matrix::from_rows({{1, 2}, {3, 4}}), Matrix::from_rows({{5}, {6}}));
  EXPECT_EQ(c, Matrix::from_rows({{17}, {39}}));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  try {
    matmul(Matrix(2, 3), Matrix(2, 2));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("(2x3)"), std::string::npos);
    EXPECT_NE(msg.find("(2x2)"), std::string::npos);
  }
}

TEST(Matmul, MatchesNaiveTripleLoopOnIntegers) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> val(-9, 9);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = dim(rng), k = dim(rng), m = dim(rng);
    Matrix a(n, k), b(k, m);
    for (float& v : a.data()) v = static_cast<float>(val(rng));
    for (float& v : b.data()) v = static_cast<float>(val(rng));
    Matrix expect(n, m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        long long s = 0;
        for (std::size_t t = 0; t < k; ++t) s += static_cast<long long>(a(i, t)) * static_cast<long long>(b(t, j));
        expect(i, j) = static_cast<float>(s);
      }
    ASSERT_EQ(matmul(a, b), expect) << "trial " << trial;
  }
}

TEST(LayerNorm, ConstantInputGivesZero) {
  const Vector x(5, 3.25f), g(5, 1.0f), b(5, 0.0f);
  for (float v : layer_norm(x, g, b, 1e-12f)) EXPECT_EQ(v, 0.0f);
}

TEST(LayerNorm, UnitVarianceInputIsUnchanged) {
  // mean 0, population variance 1
  const auto y = layer_norm(Vector{1, -1}, Vector{1, 1}, Vector{0, 0}, 1e-12f);
  EXPECT_NEAR(y[0], 1.0f, 1e-6);
  EXPECT_NEAR(y[1], -1.0f, 1e-6);
}

TEST(LayerNorm, BetaPassesThroughForConstantInput) {
  const auto y = layer_norm(Vector{2, 2}, Vector{1, 1}, Vector{5, 5}, 1e-12f);
  EXPECT_EQ(y, (Vector{5, 5}));
}

TEST(LayerNorm, DimensionMismatchThrows) {
  EXPECT_THROW(layer_norm(Vector{1, 2, 3}, Vector{1, 1}, Vector{0, 0}, 1e-5f), ShapeError);
}

TEST(LayerNorm, OutputIsStandardisedProperty) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = random_matrix(rng, 1, 64, 3.0f);
    const auto y = layer_norm(m.row(0), Vector(64, 1.0f), Vector(64, 0.0f), 1e-12f);
    double mean = 0, var = 0;
    for (float v : y) mean += v;
    mean /= 64;
    for (float v : y) var += (v - mean) * (v - mean);
    var /= 64;
    EXPECT_NEAR(mean, 0.0, 1e-4);
    EXPECT_NEAR(var, 1.0, 1e-4);
  }
}

TEST(Softmax, SymmetricRowIsUniform) {
  const auto p = softmax_rows(Matrix::from_rows({{0, 0}}));
  EXPECT_FLOAT_EQ(p(0, 0), 0.5f);
  EXPECT_FLOAT_EQ(p(0, 1), 0.5f);
}

TEST(Softmax, LnTwoGivesTwoThirds) {
  // exp(ln2) / (exp(ln2) + 1) = 2/3
  const auto p = softmax_rows(Matrix::from_rows({{std::log(2.0f), 0.0f}}));
  EXPECT_NEAR(p(0, 0), 2.0 / 3.0, 1e-6);
  EXPECT_NEAR(p(0, 1), 1.0 / 3.0, 1e-6);
}

TEST(Softmax, LargeLogitsStayFinite) {
  const auto p = softmax_rows(Matrix::from_rows({{1000, 0}}));
  EXPECT_TRUE(all_finite(p.data()));
  EXPECT_NEAR(p(0, 0), 1.0f, 1e-6);
  EXPECT_NEAR(p(0, 1), 0.0f, 1e-6);
}

TEST(Softmax, RowsSumToOneProperty) {
  std::mt19937 rng(3);
  for (float scale : {1.0f, 100.0f, 1e4f}) {
    const auto m = random_matrix(rng, 50, 17, scale);
    const auto p = softmax_rows(m);
    ASSERT_TRUE(all_finite(p.data()));
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double s = 0;
      for (float v : p.row(r)) s += v;
      EXPECT_NEAR(s, 1.0, 1e-6) << "scale " << scale << " row " << r;
    }
  }
}

TEST(Gelu, ReferencePoints) {
  EXPECT_EQ(gelu(0.0f), 0.0f);
  EXPECT_NEAR(gelu(10.0f), 10.0f, 1e-4);
  // 30-digit evaluation of the tanh form at x = 1: 0.8411919906082767
  EXPECT_NEAR(gelu(1.0f), 0.841192f, 1e-6);
}

TEST(Gelu, WithinOneThousandthOfErfForm) {
  for (float x = -6.0f; x <= 6.0f; x += 0.01f) {
    const double exact = 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
    EXPECT_LT(std::abs(gelu(x) - exact), 1e-3) << x;
  }
}

TEST(Cosine, BasicCases) {
  const Vector v{0.3f, -1.2f, 4.0f};
  EXPECT_EQ(cosine(v, v), 1.0f);
  EXPECT_EQ(cosine(Vector{1, 0}, Vector{0, 1}), 0.0f);
  EXPECT_NEAR(cosine(Vector{1, 2}, Vector{2, 4}), 1.0f, 1e-7);
}

TEST(Cosine, ZeroVectorIsDegenerate) {
  EXPECT_THROW(cosine(Vector{0, 0}, Vector{1, 0}), DegenerateVectorError);
  EXPECT_THROW(cosine(Vector{1, 0}, Vector{0, 0}), DegenerateVectorError);
}

TEST(Cosine, SymmetryScaleInvarianceAndBoundsProperty) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> pos(0.01f, 100.0f);
  for (int trial = 0; trial < 500; ++trial) {
    const auto m = random_matrix(rng, 2, 32);
    const float c = pos(rng);
    Vector scaled(m.row(0).begin(), m.row(0).end());
    for (float& v : scaled) v *= c;
    const float ab = cosine(m.row(0), m.row(1));
    EXPECT_EQ(ab, cosine(m.row(1), m.row(0)));
    EXPECT_NEAR(cosine(scaled, m.row(1)), ab, 1e-6);
    EXPECT_LE(ab, 1.0f);
    EXPECT_GE(ab, -1.0f);
  }
}

TEST(SquaredL2, Examples) {
  const Vector v{1.5f, 2.5f};
  EXPECT_EQ(squared_l2(std::span<const float>(v), std::span<const float>(v)), 0.0f);
  EXPECT_EQ(squared_l2(std::span<const float>(Vector{0, 0}), std::span<const float>(Vector{3, 4})), 25.0f);
  // (2-1)^2 + (3-1)^2 = 1 + 4
  EXPECT_EQ(squared_l2(std::span<const float>(Vector{1, 1}), std::span<const float>(Vector{2, 3})), 5.0f);
  EXPECT_THROW(squared_l2(std::span<const float>(Vector{1}), std::span<const float>(Vector{1, 2})), ShapeError);
}

TEST(Jacobi, DiagonalisesKnownMatrix) {
  // [[2,1],[1,2]] has eigenvalues 3 and 1.
  const auto eig = jacobi_eigen(MatrixD::from_rows({{2, 1}, {1, 2}}));
  EXPECT_NEAR(eig.values[0], 3.0, 1e-12);
  EXPECT_NEAR(eig.values[1], 1.0, 1e-12);
  EXPECT_NEAR(std::abs(eig.vectors(0, 0)), std::sqrt(0.5), 1e-12);
}

TEST(Pca, TooFewRows) { EXPECT_THROW(pca_2(Matrix(2, 3)), InsufficientSamplesError); }

TEST(Pca, CollinearPointsKeepDistances) {
  // Points on y = 2x: the 2x2 covariance has eigenvectors (1,2)/sqrt5 and (-2,1)/sqrt5.
  const auto m = Matrix::from_rows({{0, 0}, {1, 2}, {2, 4}, {4, 8}});
  const auto p = pca_2(m);
  EXPECT_NEAR(p.components(0, 0), 1 / std::sqrt(5.0), 1e-9);
  EXPECT_NEAR(p.components(0, 1), 2 / std::sqrt(5.0), 1e-9);
  EXPECT_NEAR(p.explained_variance[1], 0.0, 1e-9);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const double orig = squared_l2(std::span<const float>(m.row(i)), std::span<const float>(m.row(j)));
      EXPECT_NEAR(squared_l2(p.projected.row(i), p.projected.row(j)), orig, 1e-6);
    }
}

TEST(Pca, IdenticalRowsGiveZeroProjections) {
  Matrix m(24, 6);
  for (std::size_t r = 0; r < 24; ++r)
    for (std::size_t c = 0; c < 6; ++c) m(r, c) = 0.1f * static_cast<float>(c) + 1.0f / 3.0f;
  const auto p = pca_2(m);
  EXPECT_TRUE(p.zero_variance);
  for (double v : p.projected.data()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(p.explained_variance, (std::vector<double>{0.0, 0.0}));
  // fallback basis is orthonormal
  EXPECT_EQ(p.components(0, 0), 1.0);
  EXPECT_EQ(p.components(1, 1), 1.0);
}

void expect_matches_oracle(const Matrix& m, double tol) {
  const auto p = pca_2(m);
  const auto o = oracle_pca(m);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_NEAR(p.explained_variance[k], o.variance(static_cast<Eigen::Index>(k)), tol);
    double sign_dot = 0;
    for (std::size_t j = 0; j < m.cols(); ++j) sign_dot += p.components(k, j) * o.components(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
    const double sign = sign_dot < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
      EXPECT_NEAR(p.projected(i, k), sign * o.projected(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)), tol)
          << "row " << i << " pc " << k;
  }
}

TEST(Pca, MatchesEigenOracleOnRandom5x3) {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 20; ++trial) expect_matches_oracle(random_matrix(rng, 5, 3), 1e-8);
}

TEST(Pca, MatchesEigenOracleOnRandom24x8) {
  std::mt19937 rng(43);
  for (int trial = 0; trial < 20; ++trial) expect_matches_oracle(random_matrix(rng, 24, 8), 1e-8);
}

TEST(Pca, GramRouteMatchesEigenOracleOnWideData) {
  std::mt19937 rng(44);
  for (int trial = 0; trial < 5; ++trial) expect_matches_oracle(random_matrix(rng, 24, 96), 1e-8);
}

TEST(Pca, SignConventionLargestEntryPositive) {
  std::mt19937 rng(45);
  const auto p = pca_2(random_matrix(rng, 10, 5));
  for (std::size_t k = 0; k < 2; ++k) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < 5; ++j)
      if (std::abs(p.components(k, j)) > std::abs(p.components(k, best))) best = j;
    EXPECT_GT(p.components(k, best), 0.0);
  }
}

TEST(Pca, TranslationInvarianceContractionAndOrderingProperty) {
  std::mt19937 rng(46);
  std::uniform_int_distribution<int> shift(-20, 20);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t cols = trial % 2 ? 8 : 40;  // covariance and Gram routes
    // Multiples of 2^-10 plus integer offsets: the shifted copy is exact in float32.
    auto m = random_matrix(rng, 24, cols);
    for (float& v : m.data()) v = std::round(v * 1024.0f) / 1024.0f;
    Matrix moved = m;
    Vector offset(cols);
    for (float& v : offset) v = static_cast<float>(shift(rng));
    for (std::size_t r = 0; r < 24; ++r)
      for (std::size_t c = 0; c < cols; ++c) moved(r, c) += offset[c];

    const auto p = pca_2(m);
    const auto q = pca_2(moved);
    EXPECT_GE(p.explained_variance[0], p.explained_variance[1]);
    for (std::size_t i = 0; i < 24; ++i)
      for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(p.projected(i, k), q.projected(i, k), 1e-6);

    for (std::size_t i = 0; i < 24; ++i)
      for (std::size_t j = i + 1; j < 24; ++j) {
        const double full = squared_l2(std::span<const float>(m.row(i)), std::span<const float>(m.row(j)));
        EXPECT_LE(squared_l2(p.projected.row(i), p.projected.row(j)), full + 1e-6);
      }
  }
}

}  // namespace
}  // namespace sublens
