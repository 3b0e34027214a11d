#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"

using namespace mzsel;
using test::make_set;

namespace {

Matrix dense(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.begin()->size());
  std::size_t i = 0;
  for (const auto& r : rows) {
    std::size_t j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

std::vector<double> flatten(const KernelMatrix& k) { return {k.entries.data().begin(), k.entries.data().end()}; }

}  // namespace

TEST(LabelKernel, SingleClass) {
  EXPECT_EQ(label_kernel(std::vector<std::uint32_t>{0, 0}).entries, dense({{1, 1}, {1, 1}}));
}

TEST(LabelKernel, TwoClasses) {
  EXPECT_EQ(label_kernel(std::vector<std::uint32_t>{0, 1}).entries, dense({{1, -1}, {-1, 1}}));
}

TEST(LabelKernel, Pattern) {
  EXPECT_EQ(label_kernel(std::vector<std::uint32_t>{0, 1, 0}).entries,
            dense({{1, -1, 1}, {-1, 1, -1}, {1, -1, 1}}));
}

TEST(LabelKernel, RelabelInvariant) {
  std::mt19937_64 gen(1);
  std::vector<std::uint32_t> labels(30);
  for (auto& y : labels) y = static_cast<std::uint32_t>(gen() % 5);
  std::vector<std::uint32_t> perm{3, 0, 4, 1, 2};
  std::vector<std::uint32_t> relabeled;
  for (auto y : labels) relabeled.push_back(perm[y]);
  EXPECT_EQ(label_kernel(labels), label_kernel(relabeled));
}

TEST(GramKernel, IdentityRows) {
  const auto k = gram_kernel(make_set(EmbeddingKind::Features, 2, 2, {0, 1}, {1, 0, 0, 1}));
  EXPECT_EQ(k.entries, Matrix::identity(2));
  EXPECT_EQ(k.kind, KernelKind::Feature);
}

TEST(GramKernel, SquaredNorm) {
  const auto k = gram_kernel(make_set(EmbeddingKind::Gradients, 2, 1, {0}, {3, 4}));
  EXPECT_EQ(k.entries, dense({{25}}));
  EXPECT_EQ(k.kind, KernelKind::Gradient);
}

TEST(GramKernel, MatchesScalarLoopOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto set = test::random_set(EmbeddingKind::Features, 5, 8, 2, seed);
    const auto k = gram_kernel(set);
    const auto want = test::gram_oracle(set);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) EXPECT_LE(test::relative_error(k(i, j), want(i, j)), 1e-12);
  }
}

TEST(GramKernel, ExactlySymmetricAndPsd) {
  const auto set = test::random_set(EmbeddingKind::Features, 12, 30, 3, 6);
  const auto k = gram_kernel(set);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 12; ++j) EXPECT_EQ(k(i, j), k(j, i));
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto x = test::random_vector(12, s);
    EXPECT_GE(dot(x, multiply(k.entries, x)), -1e-9);
  }
}

TEST(GramKernel, QuadraticInScale) {
  auto set = test::random_set(EmbeddingKind::Features, 6, 4, 2, 8);
  const auto k = gram_kernel(set);
  const float c = 2.0f;  // exact in binary, so entries scale exactly
  for (auto& v : set.vectors) v *= c;
  const auto k2 = gram_kernel(set);
  for (std::size_t i = 0; i < 36; ++i)
    EXPECT_LE(test::relative_error(k2.entries.data()[i], 4.0 * k.entries.data()[i]), 1e-9);
  auto set3 = test::random_set(EmbeddingKind::Features, 6, 4, 2, 8);
  for (auto& v : set3.vectors) v *= 1.7f;
  const auto k3 = gram_kernel(set3);
  for (std::size_t i = 0; i < 36; ++i)
    EXPECT_LE(std::abs(k3.entries.data()[i] - 1.7 * 1.7 * k.entries.data()[i]),
              1e-6 * (1.0 + std::abs(k.entries.data()[i])));
}

TEST(GramKernel, ProbabilitiesRejected) {
  const auto probs = make_set(EmbeddingKind::Probabilities, 2, 2, {0}, {0.5f, 0.5f});
  try {
    gram_kernel(probs);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::KindMismatch);
  }
}

TEST(RandomProjection, PassThroughWhenNarrow) {
  const auto set = test::random_set(EmbeddingKind::Gradients, 4, 5, 2, 1);
  EXPECT_EQ(random_projection(set, 10, 3), set);
  EXPECT_EQ(random_projection(set, 5, 3), set);
}

TEST(RandomProjection, ShapeAndLabels) {
  const auto set = test::random_set(EmbeddingKind::Gradients, 4, 50, 2, 1);
  const auto out = random_projection(set, 7, 3);
  EXPECT_EQ(out.d, 7u);
  EXPECT_EQ(out.n, 4u);
  EXPECT_EQ(out.labels, set.labels);
  EXPECT_EQ(out.kind, EmbeddingKind::Gradients);
}

TEST(RandomProjection, MatchesExplicitMatrix) {
  // R(r, j) is Gaussian number j * k + r of the seed's stream, over sqrt(k).
  const std::size_t k = 6, d = 13;
  const auto set = test::random_set(EmbeddingKind::Gradients, 3, d, 2, 5);
  const auto out = random_projection(set, k, 77);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t r = 0; r < k; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += gaussian_at(77, j * k + r) / std::sqrt(double(k)) * set.row(i)[j];
      EXPECT_NEAR(out.row(i)[r], s, 1e-5 * (1.0 + std::abs(s)));
    }
}

TEST(RandomProjection, DoubleRowsAndProjectedGram) {
  const std::size_t k = 6, d = 13;
  const auto set = test::random_set(EmbeddingKind::Gradients, 4, d, 2, 6);
  const Matrix rows = project_rows(set, k, 77);
  Matrix want(4, k);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t j = 0; j < d; ++j) want(i, r) += gaussian_at(77, j * k + r) / std::sqrt(double(k)) * set.row(i)[j];
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t r = 0; r < k; ++r) EXPECT_NEAR(rows(i, r), want(i, r), 1e-12 * (1.0 + std::abs(want(i, r))));

  const auto g = projected_gram_kernel(set, k, 77);
  EXPECT_EQ(g.kind, KernelKind::Gradient);
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) {
      double s = 0.0;
      for (std::size_t r = 0; r < k; ++r) s += want(a, r) * want(b, r);
      EXPECT_NEAR(g(a, b), s, 1e-12 * (1.0 + std::abs(s)));
      EXPECT_EQ(g(a, b), g(b, a));
    }
  // Pass-through below k, and float storage only rounds.
  EXPECT_EQ(projected_gram_kernel(set, 13, 1), gram_kernel(set));
  const auto stored = gram_kernel(random_projection(set, k, 77));
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b) EXPECT_NEAR(stored(a, b), g(a, b), 1e-5 * (1.0 + std::abs(g(a, b))));
}

TEST(RandomProjection, DeterministicAtFullScale) {
  const auto set = test::random_set(EmbeddingKind::Gradients, 2, 50000, 2, 9);
  const auto a = random_projection(set, 10000, 42);
  const auto b = random_projection(set, 10000, 42);
  ASSERT_EQ(a.d, 10000u);
  EXPECT_EQ(a.vectors, b.vectors);
}

TEST(RandomProjection, PreservesGramApproximately) {
  // Johnson-Lindenstrauss check: median relative error of the Gram
  // entries after projecting 2000 -> 500 dimensions.
  std::vector<double> medians;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto set = test::random_set(EmbeddingKind::Gradients, 20, 2000, 2, 100 + seed);
    // Shared component keeps off-diagonal entries away from zero.
    const auto common = test::random_vector(2000, 500 + seed);
    for (std::size_t i = 0; i < 20; ++i)
      for (std::size_t t = 0; t < 2000; ++t) set.vectors[i * 2000 + t] += static_cast<float>(common[t]);
    const auto k = gram_kernel(set);
    const auto kp = gram_kernel(random_projection(set, 500, seed));
    std::vector<double> errs;
    for (std::size_t i = 0; i < 400; ++i) errs.push_back(test::relative_error(kp.entries.data()[i], k.entries.data()[i]));
    std::nth_element(errs.begin(), errs.begin() + 200, errs.end());
    medians.push_back(errs[200]);
  }
  std::sort(medians.begin(), medians.end());
  RecordProperty("median_relative_error", std::to_string(medians[5]));
  for (double m : medians) EXPECT_LT(m, 0.25);
}

TEST(MatrixPearson, SelfAndNegation) {
  const auto k = gram_kernel(test::random_set(EmbeddingKind::Features, 6, 3, 2, 1));
  EXPECT_NEAR(matrix_pearson(k, k), 1.0, 1e-12);
  KernelMatrix neg = k;
  for (auto& v : neg.entries.data()) v = -v;
  EXPECT_NEAR(matrix_pearson(k, neg), -1.0, 1e-12);
}

TEST(MatrixPearson, MatchesFlattenedOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = gram_kernel(test::random_set(EmbeddingKind::Features, 3, 4, 2, seed));
    const auto b = gram_kernel(test::random_set(EmbeddingKind::Features, 3, 4, 2, seed + 1000));
    EXPECT_NEAR(matrix_pearson(a, b), test::pearson_oracle(flatten(a), flatten(b)), 1e-12);
  }
}

TEST(MatrixPearson, AffineInvariance) {
  const auto a = gram_kernel(test::random_set(EmbeddingKind::Features, 7, 5, 2, 3));
  const auto b = label_kernel(test::balanced_labels(7, 3));
  const double base = matrix_pearson(a, b);
  for (double c : {0.01, 1.0, 3.5, 1e4})
    for (double off : {-50.0, 0.0, 2.5}) {
      KernelMatrix t = a;
      for (auto& v : t.entries.data()) v = c * v + off;
      EXPECT_NEAR(matrix_pearson(t, b), base, 1e-9);
    }
}

TEST(MatrixPearson, BoundedInUnitInterval) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = gram_kernel(test::random_set(EmbeddingKind::Features, 8, 3, 2, seed));
    const auto b = label_kernel(test::balanced_labels(8, 1 + seed % 4 + 1));
    const double r = matrix_pearson(a, b);
    EXPECT_LE(std::abs(r), 1.0 + 1e-12);
  }
}

TEST(MatrixPearson, ConstantKernelIsDegenerate) {
  const auto ones = label_kernel(std::vector<std::uint32_t>{0, 0, 0});
  const auto a = gram_kernel(test::random_set(EmbeddingKind::Features, 3, 3, 1, 1));
  try {
    matrix_pearson(a, ones);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegenerateMatrix);
  }
}

TEST(MatrixPearson, DiagonalExclusionFlag) {
  const auto a = gram_kernel(test::random_set(EmbeddingKind::Features, 5, 3, 2, 2));
  const auto b = label_kernel(test::balanced_labels(5, 2));
  std::vector<double> xa, xb;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      if (i != j) xa.push_back(a(i, j)), xb.push_back(b(i, j));
  EXPECT_NEAR(matrix_pearson(a, b, {.exclude_diagonal = true}), test::pearson_oracle(xa, xb), 1e-12);
  EXPECT_NE(matrix_pearson(a, b, {.exclude_diagonal = true}), matrix_pearson(a, b));
}

TEST(MatrixPearson, SizeMismatch) {
  EXPECT_THROW(matrix_pearson(label_kernel(std::vector<std::uint32_t>{0, 1}),
                              label_kernel(std::vector<std::uint32_t>{0, 1, 0})),
               Error);
}
