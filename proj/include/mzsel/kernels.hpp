#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mzsel/embedding.hpp"
#include "mzsel/error.hpp"
#include "mzsel/matrix.hpp"
#include "mzsel/rng.hpp"

namespace mzsel {

enum class KernelKind : std::uint8_t { Gradient = 0, Feature = 1, Label = 2 };

constexpr std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::Gradient: return "gradient";
    case KernelKind::Feature: return "feature";
    case KernelKind::Label: return "label";
  }
  return "unknown";
}

/// Symmetric n x n Gram or label kernel.
struct KernelMatrix {
  KernelKind kind = KernelKind::Feature;
  Matrix entries;

  std::size_t size() const noexcept { return entries.rows(); }
  double operator()(std::size_t i, std::size_t j) const noexcept { return entries(i, j); }

  friend bool operator==(const KernelMatrix&, const KernelMatrix&) = default;
};

/// +1 where labels agree, -1 elsewhere.
inline KernelMatrix label_kernel(std::span<const std::uint32_t> labels) {
  const std::size_t n = labels.size();
  if (n == 0) throw Error(Errc::InvalidArgument, "label_kernel needs n >= 1");
  KernelMatrix k{KernelKind::Label, Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) k.entries(i, j) = (labels[i] == labels[j]) ? 1.0 : -1.0;
  return k;
}

namespace detail {

inline KernelKind gram_kind(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::Features: return KernelKind::Feature;
    case EmbeddingKind::Gradients: return KernelKind::Gradient;
    case EmbeddingKind::Probabilities: break;
  }
  throw Error(Errc::KindMismatch, "gram_kernel is defined for features or gradients");
}

template <typename RowAt>
Matrix gram_of_rows(std::size_t n, RowAt row_at) {
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = row_at(i);
    for (std::size_t j = i; j < n; ++j) {
      const auto b = row_at(j);
      double s = 0.0;
      for (std::size_t t = 0; t < a.size(); ++t) s += static_cast<double>(a[t]) * static_cast<double>(b[t]);
      k(i, j) = s;
      k(j, i) = s;
    }
  }
  return k;
}

}  // namespace detail

/// Pairwise dot products of the rows, accumulated in double. The upper
/// triangle is computed row by row and mirrored, so the result is exactly
/// symmetric and independent of any blocking.
inline KernelMatrix gram_kernel(const EmbeddingSet& set) {
  const KernelKind kind = detail::gram_kind(set.kind);
  return {kind, detail::gram_of_rows(set.n, [&](std::size_t i) { return set.row(i); })};
}

inline constexpr std::size_t kDefaultProjectionDim = 10000;

/// Rows multiplied by a Gaussian R (k x d) with R_{rj} ~ N(0, 1/k), kept in
/// double: an n x k matrix. R is drawn column by column from
/// GaussianStream(seed): entry (r, j) is stream element j * k + r.
inline Matrix project_rows(const EmbeddingSet& set, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw Error(Errc::InvalidArgument, "projection dimension must be >= 1");
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  Matrix out(set.n, k);
  std::vector<double> column(k);
  GaussianStream gauss(seed);
  for (std::size_t j = 0; j < set.d; ++j) {
    for (std::size_t r = 0; r < k; ++r) column[r] = gauss.next() * scale;
    for (std::size_t i = 0; i < set.n; ++i) {
      const double x = set.vectors[i * set.d + j];
      if (x == 0.0) continue;
      auto row = out.row(i);
      for (std::size_t r = 0; r < k; ++r) row[r] += column[r] * x;
    }
  }
  return out;
}

/// Gaussian random projection to `k` dimensions, rounded to float for
/// storage. Sets with d <= k pass through unchanged.
inline EmbeddingSet random_projection(const EmbeddingSet& set, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw Error(Errc::InvalidArgument, "projection dimension must be >= 1");
  if (set.d <= k) return set;
  const Matrix projected = project_rows(set, k, seed);
  EmbeddingSet out;
  out.kind = set.kind;
  out.n = set.n;
  out.d = k;
  out.num_classes = set.num_classes;
  out.labels = set.labels;
  out.vectors.reserve(set.n * k);
  for (double v : projected.data()) out.vectors.push_back(static_cast<float>(v));
  return out;
}

/// Gram kernel of the projected rows. The projection stays in double, so
/// this is not gram_kernel(random_projection(...)) bit for bit.
inline KernelMatrix projected_gram_kernel(const EmbeddingSet& set, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw Error(Errc::InvalidArgument, "projection dimension must be >= 1");
  if (set.d <= k) return gram_kernel(set);
  const KernelKind kind = detail::gram_kind(set.kind);
  const Matrix projected = project_rows(set, k, seed);
  return {kind, detail::gram_of_rows(set.n, [&](std::size_t i) { return projected.row(i); })};
}

struct PearsonOptions {
  bool exclude_diagonal = false;
};

inline constexpr double kDegenerateNorm = 1e-30;

/// Pearson correlation between the entries of two equally sized kernels.
inline double matrix_pearson(const KernelMatrix& a, const KernelMatrix& b, PearsonOptions opts = {}) {
  const std::size_t n = a.size();
  if (b.size() != n) throw Error(Errc::SizeMismatch, "matrix_pearson needs equal sizes");
  auto included = [&](std::size_t i, std::size_t j) { return !(opts.exclude_diagonal && i == j); };

  double sum_a = 0.0, sum_b = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (included(i, j)) {
        sum_a += a(i, j);
        sum_b += b(i, j);
        ++count;
      }
  if (count == 0) throw Error(Errc::DegenerateMatrix, "no entries to correlate");
  const double mean_a = sum_a / static_cast<double>(count);
  const double mean_b = sum_b / static_cast<double>(count);

  double cross = 0.0, ss_a = 0.0, ss_b = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (included(i, j)) {
        const double da = a(i, j) - mean_a;
        const double db = b(i, j) - mean_b;
        cross += da * db;
        ss_a += da * da;
        ss_b += db * db;
      }
  const double norm_a = std::sqrt(ss_a);
  const double norm_b = std::sqrt(ss_b);
  if (norm_a < kDegenerateNorm || norm_b < kDegenerateNorm)
    throw Error(Errc::DegenerateMatrix, "a kernel is constant (zero centered norm)");
  return cross / (norm_a * norm_b);
}

}  // namespace mzsel
