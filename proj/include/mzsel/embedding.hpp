#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mzsel/error.hpp"

namespace mzsel {

enum class EmbeddingKind : std::uint8_t { Features = 0, Gradients = 1, Probabilities = 2 };

constexpr std::string_view to_string(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::Features: return "features";
    case EmbeddingKind::Gradients: return "gradients";
    case EmbeddingKind::Probabilities: return "probabilities";
  }
  return "unknown";
}

inline constexpr double kProbabilityRowTolerance = 1e-4;

/// n per-sample vectors of width d with their class labels. Rows are
/// features, per-sample gradients, or source-model class probabilities.
struct EmbeddingSet {
  EmbeddingKind kind = EmbeddingKind::Features;
  std::size_t n = 0;
  std::size_t d = 0;
  std::uint32_t num_classes = 0;
  std::vector<float> vectors;  // n * d, row-major
  std::vector<std::uint32_t> labels;

  std::span<const float> row(std::size_t i) const noexcept { return {vectors.data() + i * d, d}; }

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;
};

/// Throws Error(InvariantViolation) naming the first broken invariant; the
/// error index is the offending row when there is one.
inline void validate(const EmbeddingSet& set) {
  if (set.n == 0) throw Error(Errc::InvariantViolation, "n must be >= 1");
  if (set.d == 0) throw Error(Errc::InvariantViolation, "d must be >= 1");
  if (set.vectors.size() != set.n * set.d)
    throw Error(Errc::InvariantViolation, "vector payload is not n*d floats");
  if (set.labels.size() != set.n) throw Error(Errc::InvariantViolation, "label count differs from n");
  for (std::size_t i = 0; i < set.n; ++i) {
    if (set.labels[i] >= set.num_classes)
      throw Error(Errc::InvariantViolation,
                  "label " + std::to_string(set.labels[i]) + " >= num_classes " +
                      std::to_string(set.num_classes) + " at row " + std::to_string(i),
                  i);
    const auto r = set.row(i);
    double sum = 0.0;
    for (float v : r) {
      if (!std::isfinite(v))
        throw Error(Errc::InvariantViolation, "non-finite entry at row " + std::to_string(i), i);
      if (set.kind == EmbeddingKind::Probabilities && v < 0.0f)
        throw Error(Errc::InvariantViolation, "negative probability at row " + std::to_string(i), i);
      sum += v;
    }
    if (set.kind == EmbeddingKind::Probabilities && std::abs(sum - 1.0) > kProbabilityRowTolerance)
      throw Error(Errc::InvariantViolation,
                  "row sum " + std::to_string(sum) + " deviates from 1 at row " + std::to_string(i), i);
  }
}

inline std::vector<std::size_t> class_counts(std::span<const std::uint32_t> labels, std::uint32_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (auto y : labels) ++counts.at(y);
  return counts;
}

inline std::vector<std::size_t> class_counts(const EmbeddingSet& set) {
  return class_counts(set.labels, set.num_classes);
}

inline std::size_t classes_present(const EmbeddingSet& set) {
  std::size_t present = 0;
  for (auto c : class_counts(set)) present += (c > 0);
  return present;
}

/// Rows `indices` of `set`, in the given order; everything else is kept.
inline EmbeddingSet take_rows(const EmbeddingSet& set, std::span<const std::size_t> indices) {
  EmbeddingSet out;
  out.kind = set.kind;
  out.n = indices.size();
  out.d = set.d;
  out.num_classes = set.num_classes;
  out.vectors.reserve(out.n * out.d);
  out.labels.reserve(out.n);
  for (auto i : indices) {
    const auto r = set.row(i);
    out.vectors.insert(out.vectors.end(), r.begin(), r.end());
    out.labels.push_back(set.labels[i]);
  }
  return out;
}

}  // namespace mzsel
