#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mzsel/embedding.hpp"
#include "mzsel/error.hpp"
#include "mzsel/kernels.hpp"
#include "mzsel/rng.hpp"
#include "mzsel/stats.hpp"
#include "mzsel/transport.hpp"

namespace mzsel {

enum class Method { LFC, LGC, LEEP, RSA, DomSim, FeatMet, Random };

inline constexpr Method kAllMethods[] = {Method::LFC,    Method::LGC,     Method::LEEP,  Method::RSA,
                                         Method::DomSim, Method::FeatMet, Method::Random};

constexpr std::string_view to_string(Method m) {
  switch (m) {
    case Method::LFC: return "lfc";
    case Method::LGC: return "lgc";
    case Method::LEEP: return "leep";
    case Method::RSA: return "rsa";
    case Method::DomSim: return "domsim";
    case Method::FeatMet: return "featmet";
    case Method::Random: return "random";
  }
  return "unknown";
}

inline std::optional<Method> parse_method(std::string_view name) {
  for (Method m : kAllMethods)
    if (to_string(m) == name) return m;
  return std::nullopt;
}

struct ScoreEntry {
  std::string model;
  Method method = Method::LFC;
  double score = 0.0;

  friend bool operator==(const ScoreEntry&, const ScoreEntry&) = default;
};

namespace detail {

inline void require_kind(const EmbeddingSet& set, EmbeddingKind kind, std::string_view who) {
  if (set.kind != kind)
    throw Error(Errc::KindMismatch,
                std::string(who) + " expects " + std::string(to_string(kind)) + ", got " + std::string(to_string(set.kind)));
}

inline void require_two_classes(const EmbeddingSet& set, std::string_view who) {
  if (classes_present(set) < 2)
    throw Error(Errc::DegenerateMatrix, std::string(who) + ": a single-class task has a constant label kernel");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Label-feature / label-gradient correlation

/// Pearson correlation between the feature Gram matrix and the label kernel.
inline double lfc_score(const EmbeddingSet& features, PearsonOptions opts = {}) {
  detail::require_kind(features, EmbeddingKind::Features, "lfc_score");
  detail::require_two_classes(features, "lfc_score");
  return matrix_pearson(gram_kernel(features), label_kernel(features.labels), opts);
}

/// Same correlation on the Gram matrix of per-sample gradients, after a
/// seeded random projection to `k` dimensions (identity when d <= k).
inline double lgc_score(const EmbeddingSet& gradients, std::size_t k = kDefaultProjectionDim, std::uint64_t seed = 0,
                        PearsonOptions opts = {}) {
  detail::require_kind(gradients, EmbeddingKind::Gradients, "lgc_score");
  detail::require_two_classes(gradients, "lgc_score");
  return matrix_pearson(projected_gram_kernel(gradients, k, seed), label_kernel(gradients.labels), opts);
}

// ---------------------------------------------------------------------------
// LEEP

inline constexpr double kLeepLogFloor = 1e-300;

struct LeepResult {
  double score = 0.0;
  std::size_t floor_hits = 0;            // samples whose mixture hit kLeepLogFloor
  std::size_t empty_source_classes = 0;  // source dims with zero total mass, skipped
};

/// Log expected empirical prediction. Rows of `probs` are source-model
/// class probabilities theta(x_i); labels are the target classes.
inline LeepResult leep(const EmbeddingSet& probs) {
  detail::require_kind(probs, EmbeddingKind::Probabilities, "leep");
  const std::size_t n = probs.n;
  const std::size_t num_source = probs.d;
  const std::size_t num_target = probs.num_classes;
  for (auto c : class_counts(probs))
    if (c == 0) throw Error(Errc::InvalidArgument, "leep: every target class must be present");

  // joint(y, z) = (1/n) sum_i theta_iz [y_i = y]
  Matrix joint(num_target, num_source);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = probs.row(i);
    for (std::size_t z = 0; z < num_source; ++z) joint(probs.labels[i], z) += row[z];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (double& v : joint.data()) v *= inv_n;

  LeepResult result;
  Matrix conditional(num_target, num_source);
  for (std::size_t z = 0; z < num_source; ++z) {
    double marginal = 0.0;
    for (std::size_t y = 0; y < num_target; ++y) marginal += joint(y, z);
    if (marginal == 0.0) {
      ++result.empty_source_classes;
      continue;
    }
    for (std::size_t y = 0; y < num_target; ++y) conditional(y, z) = joint(y, z) / marginal;
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = probs.row(i);
    const auto cond = conditional.row(probs.labels[i]);
    double mixture = 0.0;
    for (std::size_t z = 0; z < num_source; ++z) mixture += cond[z] * static_cast<double>(row[z]);
    if (mixture < kLeepLogFloor) {
      mixture = kLeepLogFloor;
      ++result.floor_hits;
    }
    total += std::log(mixture);
  }
  result.score = total * inv_n;
  return result;
}

inline double leep_score(const EmbeddingSet& probs) { return leep(probs).score; }

// ---------------------------------------------------------------------------
// RSA

/// Representation dissimilarity matrix: 1 - Pearson(row_i, row_j).
inline KernelMatrix rdm(const EmbeddingSet& features) {
  detail::require_kind(features, EmbeddingKind::Features, "rdm");
  const std::size_t n = features.n;
  const std::size_t d = features.d;
  std::vector<double> centered(n * d);
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = features.row(i);
    double mean = 0.0;
    for (float v : r) mean += v;
    mean /= static_cast<double>(d);
    double ss = 0.0;
    for (std::size_t t = 0; t < d; ++t) {
      const double c = static_cast<double>(r[t]) - mean;
      centered[i * d + t] = c;
      ss += c * c;
    }
    if (ss == 0.0) throw Error(Errc::ConstantRow, "rdm: row " + std::to_string(i) + " is constant", i);
    norms[i] = std::sqrt(ss);
  }
  KernelMatrix out{KernelKind::Feature, Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const std::span<const double> a(centered.data() + i * d, d);
      const std::span<const double> b(centered.data() + j * d, d);
      const double v = 1.0 - dot(a, b) / (norms[i] * norms[j]);
      out.entries(i, j) = v;
      out.entries(j, i) = v;
    }
  return out;
}

/// Strict upper triangle, row-major.
inline std::vector<double> upper_triangle(const KernelMatrix& k) {
  const std::size_t n = k.size();
  std::vector<double> out;
  out.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out.push_back(k(i, j));
  return out;
}

/// Spearman correlation between the RDM upper triangles of the model's
/// features and a probe network's features on the same samples.
inline double rsa_score(const EmbeddingSet& model_features, const EmbeddingSet& probe_features) {
  if (model_features.n != probe_features.n) throw Error(Errc::SizeMismatch, "rsa_score: sample counts differ");
  if (model_features.labels != probe_features.labels)
    throw Error(Errc::SizeMismatch, "rsa_score: sample ordering differs (labels disagree)");
  if (model_features.n < 3) throw Error(Errc::DegenerateRanking, "rsa_score needs at least 3 samples");
  return spearman(upper_triangle(rdm(model_features)), upper_triangle(rdm(probe_features)));
}

// ---------------------------------------------------------------------------
// Domain similarity

inline constexpr std::size_t kDefaultMinClassCount = 5;
inline constexpr double kDefaultDomSimGamma = 0.01;

struct ClassMeans {
  PointSet means;
  std::vector<double> weights;  // class count share among surviving classes
  std::vector<std::uint32_t> classes;
};

/// Per-class mean vectors of classes with at least `min_count` samples.
inline ClassMeans class_means(const EmbeddingSet& set, std::size_t min_count = kDefaultMinClassCount) {
  if (min_count == 0) throw Error(Errc::InvalidArgument, "class_means: min_count must be >= 1");
  const auto counts = class_counts(set);
  std::vector<std::vector<double>> sums(set.num_classes, std::vector<double>(set.d, 0.0));
  for (std::size_t i = 0; i < set.n; ++i) {
    const auto r = set.row(i);
    auto& s = sums[set.labels[i]];
    for (std::size_t t = 0; t < set.d; ++t) s[t] += r[t];
  }
  ClassMeans out;
  std::size_t total = 0;
  for (std::uint32_t c = 0; c < set.num_classes; ++c) {
    if (counts[c] < min_count) continue;
    for (double& v : sums[c]) v /= static_cast<double>(counts[c]);
    out.means.push_back(std::move(sums[c]));
    out.weights.push_back(static_cast<double>(counts[c]));
    out.classes.push_back(c);
    total += counts[c];
  }
  if (out.means.empty())
    throw Error(Errc::NoSurvivingClass, "class_means: no class has >= " + std::to_string(min_count) + " samples");
  for (double& w : out.weights) w /= static_cast<double>(total);
  return out;
}

struct DomainSimilarityOptions {
  double gamma = kDefaultDomSimGamma;
  std::size_t min_count = kDefaultMinClassCount;
};

struct DomainSimilarityResult {
  double score = 0.0;
  double emd = 0.0;
};

inline double domain_similarity_from_emd(double emd_cost, double gamma = kDefaultDomSimGamma) {
  return std::exp(-gamma * emd_cost);
}

/// exp(-gamma * EMD) between source and target class-mean distributions,
/// both extracted by the same pre-trained model.
inline DomainSimilarityResult domain_similarity(const EmbeddingSet& source, const EmbeddingSet& target,
                                                DomainSimilarityOptions opts = {}) {
  if (!(opts.gamma > 0.0)) throw Error(Errc::InvalidArgument, "domain_similarity: gamma must be > 0");
  if (source.d != target.d) throw Error(Errc::SizeMismatch, "domain_similarity: feature widths differ");
  const auto src = class_means(source, opts.min_count);
  const auto tgt = class_means(target, opts.min_count);
  const auto plan = emd(src.means, src.weights, tgt.means, tgt.weights);
  return {domain_similarity_from_emd(plan.cost, opts.gamma), plan.cost};
}

inline double domain_similarity_score(const EmbeddingSet& source, const EmbeddingSet& target,
                                      DomainSimilarityOptions opts = {}) {
  return domain_similarity(source, target, opts).score;
}

// ---------------------------------------------------------------------------
// Feature metrics

inline constexpr double kDeadUnitThreshold = 1e-6;

struct FeatureMetricWeights {
  double dead_fraction = 0.5;
  double hoyer = 0.5;

  bool is_default() const noexcept { return dead_fraction == 0.5 && hoyer == 0.5; }
};

struct FeatureMetricsResult {
  double score = 0.0;
  double dead_fraction = 0.0;  // mean share of |v| < 1e-6 entries per row
  double hoyer = 0.0;          // mean Hoyer sparsity per row
  std::size_t zero_rows = 0;   // rows with zero norm, counted as Hoyer 1
};

/// Hoyer sparsity (sqrt(d) - |v|_1 / |v|_2) / (sqrt(d) - 1); 1 for a zero
/// row and for d == 1.
inline double hoyer_sparsity(std::span<const float> v) {
  double l1 = 0.0, l2 = 0.0;
  for (float x : v) {
    l1 += std::abs(static_cast<double>(x));
    l2 += static_cast<double>(x) * static_cast<double>(x);
  }
  if (l2 == 0.0 || v.size() == 1) return 1.0;
  const double root_d = std::sqrt(static_cast<double>(v.size()));
  return (root_d - l1 / std::sqrt(l2)) / (root_d - 1.0);
}

inline FeatureMetricsResult feature_metrics(const EmbeddingSet& features, FeatureMetricWeights weights = {}) {
  detail::require_kind(features, EmbeddingKind::Features, "feature_metrics");
  FeatureMetricsResult out;
  for (std::size_t i = 0; i < features.n; ++i) {
    const auto r = features.row(i);
    std::size_t dead = 0;
    bool zero = true;
    for (float x : r) {
      dead += std::abs(x) < kDeadUnitThreshold;
      zero = zero && x == 0.0f;
    }
    out.zero_rows += zero;
    out.dead_fraction += static_cast<double>(dead) / static_cast<double>(features.d);
    out.hoyer += hoyer_sparsity(r);
  }
  out.dead_fraction /= static_cast<double>(features.n);
  out.hoyer /= static_cast<double>(features.n);
  out.score = weights.dead_fraction * out.dead_fraction + weights.hoyer * out.hoyer;
  return out;
}

inline double feature_metrics_score(const EmbeddingSet& features, FeatureMetricWeights weights = {}) {
  return feature_metrics(features, weights).score;
}

// ---------------------------------------------------------------------------
// Random baseline

/// Seeded uniform permutation (Fisher-Yates from the back on SplitMix64)
/// turned into scores: the model at permuted position p gets n - p.
/// Entries come back in input order.
inline std::vector<ScoreEntry> random_score(std::span<const std::string> model_names, std::uint64_t seed) {
  const std::size_t n = model_names.size();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  SplitMix64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.bounded(i));
    std::swap(perm[i - 1], perm[j]);
  }
  std::vector<ScoreEntry> out(n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t m = perm[p];
    out[m] = {model_names[m], Method::Random, static_cast<double>(n - p)};
  }
  return out;
}

}  // namespace mzsel
