#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mzsel/mzsel.hpp"

// Test helpers. Random inputs come from std::mt19937_64 so fixtures do not
// depend on the library's own generator.

namespace mzsel::test {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("mzsel_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<std::uint32_t> balanced_labels(std::size_t n, std::uint32_t classes) {
  std::vector<std::uint32_t> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<std::uint32_t>(i % classes);
  return y;
}

inline EmbeddingSet make_set(EmbeddingKind kind, std::size_t d, std::uint32_t classes, std::vector<std::uint32_t> labels,
                             std::vector<float> vectors) {
  EmbeddingSet s;
  s.kind = kind;
  s.n = labels.size();
  s.d = d;
  s.num_classes = classes;
  s.labels = std::move(labels);
  s.vectors = std::move(vectors);
  return s;
}

/// Gaussian rows with labels i % classes.
inline EmbeddingSet random_set(EmbeddingKind kind, std::size_t n, std::size_t d, std::uint32_t classes,
                               std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::vector<float> v(n * d);
  for (auto& x : v) x = static_cast<float>(normal(gen));
  return make_set(kind, d, classes, balanced_labels(n, classes), std::move(v));
}

/// Rows of factor * m / 16 for integers m in [-50, 50], labels i % classes.
/// lattice(..., 73) is exactly 7.3 * lattice(..., 10) in float32, which a
/// float multiply by 7.3f is not.
inline EmbeddingSet lattice_set(EmbeddingKind kind, std::size_t n, std::size_t d, std::uint32_t classes,
                                std::uint64_t seed, int factor) {
  std::mt19937_64 gen(seed);
  std::vector<float> v(n * d);
  for (auto& x : v) x = static_cast<float>(factor * (static_cast<int>(gen() % 101) - 50)) / 16.0f;
  return make_set(kind, d, classes, balanced_labels(n, classes), std::move(v));
}

/// Softmax rows of Gaussian logits.
inline EmbeddingSet random_probs(std::size_t n, std::size_t d, std::uint32_t classes, std::uint64_t seed,
                                 double scale = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::vector<float> v;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(d);
    double total = 0.0;
    for (auto& x : e) total += (x = std::exp(scale * normal(gen)));
    for (double x : e) v.push_back(static_cast<float>(x / total));
  }
  return make_set(EmbeddingKind::Probabilities, d, classes, balanced_labels(n, classes), std::move(v));
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(rows, cols);
  for (auto& x : m.data()) x = normal(gen);
  return m;
}

/// A A^T for a random n x r factor, so rank <= r.
inline Matrix random_psd(std::size_t n, std::size_t r, std::uint64_t seed) {
  const Matrix a = random_matrix(n, r, seed);
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t t = 0; t < r; ++t) k(i, j) += a(i, t) * a(j, t);
  return k;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (auto& x : v) x = normal(gen);
  return v;
}

inline double relative_error(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

/// Textbook two-pass Pearson on doubles.
inline double pearson_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  double num = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  return num / std::sqrt(va * vb);
}

/// Rank by counting: rank_i = 1 + #{v_j < v_i} + (#{v_j == v_i} - 1) / 2.
inline std::vector<double> rank_oracle(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0.0, equal = 0.0;
    for (double x : v) {
      less += x < v[i];
      equal += x == v[i];
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

inline double spearman_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson_oracle(rank_oracle(a), rank_oracle(b));
}

inline std::vector<double> row_as_double(const EmbeddingSet& s, std::size_t i) {
  const auto r = s.row(i);
  return {r.begin(), r.end()};
}

}  // namespace mzsel::test
