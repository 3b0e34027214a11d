#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "mzsel/error.hpp"

namespace mzsel {

/// Sample Pearson correlation; a constant input throws DegenerateMatrix.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::SizeMismatch, "pearson needs equal lengths");
  if (a.size() < 2) throw Error(Errc::InvalidArgument, "pearson needs at least two observations");
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double cross = 0.0, sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    cross += da * db;
    sa += da * da;
    sb += db * db;
  }
  if (sa == 0.0 || sb == 0.0) throw Error(Errc::DegenerateMatrix, "pearson of a constant sequence");
  return cross / std::sqrt(sa * sb);
}

/// 1-based fractional ranks; tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1 .. j
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
    i = j;
  }
  return ranks;
}

/// Spearman rank correlation with average ranks on ties.
inline double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::SizeMismatch, "spearman needs equal lengths");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  try {
    return pearson(ra, rb);
  } catch (const Error& e) {
    if (e.code() == Errc::DegenerateMatrix) throw Error(Errc::DegenerateRanking, "spearman of a constant sequence");
    throw;
  }
}

}  // namespace mzsel
