#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mzsel/embedding.hpp"
#include "mzsel/error.hpp"
#include "mzsel/rng.hpp"

namespace mzsel {

inline constexpr std::size_t kDefaultPerClassCap = 25;

/// Indices (ascending) of a class-stratified sample keeping at most
/// `per_class_cap` rows per class.
///
/// Classes are visited in increasing id with one SplitMix64(seed) stream.
/// A class with count <= cap is kept whole and consumes no draws; a larger
/// class runs `cap` steps of partial Fisher-Yates over its row indices
/// (ascending), step i swapping slot i with slot i + bounded(count - i).
inline std::vector<std::size_t> stratified_indices(std::span<const std::uint32_t> labels, std::uint32_t num_classes,
                                                   std::size_t per_class_cap, std::uint64_t seed) {
  if (per_class_cap == 0) throw Error(Errc::InvalidArgument, "per_class_cap must be >= 1");
  std::vector<std::vector<std::size_t>> members(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) members.at(labels[i]).push_back(i);

  SplitMix64 rng(seed);
  std::vector<std::size_t> kept;
  kept.reserve(labels.size());
  for (auto& idx : members) {
    if (idx.size() > per_class_cap) {
      for (std::size_t i = 0; i < per_class_cap; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.bounded(idx.size() - i));
        std::swap(idx[i], idx[j]);
      }
      idx.resize(per_class_cap);
    }
    kept.insert(kept.end(), idx.begin(), idx.end());
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

inline EmbeddingSet stratified_subsample(const EmbeddingSet& set, std::size_t per_class_cap, std::uint64_t seed) {
  const auto idx = stratified_indices(set.labels, set.num_classes, per_class_cap, seed);
  return take_rows(set, idx);
}

}  // namespace mzsel
