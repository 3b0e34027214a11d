#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mzsel/embedding.hpp"
#include "mzsel/io.hpp"

namespace mzsel {

/// Header fields and summary statistics of a wire-format file.
inline nlohmann::json inspect_bytes(std::span<const std::uint8_t> bytes) {
  const WireHeader h = parse_header(bytes);
  nlohmann::json j;
  j["version"] = h.version;
  j["n"] = h.n;
  j["d"] = h.d;
  j["bytes"] = bytes.size();
  if (h.kind == kKernelKindByte) {
    const auto k = parse_kernel(bytes);
    j["kind"] = "kernel";
    j["kernel_kind"] = to_string(k.kind);
    double trace = 0.0, asym = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
      trace += k(i, i);
      for (std::size_t t = i + 1; t < k.size(); ++t) asym = std::max(asym, std::abs(k(i, t) - k(t, i)));
    }
    j["trace"] = trace;
    j["max_asymmetry"] = asym;
    return j;
  }
  const auto set = parse_embeddings(bytes);
  j["kind"] = to_string(set.kind);
  j["num_classes"] = set.num_classes;
  j["class_counts"] = class_counts(set);

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0, mean = 0.0;
  double max_dev = 0.0, mean_dev = 0.0;
  for (std::size_t i = 0; i < set.n; ++i) {
    double ss = 0.0, sum = 0.0;
    for (float v : set.row(i)) {
      ss += static_cast<double>(v) * v;
      sum += v;
    }
    const double norm = std::sqrt(ss);
    lo = std::min(lo, norm);
    hi = std::max(hi, norm);
    mean += norm;
    const double dev = std::abs(sum - 1.0);
    max_dev = std::max(max_dev, dev);
    mean_dev += dev;
  }
  const double n = static_cast<double>(set.n);
  j["norm"] = {{"min", lo}, {"max", hi}, {"mean", mean / n}};
  if (set.kind == EmbeddingKind::Probabilities) j["row_sum_deviation"] = {{"max", max_dev}, {"mean", mean_dev / n}};
  return j;
}

inline nlohmann::json inspect_file(const std::filesystem::path& path) {
  return inspect_bytes(detail::read_file(path));
}

}  // namespace mzsel
