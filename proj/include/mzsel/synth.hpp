#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "mzsel/embedding.hpp"
#include "mzsel/error.hpp"
#include "mzsel/io.hpp"
#include "mzsel/manifest.hpp"
#include "mzsel/rng.hpp"

// Planted-structure model zoo. A model with alignment a in [0, 1] places
// class c's samples around a * separation * u_c, with orthonormal u_c and
// isotropic noise of expected squared norm noise^2. Its source-model
// probabilities peak on a class-specific source label with logit
// a * logit_scale, its source-domain class means sit at
// a * separation * u_c + (1 - a) * separation * w_c (w_c orthogonal to all
// u), and its "fine-tuning accuracy" is accuracy_floor + accuracy_span * a.

namespace mzsel {

struct SynthConfig {
  std::string task_name = "synthetic";
  std::vector<double> alignment_spectrum;  // one entry per model
  std::size_t n_classes = 5;
  std::size_t per_class = 40;
  std::size_t dim = 64;
  std::size_t grad_dim = 128;
  std::size_t probe_dim = 32;
  std::size_t extra_source_classes = 3;
  std::size_t source_per_class = 20;
  double separation = 2.0;
  double noise = 1.0;
  double logit_scale = 4.0;
  double accuracy_floor = 0.5;
  double accuracy_span = 0.45;
  std::size_t per_class_cap = 25;
  std::uint64_t seed = 0;
};

struct SyntheticModel {
  std::string name;
  double alignment = 0.0;
  double accuracy = 0.0;
  EmbeddingSet features;
  EmbeddingSet gradients;
  EmbeddingSet probs;
  EmbeddingSet source;
};

struct SyntheticZoo {
  std::vector<SyntheticModel> models;
  EmbeddingSet probe;
};

namespace detail {

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) { return SplitMix64::at(seed, stream); }

/// `count` orthonormal vectors in R^dim by Gram-Schmidt on Gaussian draws.
inline std::vector<std::vector<double>> orthonormal_directions(std::size_t count, std::size_t dim, GaussianStream& g) {
  if (count > dim) throw Error(Errc::InvalidArgument, "synthetic zoo: need dim >= number of directions");
  std::vector<std::vector<double>> out;
  while (out.size() < count) {
    std::vector<double> v(dim);
    for (auto& x : v) x = g.next();
    for (const auto& u : out) {
      double p = 0.0;
      for (std::size_t t = 0; t < dim; ++t) p += v[t] * u[t];
      for (std::size_t t = 0; t < dim; ++t) v[t] -= p * u[t];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-8) continue;
    for (auto& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

inline EmbeddingSet clustered_set(EmbeddingKind kind, std::span<const std::uint32_t> labels, std::uint32_t num_classes,
                                  const std::vector<std::vector<double>>& centroids, double noise, GaussianStream& g) {
  EmbeddingSet set;
  set.kind = kind;
  set.n = labels.size();
  set.d = centroids.front().size();
  set.num_classes = num_classes;
  set.labels.assign(labels.begin(), labels.end());
  set.vectors.reserve(set.n * set.d);
  const double per_coord = noise / std::sqrt(static_cast<double>(set.d));
  for (auto y : labels)
    for (std::size_t t = 0; t < set.d; ++t)
      set.vectors.push_back(static_cast<float>(centroids[y][t] + per_coord * g.next()));
  return set;
}

inline std::vector<std::vector<double>> scaled(const std::vector<std::vector<double>>& dirs, std::size_t first,
                                               std::size_t count, double scale) {
  std::vector<std::vector<double>> out;
  for (std::size_t c = 0; c < count; ++c) {
    auto v = dirs[first + c];
    for (auto& x : v) x *= scale;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace detail

/// `models` alignments spaced evenly over [0.1, 1].
inline std::vector<double> default_alignment_spectrum(std::size_t models) {
  if (models == 0) throw Error(Errc::InvalidArgument, "need at least one model");
  if (models == 1) return {1.0};
  std::vector<double> out;
  for (std::size_t m = 0; m < models; ++m)
    out.push_back(0.1 + 0.9 * static_cast<double>(m) / static_cast<double>(models - 1));
  return out;
}

inline SyntheticZoo synthesize_zoo(const SynthConfig& cfg) {
  if (cfg.alignment_spectrum.empty()) throw Error(Errc::InvalidArgument, "alignment_spectrum is empty");
  for (double a : cfg.alignment_spectrum)
    if (!(a >= 0.0 && a <= 1.0)) throw Error(Errc::InvalidArgument, "alignment values must lie in [0, 1]");
  if (cfg.n_classes < 2 || cfg.per_class < 1) throw Error(Errc::InvalidArgument, "need >= 2 classes, >= 1 per class");

  const auto num_classes = static_cast<std::uint32_t>(cfg.n_classes);
  std::vector<std::uint32_t> labels;
  for (std::size_t i = 0; i < cfg.n_classes * cfg.per_class; ++i)
    labels.push_back(static_cast<std::uint32_t>(i % cfg.n_classes));
  std::vector<std::uint32_t> source_labels;
  for (std::size_t i = 0; i < cfg.n_classes * cfg.source_per_class; ++i)
    source_labels.push_back(static_cast<std::uint32_t>(i % cfg.n_classes));

  SyntheticZoo zoo;
  {
    GaussianStream g(detail::derive_seed(cfg.seed, 0));
    const auto dirs = detail::orthonormal_directions(cfg.n_classes, cfg.probe_dim, g);
    zoo.probe = detail::clustered_set(EmbeddingKind::Features, labels, num_classes,
                                      detail::scaled(dirs, 0, cfg.n_classes, cfg.separation), cfg.noise, g);
  }

  const std::size_t num_source = cfg.n_classes + cfg.extra_source_classes;
  for (std::size_t m = 0; m < cfg.alignment_spectrum.size(); ++m) {
    const double a = cfg.alignment_spectrum[m];
    SyntheticModel model;
    std::ostringstream name;
    name << "model_" << std::setw(2) << std::setfill('0') << m;
    model.name = name.str();
    model.alignment = a;
    model.accuracy = cfg.accuracy_floor + cfg.accuracy_span * a;

    GaussianStream g(detail::derive_seed(cfg.seed, 1 + m));
    const auto dirs = detail::orthonormal_directions(2 * cfg.n_classes, cfg.dim, g);
    model.features = detail::clustered_set(EmbeddingKind::Features, labels, num_classes,
                                           detail::scaled(dirs, 0, cfg.n_classes, a * cfg.separation), cfg.noise, g);

    auto source_centroids = detail::scaled(dirs, 0, cfg.n_classes, a * cfg.separation);
    const auto off = detail::scaled(dirs, cfg.n_classes, cfg.n_classes, (1.0 - a) * cfg.separation);
    for (std::size_t c = 0; c < cfg.n_classes; ++c)
      for (std::size_t t = 0; t < cfg.dim; ++t) source_centroids[c][t] += off[c][t];
    model.source = detail::clustered_set(EmbeddingKind::Features, source_labels, num_classes, source_centroids,
                                         cfg.noise, g);

    const auto grad_dirs = detail::orthonormal_directions(cfg.n_classes, cfg.grad_dim, g);
    model.gradients = detail::clustered_set(EmbeddingKind::Gradients, labels, num_classes,
                                            detail::scaled(grad_dirs, 0, cfg.n_classes, a * cfg.separation),
                                            cfg.noise, g);

    // Target class c is tied to source label source_of[c].
    SplitMix64 rng(detail::derive_seed(cfg.seed, 1000 + m));
    std::vector<std::size_t> source_of(num_source);
    for (std::size_t z = 0; z < num_source; ++z) source_of[z] = z;
    for (std::size_t i = num_source; i > 1; --i) std::swap(source_of[i - 1], source_of[rng.bounded(i)]);

    EmbeddingSet probs;
    probs.kind = EmbeddingKind::Probabilities;
    probs.n = labels.size();
    probs.d = num_source;
    probs.num_classes = num_classes;
    probs.labels = labels;
    std::vector<double> logits(num_source);
    for (auto y : labels) {
      double top = -1e300;
      for (std::size_t z = 0; z < num_source; ++z) {
        logits[z] = g.next() + (z == source_of[y] ? a * cfg.logit_scale : 0.0);
        top = std::max(top, logits[z]);
      }
      double total = 0.0;
      for (auto& l : logits) total += (l = std::exp(l - top));
      for (double l : logits) probs.vectors.push_back(static_cast<float>(l / total));
    }
    model.probs = std::move(probs);
    zoo.models.push_back(std::move(model));
  }
  return zoo;
}

/// Writes every synthetic file plus manifest.json into `out_dir` and
/// returns the manifest (paths relative to `out_dir`).
inline ZooManifest gen_synthetic_zoo(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  const auto zoo = synthesize_zoo(cfg);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

  ZooManifest manifest;
  manifest.task_name = cfg.task_name;
  manifest.per_class_cap = cfg.per_class_cap;
  manifest.seed = cfg.seed;
  manifest.base_dir = out_dir;
  save_embeddings(zoo.probe, out_dir / "probe.mze");

  const SyntheticModel* baseline = nullptr;
  for (const auto& m : zoo.models) {
    save_embeddings(m.features, out_dir / (m.name + ".features.mze"));
    save_embeddings(m.gradients, out_dir / (m.name + ".gradients.mze"));
    save_embeddings(m.probs, out_dir / (m.name + ".probs.mze"));
    save_embeddings(m.source, out_dir / (m.name + ".source.mze"));
    ModelEntry e;
    e.name = m.name;
    e.embedding_file = m.name + ".features.mze";
    e.gradient_file = m.name + ".gradients.mze";
    e.probs_file = m.name + ".probs.mze";
    e.probe_file = "probe.mze";
    e.source_file = m.name + ".source.mze";
    e.finetune_accuracy = m.accuracy;
    manifest.models.push_back(std::move(e));
    if (baseline == nullptr || m.alignment < baseline->alignment) baseline = &m;
  }
  // The least aligned model plays the generic baseline expert.
  manifest.baseline_model = baseline->name;
  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace mzsel
