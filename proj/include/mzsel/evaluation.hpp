#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mzsel/embedding.hpp"
#include "mzsel/error.hpp"
#include "mzsel/io.hpp"
#include "mzsel/log.hpp"
#include "mzsel/manifest.hpp"
#include "mzsel/scores.hpp"
#include "mzsel/stats.hpp"
#include "mzsel/subsample.hpp"

namespace mzsel {

using AccuracyMap = std::map<std::string, double>;

inline constexpr std::size_t kUncapped = std::numeric_limits<std::size_t>::max();

/// Descending by score, ties by ascending model name.
inline std::vector<std::string> rank_models(std::span<const ScoreEntry> scores) {
  std::set<std::string> seen;
  for (const auto& s : scores)
    if (!seen.insert(s.model).second) throw Error(Errc::DuplicateModel, "model " + s.model + " scored twice");
  std::vector<const ScoreEntry*> order;
  order.reserve(scores.size());
  for (const auto& s : scores) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const ScoreEntry* a, const ScoreEntry* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->model < b->model;
  });
  std::vector<std::string> out;
  out.reserve(order.size());
  for (const auto* s : order) out.push_back(s->model);
  return out;
}

inline double spearman_to_accuracy(std::span<const ScoreEntry> scores, const AccuracyMap& accuracies) {
  std::vector<double> s, a;
  for (const auto& e : scores)
    if (auto it = accuracies.find(e.model); it != accuracies.end()) {
      s.push_back(e.score);
      a.push_back(it->second);
    }
  if (s.size() < 3)
    throw Error(Errc::InsufficientGroundTruth, "spearman_to_accuracy needs >= 3 models with accuracies");
  return spearman(s, a);
}

/// 1-based position of the most accurate model (ties by name) in the
/// score ranking.
inline std::size_t trials_to_best(std::span<const ScoreEntry> scores, const AccuracyMap& accuracies) {
  const auto ranked = rank_models(scores);
  const std::string* best = nullptr;
  double best_acc = 0.0;
  for (const auto& m : ranked) {
    auto it = accuracies.find(m);
    if (it == accuracies.end()) continue;
    if (best == nullptr || it->second > best_acc || (it->second == best_acc && m < *best)) {
      best = &m;
      best_acc = it->second;
    }
  }
  if (best == nullptr) throw Error(Errc::InsufficientGroundTruth, "no scored model has an accuracy");
  return static_cast<std::size_t>(std::find(ranked.begin(), ranked.end(), *best) - ranked.begin()) + 1;
}

/// Best accuracy among the top-k ranked models minus the baseline's.
inline double topk_gain(std::span<const ScoreEntry> scores, const AccuracyMap& accuracies, std::size_t k,
                        const std::string& baseline_model) {
  if (k == 0) throw Error(Errc::InvalidArgument, "topk_gain: k must be >= 1");
  auto base = accuracies.find(baseline_model);
  if (base == accuracies.end())
    throw Error(Errc::InsufficientGroundTruth, "baseline model " + baseline_model + " has no accuracy");
  const auto ranked = rank_models(scores);
  std::optional<double> best;
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i)
    if (auto it = accuracies.find(ranked[i]); it != accuracies.end())
      best = best ? std::max(*best, it->second) : it->second;
  if (!best) throw Error(Errc::InsufficientGroundTruth, "no top-k model has an accuracy");
  return *best - base->second;
}

// ---------------------------------------------------------------------------
// Benchmark harness

struct BenchmarkConfig {
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  std::optional<std::size_t> per_class_cap;  // overrides the manifest; kUncapped disables capping
  std::optional<std::uint64_t> seed;         // overrides the manifest
  std::size_t projection_dim = kDefaultProjectionDim;
  double gamma = kDefaultDomSimGamma;
  std::size_t min_class_count = kDefaultMinClassCount;
  FeatureMetricWeights featmet_weights;
  std::vector<std::size_t> topk{1, 3};
  PearsonOptions pearson;
  std::size_t jobs = 1;
};

struct SkippedInput {
  Method method = Method::LFC;
  std::string model;
  std::string reason;
};

struct EvalReport {
  std::string task;
  Method method = Method::LFC;
  std::vector<ScoreEntry> scores;  // manifest order
  std::vector<std::string> ranked_models;
  std::optional<double> spearman_to_accuracy;
  std::optional<std::size_t> trials_to_best;
  std::map<std::size_t, double> topk_gain;
  std::vector<std::string> notes;
};

struct BenchmarkResult {
  std::string task;
  std::size_t per_class_cap = kDefaultPerClassCap;
  std::uint64_t seed = 0;
  std::size_t samples = 0;  // rows per model after subsampling
  std::vector<EvalReport> reports;
  std::vector<SkippedInput> skipped;
  std::vector<std::string> warnings;

  bool degraded() const noexcept { return !skipped.empty(); }
  const EvalReport* report(Method m) const {
    for (const auto& r : reports)
      if (r.method == m) return &r;
    return nullptr;
  }
};

inline AccuracyMap accuracies_of(const ZooManifest& manifest) {
  AccuracyMap acc;
  for (const auto& m : manifest.models)
    if (m.finetune_accuracy) acc[m.name] = *m.finetune_accuracy;
  return acc;
}

/// Calls fn(i) for i in [0, count) on up to `jobs` threads. Results must be
/// written to per-index slots; the first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {

inline std::optional<std::filesystem::path> required_input(const ModelEntry& m, Method method) {
  switch (method) {
    case Method::LFC:
    case Method::FeatMet: return m.embedding_file;
    case Method::LGC: return m.gradient_file;
    case Method::LEEP: return m.probs_file;
    case Method::RSA: return m.probe_file;
    case Method::DomSim: return m.source_file;
    case Method::Random: return std::filesystem::path{};
  }
  return std::nullopt;
}

inline std::string_view input_field(Method method) {
  switch (method) {
    case Method::LFC:
    case Method::FeatMet: return "embedding_file";
    case Method::LGC: return "gradient_file";
    case Method::LEEP: return "probs_file";
    case Method::RSA: return "probe_file";
    case Method::DomSim: return "source_file";
    case Method::Random: return "";
  }
  return "";
}

inline EmbeddingSet load_aligned(const ZooManifest& manifest, const std::filesystem::path& file,
                                 const EmbeddingSet& reference, std::span<const std::size_t> indices) {
  auto set = load_embeddings(manifest.resolve(file));
  if (set.labels != reference.labels || set.num_classes != reference.num_classes)
    throw Error(Errc::InvariantViolation, file.string() + " does not share the target samples of the embedding file");
  return take_rows(set, indices);
}

}  // namespace detail

/// Scores every requested method on one shared stratified subsample of the
/// task and evaluates the resulting rankings against the manifest's
/// fine-tuning accuracies. A method with a missing input for any model is
/// skipped for the whole zoo and recorded in `skipped`.
inline BenchmarkResult run_benchmark(const ZooManifest& manifest, const BenchmarkConfig& config) {
  validate(manifest);
  BenchmarkResult result;
  result.task = manifest.task_name;
  result.per_class_cap = config.per_class_cap.value_or(manifest.per_class_cap);
  result.seed = config.seed.value_or(manifest.seed);

  std::vector<Method> methods;
  for (Method m : config.methods) {
    bool ok = true;
    for (const auto& model : manifest.models) {
      const auto input = detail::required_input(model, m);
      if (!input) {
        result.skipped.push_back({m, model.name, "MissingInput: no " + std::string(detail::input_field(m))});
        ok = false;
      } else if (m != Method::Random && !std::filesystem::exists(manifest.resolve(*input))) {
        result.skipped.push_back({m, model.name, "MissingInput: " + manifest.resolve(*input).string() + " not found"});
        ok = false;
      }
    }
    if (ok) methods.push_back(m);
    else result.warnings.push_back("method " + std::string(to_string(m)) + " skipped: missing inputs");
  }
  for (const auto& w : result.warnings) log::warn(w);

  // One subsample per task, drawn from the first model's target labels.
  const auto first = load_embeddings(manifest.resolve(manifest.models.front().embedding_file));
  const auto indices = stratified_indices(first.labels, first.num_classes, result.per_class_cap, result.seed);
  result.samples = indices.size();

  const std::size_t num_models = manifest.models.size();
  const std::size_t num_methods = methods.size();
  std::vector<std::optional<ScoreEntry>> slots(num_models * num_methods);
  std::vector<std::string> job_errors(num_models * num_methods);
  std::vector<std::vector<std::string>> job_notes(num_models * num_methods);

  parallel_for(num_models, config.jobs, [&](std::size_t mi) {
    const auto& model = manifest.models[mi];
    const auto features = detail::load_aligned(manifest, model.embedding_file, first, indices);
    for (std::size_t k = 0; k < num_methods; ++k) {
      const Method method = methods[k];
      const std::size_t slot = mi * num_methods + k;
      if (method == Method::Random) continue;
      try {
        double score = 0.0;
        switch (method) {
          case Method::LFC: score = lfc_score(features, config.pearson); break;
          case Method::LGC: {
            const auto grads = detail::load_aligned(manifest, *model.gradient_file, first, indices);
            score = lgc_score(grads, config.projection_dim, result.seed, config.pearson);
            break;
          }
          case Method::LEEP: {
            const auto probs = detail::load_aligned(manifest, *model.probs_file, first, indices);
            const auto r = leep(probs);
            score = r.score;
            if (r.floor_hits > 0)
              job_notes[slot].push_back(model.name + ": " + std::to_string(r.floor_hits) + " LEEP floor hits");
            if (r.empty_source_classes > 0)
              job_notes[slot].push_back(model.name + ": " + std::to_string(r.empty_source_classes) +
                                        " empty source classes skipped");
            break;
          }
          case Method::RSA: {
            const auto probe = detail::load_aligned(manifest, *model.probe_file, first, indices);
            score = rsa_score(features, probe);
            break;
          }
          case Method::DomSim: {
            const auto source = load_embeddings(manifest.resolve(*model.source_file));
            score = domain_similarity_score(source, features, {config.gamma, config.min_class_count});
            break;
          }
          case Method::FeatMet: {
            const auto r = feature_metrics(features, config.featmet_weights);
            score = r.score;
            if (r.zero_rows > 0)
              job_notes[slot].push_back(model.name + ": " + std::to_string(r.zero_rows) + " zero rows");
            break;
          }
          case Method::Random: break;
        }
        if (!std::isfinite(score)) throw Error(Errc::InvariantViolation, "non-finite score");
        slots[slot] = ScoreEntry{model.name, method, score};
      } catch (const Error& e) {
        job_errors[slot] = e.what();
      }
    }
  });

  std::vector<std::string> names;
  for (const auto& m : manifest.models) names.push_back(m.name);
  const auto accuracies = accuracies_of(manifest);

  for (std::size_t k = 0; k < num_methods; ++k) {
    const Method method = methods[k];
    EvalReport report;
    report.task = manifest.task_name;
    report.method = method;
    if (method == Method::Random) {
      report.scores = random_score(names, result.seed);
    } else {
      bool failed = false;
      for (std::size_t mi = 0; mi < num_models; ++mi) {
        const std::size_t slot = mi * num_methods + k;
        for (auto& note : job_notes[slot]) report.notes.push_back(std::move(note));
        if (!job_errors[slot].empty()) {
          result.skipped.push_back({method, names[mi], job_errors[slot]});
          failed = true;
        } else {
          report.scores.push_back(*slots[slot]);
        }
      }
      if (failed) {
        result.warnings.push_back("method " + std::string(to_string(method)) + " skipped: scoring failed");
        continue;
      }
    }
    if (method == Method::FeatMet && !config.featmet_weights.is_default())
      report.notes.push_back("non-default feature-metric weights");

    report.ranked_models = rank_models(report.scores);
    try {
      report.spearman_to_accuracy = spearman_to_accuracy(report.scores, accuracies);
    } catch (const Error& e) {
      report.notes.push_back(std::string("spearman_to_accuracy unavailable: ") + e.what());
    }
    try {
      report.trials_to_best = trials_to_best(report.scores, accuracies);
    } catch (const Error& e) {
      report.notes.push_back(std::string("trials_to_best unavailable: ") + e.what());
    }
    for (std::size_t kk : config.topk) {
      try {
        report.topk_gain[kk] = topk_gain(report.scores, accuracies, kk, manifest.baseline_model);
      } catch (const Error& e) {
        report.notes.push_back("top-" + std::to_string(kk) + " gain unavailable: " + e.what());
      }
    }
    result.reports.push_back(std::move(report));
  }
  return result;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json score_params_json(const BenchmarkConfig& config, std::uint64_t seed) {
  return {{"k", config.projection_dim},
          {"seed", seed},
          {"gamma", config.gamma},
          {"weights", {config.featmet_weights.dead_fraction, config.featmet_weights.hoyer}}};
}

inline nlohmann::json score_entry_json(const std::string& task, const ScoreEntry& e, const nlohmann::json& params) {
  return {{"task", task}, {"method", to_string(e.method)}, {"model", e.model}, {"score", e.score}, {"params", params}};
}

inline nlohmann::json to_json(const BenchmarkResult& r, const BenchmarkConfig& config) {
  nlohmann::json j;
  j["task"] = r.task;
  j["per_class_cap"] = r.per_class_cap == kUncapped ? nlohmann::json(nullptr) : nlohmann::json(r.per_class_cap);
  j["seed"] = r.seed;
  j["samples"] = r.samples;
  const auto params = score_params_json(config, r.seed);
  j["reports"] = nlohmann::json::array();
  for (const auto& rep : r.reports) {
    nlohmann::json jr;
    jr["task"] = rep.task;
    jr["method"] = to_string(rep.method);
    jr["scores"] = nlohmann::json::array();
    for (const auto& s : rep.scores) jr["scores"].push_back(score_entry_json(r.task, s, params));
    jr["ranked_models"] = rep.ranked_models;
    jr["spearman_to_accuracy"] = rep.spearman_to_accuracy ? nlohmann::json(*rep.spearman_to_accuracy) : nullptr;
    jr["trials_to_best"] = rep.trials_to_best ? nlohmann::json(*rep.trials_to_best) : nullptr;
    nlohmann::json gains = nlohmann::json::object();
    for (const auto& [k, g] : rep.topk_gain) gains[std::to_string(k)] = g;
    jr["topk_gain"] = gains;
    jr["notes"] = rep.notes;
    j["reports"].push_back(std::move(jr));
  }
  j["skipped"] = nlohmann::json::array();
  for (const auto& s : r.skipped)
    j["skipped"].push_back({{"method", to_string(s.method)}, {"model", s.model}, {"reason", s.reason}});
  j["warnings"] = r.warnings;
  return j;
}

/// Per-task reports plus an unweighted mean over tasks (macro average) of
/// each metric, per method.
inline nlohmann::json benchmark_report_json(std::span<const BenchmarkResult> results, const BenchmarkConfig& config) {
  nlohmann::json j;
  j["tasks"] = nlohmann::json::array();
  for (const auto& r : results) j["tasks"].push_back(to_json(r, config));

  nlohmann::json macro = nlohmann::json::object();
  for (Method m : config.methods) {
    double rho = 0.0, trials = 0.0;
    std::size_t n_rho = 0, n_trials = 0;
    std::map<std::size_t, std::pair<double, std::size_t>> gains;
    for (const auto& r : results) {
      const auto* rep = r.report(m);
      if (rep == nullptr) continue;
      if (rep->spearman_to_accuracy) rho += *rep->spearman_to_accuracy, ++n_rho;
      if (rep->trials_to_best) trials += static_cast<double>(*rep->trials_to_best), ++n_trials;
      for (const auto& [k, g] : rep->topk_gain) gains[k].first += g, ++gains[k].second;
    }
    if (n_rho == 0 && n_trials == 0 && gains.empty()) continue;
    nlohmann::json jm;
    jm["tasks"] = std::max(n_rho, n_trials);
    jm["spearman_to_accuracy"] = n_rho ? nlohmann::json(rho / static_cast<double>(n_rho)) : nullptr;
    jm["trials_to_best"] = n_trials ? nlohmann::json(trials / static_cast<double>(n_trials)) : nullptr;
    nlohmann::json jg = nlohmann::json::object();
    for (const auto& [k, v] : gains) jg[std::to_string(k)] = v.first / static_cast<double>(v.second);
    jm["topk_gain"] = jg;
    macro[std::string(to_string(m))] = jm;
  }
  j["macro_average"] = macro;
  return j;
}

/// Text form shared by the CLI and its tests: two-space indent, sorted keys,
/// trailing newline.
inline std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

/// Reads score entries from an array of score_entry_json objects.
inline std::vector<ScoreEntry> score_entries_from_json(const nlohmann::json& j) {
  std::vector<ScoreEntry> out;
  try {
    for (const auto& e : j) {
      const auto name = e.at("method").get<std::string>();
      const auto method = parse_method(name);
      if (!method) throw Error(Errc::InvalidArgument, "unknown method '" + name + "'");
      out.push_back({e.at("model").get<std::string>(), *method, e.at("score").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("malformed score entries: ") + e.what());
  }
  return out;
}

/// Ranking plus whichever accuracy metrics the inputs allow. Unavailable
/// metrics are null with a note.
inline nlohmann::json ranking_json(std::span<const ScoreEntry> scores, const AccuracyMap& accuracies,
                                   std::span<const std::size_t> topk, const std::optional<std::string>& baseline) {
  nlohmann::json j;
  j["ranked_models"] = rank_models(scores);
  std::vector<std::string> notes;
  j["spearman_to_accuracy"] = nullptr;
  j["trials_to_best"] = nullptr;
  try {
    j["spearman_to_accuracy"] = spearman_to_accuracy(scores, accuracies);
  } catch (const Error& e) {
    notes.push_back(std::string("spearman_to_accuracy unavailable: ") + e.what());
  }
  try {
    j["trials_to_best"] = trials_to_best(scores, accuracies);
  } catch (const Error& e) {
    notes.push_back(std::string("trials_to_best unavailable: ") + e.what());
  }
  nlohmann::json gains = nlohmann::json::object();
  if (baseline) {
    for (std::size_t k : topk) {
      try {
        gains[std::to_string(k)] = topk_gain(scores, accuracies, k, *baseline);
      } catch (const Error& e) {
        notes.push_back("top-" + std::to_string(k) + " gain unavailable: " + e.what());
      }
    }
  }
  j["topk_gain"] = gains;
  j["notes"] = notes;
  return j;
}

/// CSV form of score entries: task,method,model,score with full precision.
inline std::string scores_csv(const std::string& task, std::span<const ScoreEntry> scores) {
  std::string out = "task,method,model,score\n";
  char buf[32];
  for (const auto& e : scores) {
    std::snprintf(buf, sizeof buf, "%.17g", e.score);
    out += task + "," + std::string(to_string(e.method)) + "," + e.model + "," + buf + "\n";
  }
  return out;
}

}  // namespace mzsel
