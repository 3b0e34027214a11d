// mzsel command-line interface: a thin shell over the header library.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mzsel/mzsel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> method_names() {
  std::vector<std::string> out;
  for (auto m : mzsel::kAllMethods) out.emplace_back(mzsel::to_string(m));
  return out;
}

std::optional<std::size_t> parse_cap(const std::string& s) {
  if (s == "inf") return mzsel::kUncapped;
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos == s.size() && v > 0) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

const CLI::Validator kCapValidator(
    [](std::string& s) { return parse_cap(s) ? std::string() : "expected a positive integer or 'inf', got '" + s + "'"; },
    "INT|inf", "per-class cap");

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw mzsel::Error(mzsel::Errc::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw mzsel::Error(mzsel::Errc::IoError, "write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw mzsel::Error(mzsel::Errc::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw mzsel::Error(mzsel::Errc::InvalidArgument, path.string() + ": " + e.what());
  }
}

// Machine-readable output goes to --out when given, else to stdout.
void emit(const std::string& out_path, const std::string& text, const std::string& summary) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text(out_path, text);
    std::cout << summary;
  }
}

struct ScoreArgs {
  std::string method;
  std::string embeddings, gradients, probs, probe, source;
  std::vector<std::string> models;
  std::string model, task = "cli";
  std::size_t k = mzsel::kDefaultProjectionDim;
  std::uint64_t seed = 0;
  double gamma = mzsel::kDefaultDomSimGamma;
  std::vector<double> weights{0.5, 0.5};
  std::size_t min_class_count = mzsel::kDefaultMinClassCount;
  std::string cap;
  std::string out, format = "json";
};

struct RankArgs {
  std::vector<std::string> scores;
  std::string accuracies, baseline;
  std::vector<std::size_t> topk{1, 3};
  std::string out, format = "json";
};

struct EvalArgs {
  std::vector<std::string> manifests;
  std::vector<std::string> methods = method_names();
  std::string cap;
  std::optional<std::uint64_t> seed;
  std::vector<std::size_t> topk{1, 3};
  std::size_t k = mzsel::kDefaultProjectionDim;
  double gamma = mzsel::kDefaultDomSimGamma;
  std::vector<double> weights{0.5, 0.5};
  std::size_t min_class_count = mzsel::kDefaultMinClassCount;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  std::string out, format = "json";
};

struct SimulateArgs {
  std::string gradients, residual;
  mzsel::SimulateOptions opts;
  std::optional<double> eig_floor, oracle_step;
  std::string out, summary;
};

struct ProjectArgs {
  std::string in, out;
  std::size_t k = mzsel::kDefaultProjectionDim;
  std::uint64_t seed = 0;
};

struct SubsampleArgs {
  std::string in, out, cap = "25";
  std::uint64_t seed = 0;
};

struct SynthArgs {
  std::string out_dir;
  std::size_t models = 8;
  std::vector<double> alignment;
  mzsel::SynthConfig cfg;
};

struct InspectArgs {
  std::string path, out;
};

mzsel::FeatureMetricWeights make_weights(const std::vector<double>& w) { return {w.at(0), w.at(1)}; }

int run_score(const ScoreArgs& a) {
  using mzsel::Method;
  const Method method = *mzsel::parse_method(a.method);
  auto require = [&](const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string(flag) + " is required for --method " + a.method);
  };

  mzsel::BenchmarkConfig config;
  config.projection_dim = a.k;
  config.gamma = a.gamma;
  config.featmet_weights = make_weights(a.weights);
  const auto params = mzsel::score_params_json(config, a.seed);

  std::vector<mzsel::ScoreEntry> entries;
  if (method == Method::Random) {
    if (a.models.empty()) throw UsageError("--models is required for --method random");
    entries = mzsel::random_score(a.models, a.seed);
  } else {
    std::string primary_flag = "--embeddings";
    std::string primary = a.embeddings;
    switch (method) {
      case Method::LGC: primary_flag = "--gradients", primary = a.gradients; break;
      case Method::LEEP: primary_flag = "--probs", primary = a.probs; break;
      case Method::RSA: require(a.probe, "--probe"); break;
      case Method::DomSim: require(a.source, "--source"); break;
      default: break;
    }
    require(primary, primary_flag.c_str());

    auto set = mzsel::load_embeddings(primary);
    std::vector<std::size_t> indices;
    if (!a.cap.empty()) {
      indices = mzsel::stratified_indices(set.labels, set.num_classes, *parse_cap(a.cap), a.seed);
      set = mzsel::take_rows(set, indices);
    }
    auto aligned = [&](const std::string& path) {
      auto other = mzsel::load_embeddings(path);
      return a.cap.empty() ? other : mzsel::take_rows(other, indices);
    };

    double score = 0.0;
    switch (method) {
      case Method::LFC: score = mzsel::lfc_score(set); break;
      case Method::LGC: score = mzsel::lgc_score(set, a.k, a.seed); break;
      case Method::LEEP: score = mzsel::leep_score(set); break;
      case Method::RSA: score = mzsel::rsa_score(set, aligned(a.probe)); break;
      case Method::DomSim:
        score = mzsel::domain_similarity_score(mzsel::load_embeddings(a.source), set, {a.gamma, a.min_class_count});
        break;
      case Method::FeatMet: score = mzsel::feature_metrics_score(set, make_weights(a.weights)); break;
      case Method::Random: break;
    }
    const std::string name = a.model.empty() ? fs::path(primary).stem().string() : a.model;
    entries.push_back({name, method, score});
  }

  std::string text;
  if (a.format == "csv") {
    text = mzsel::scores_csv(a.task, entries);
  } else {
    json j = json::array();
    for (const auto& e : entries) j.push_back(mzsel::score_entry_json(a.task, e, params));
    text = mzsel::json_text(j);
  }
  std::string summary;
  for (const auto& e : entries) summary += std::string(mzsel::to_string(e.method)) + " " + e.model + " " + std::to_string(e.score) + "\n";
  emit(a.out, text, summary);
  return kExitOk;
}

int run_rank(const RankArgs& a) {
  std::vector<mzsel::ScoreEntry> scores;
  for (const auto& path : a.scores) {
    auto more = mzsel::score_entries_from_json(read_json(path));
    scores.insert(scores.end(), more.begin(), more.end());
  }
  mzsel::AccuracyMap acc;
  if (!a.accuracies.empty()) {
    try {
      acc = read_json(a.accuracies).get<mzsel::AccuracyMap>();
    } catch (const json::exception& e) {
      throw mzsel::Error(mzsel::Errc::InvalidArgument, a.accuracies + ": expected {model: accuracy}: " + e.what());
    }
  }
  const std::optional<std::string> baseline = a.baseline.empty() ? std::nullopt : std::optional(a.baseline);
  const auto j = mzsel::ranking_json(scores, acc, a.topk, baseline);

  std::string text;
  if (a.format == "csv") {
    text = "rank,model\n";
    std::size_t r = 0;
    for (const auto& m : j["ranked_models"]) text += std::to_string(++r) + "," + m.get<std::string>() + "\n";
  } else {
    text = mzsel::json_text(j);
  }
  std::string summary;
  std::size_t r = 0;
  for (const auto& m : j["ranked_models"]) summary += std::to_string(++r) + ". " + m.get<std::string>() + "\n";
  emit(a.out, text, summary);
  return kExitOk;
}

int run_eval(const EvalArgs& a) {
  mzsel::BenchmarkConfig config;
  config.methods.clear();
  for (const auto& m : a.methods) config.methods.push_back(*mzsel::parse_method(m));
  if (!a.cap.empty()) config.per_class_cap = *parse_cap(a.cap);
  config.seed = a.seed;
  config.topk = a.topk;
  config.projection_dim = a.k;
  config.gamma = a.gamma;
  config.featmet_weights = make_weights(a.weights);
  config.min_class_count = a.min_class_count;
  config.jobs = a.jobs;

  std::vector<mzsel::BenchmarkResult> results;
  for (const auto& path : a.manifests) results.push_back(mzsel::run_benchmark(mzsel::load_manifest(path), config));

  bool degraded = false;
  for (const auto& r : results) degraded = degraded || r.degraded();

  std::string text;
  if (a.format == "csv") {
    text = "task,method,model,score\n";
    for (const auto& r : results)
      for (const auto& rep : r.reports) {
        const auto csv = mzsel::scores_csv(r.task, rep.scores);
        text += csv.substr(csv.find('\n') + 1);
      }
  } else {
    text = mzsel::json_text(mzsel::benchmark_report_json(results, config));
  }

  std::string summary;
  for (const auto& r : results) {
    summary += r.task + " (" + std::to_string(r.samples) + " samples)\n";
    for (const auto& rep : r.reports) {
      summary += "  " + std::string(mzsel::to_string(rep.method)) + ": spearman=" +
                 (rep.spearman_to_accuracy ? std::to_string(*rep.spearman_to_accuracy) : "n/a") +
                 " trials=" + (rep.trials_to_best ? std::to_string(*rep.trials_to_best) : "n/a") + "\n";
    }
    for (const auto& s : r.skipped)
      summary += "  skipped " + std::string(mzsel::to_string(s.method)) + " for " + s.model + ": " + s.reason + "\n";
  }
  emit(a.out, text, summary);
  return degraded ? kExitPartial : kExitOk;
}

int run_simulate(SimulateArgs a) {
  a.opts.eig_floor = a.eig_floor;
  a.opts.oracle_step = a.oracle_step;
  mzsel::validate(a.opts);
  const auto jac = mzsel::load_embeddings(a.gradients);
  std::optional<mzsel::EmbeddingSet> outputs;
  if (!a.residual.empty()) outputs = mzsel::load_embeddings(a.residual);
  const auto result = mzsel::simulate(jac, outputs ? &*outputs : nullptr, a.opts);
  const auto summary = mzsel::json_text(result.summary_json);
  if (!a.summary.empty()) write_text(a.summary, summary);
  emit(a.out, result.csv, a.summary.empty() ? summary : "");
  return kExitOk;
}

int run_project(const ProjectArgs& a) {
  const auto projected = mzsel::random_projection(mzsel::load_embeddings(a.in), a.k, a.seed);
  mzsel::save_embeddings(projected, a.out);
  std::cout << "projected " << projected.n << " rows to " << projected.d << " dimensions\n";
  return kExitOk;
}

int run_subsample(const SubsampleArgs& a) {
  const auto sub = mzsel::stratified_subsample(mzsel::load_embeddings(a.in), *parse_cap(a.cap), a.seed);
  mzsel::save_embeddings(sub, a.out);
  std::cout << "kept " << sub.n << " rows\n";
  return kExitOk;
}

int run_synth(SynthArgs a) {
  a.cfg.alignment_spectrum = a.alignment.empty() ? mzsel::default_alignment_spectrum(a.models) : a.alignment;
  const auto manifest = mzsel::gen_synthetic_zoo(a.cfg, a.out_dir);
  std::cout << "wrote " << manifest.models.size() << " models to " << (fs::path(a.out_dir) / "manifest.json").string()
            << "\n";
  return kExitOk;
}

int run_inspect(const InspectArgs& a) {
  const auto j = mzsel::inspect_file(a.path);
  if (!a.out.empty()) write_text(a.out, mzsel::json_text(j));
  for (const auto& [key, value] : j.items()) std::cout << key << ": " << value.dump() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-zoo transferability scoring and evaluation"};
  app.require_subcommand(1);
  const auto methods = method_names();
  const std::vector<std::string> formats{"json", "csv"};
  std::function<int()> action;

  ScoreArgs score;
  auto* sc = app.add_subcommand("score", "score one model with one method");
  sc->add_option("--method", score.method, "scoring method")->required()->check(CLI::IsMember(methods));
  sc->add_option("--embeddings", score.embeddings, "target features file");
  sc->add_option("--gradients", score.gradients, "target gradients file (lgc)");
  sc->add_option("--probs", score.probs, "source-label probabilities file (leep)");
  sc->add_option("--probe", score.probe, "probe-model features file (rsa)");
  sc->add_option("--source", score.source, "source-domain features file (domsim)");
  sc->add_option("--models", score.models, "model names (random)")->delimiter(',');
  sc->add_option("--model", score.model, "model name in the output (default: file stem)");
  sc->add_option("--task", score.task, "task name in the output");
  sc->add_option("--k", score.k, "projection dimension (lgc)")->check(CLI::PositiveNumber);
  sc->add_option("--seed", score.seed, "random seed");
  sc->add_option("--gamma", score.gamma, "domain-similarity scale")->check(CLI::PositiveNumber);
  sc->add_option("--weights", score.weights, "feature-metric weights dead,hoyer")->delimiter(',')->expected(2);
  sc->add_option("--min-class-count", score.min_class_count, "minimum samples per class (domsim)")
      ->check(CLI::PositiveNumber);
  sc->add_option("--per-class-cap", score.cap, "subsample before scoring")->check(kCapValidator);
  sc->add_option("--out", score.out, "output path");
  sc->add_option("--format", score.format, "json or csv")->check(CLI::IsMember(formats));
  sc->callback([&] { action = [&] { return run_score(score); }; });

  RankArgs rank;
  auto* rk = app.add_subcommand("rank", "rank models from score files");
  rk->add_option("--scores", rank.scores, "score JSON files (from score)")->required();
  rk->add_option("--accuracies", rank.accuracies, "JSON object {model: accuracy}");
  rk->add_option("--baseline", rank.baseline, "baseline model for top-k gain");
  rk->add_option("--topk", rank.topk, "top-k list")->delimiter(',')->check(CLI::PositiveNumber);
  rk->add_option("--out", rank.out, "output path");
  rk->add_option("--format", rank.format, "json or csv")->check(CLI::IsMember(formats));
  rk->callback([&] { action = [&] { return run_rank(rank); }; });

  EvalArgs eval;
  auto* ev = app.add_subcommand("eval", "run the benchmark on one or more manifests");
  ev->add_option("--manifest", eval.manifests, "manifest path (repeatable)")->required();
  ev->add_option("--methods", eval.methods, "methods to run")->delimiter(',')->check(CLI::IsMember(methods));
  ev->add_option("--per-class-cap", eval.cap, "override the manifest cap")->check(kCapValidator);
  ev->add_option("--seed", eval.seed, "override the manifest seed");
  ev->add_option("--topk", eval.topk, "top-k list")->delimiter(',')->check(CLI::PositiveNumber);
  ev->add_option("--k", eval.k, "projection dimension (lgc)")->check(CLI::PositiveNumber);
  ev->add_option("--gamma", eval.gamma, "domain-similarity scale")->check(CLI::PositiveNumber);
  ev->add_option("--weights", eval.weights, "feature-metric weights dead,hoyer")->delimiter(',')->expected(2);
  ev->add_option("--min-class-count", eval.min_class_count, "minimum samples per class (domsim)")
      ->check(CLI::PositiveNumber);
  ev->add_option("--jobs", eval.jobs, "worker threads")->check(CLI::PositiveNumber);
  ev->add_option("--out", eval.out, "report path");
  ev->add_option("--format", eval.format, "json or csv")->check(CLI::IsMember(formats));
  ev->callback([&] { action = [&] { return run_eval(eval); }; });

  SimulateArgs sim;
  auto* si = app.add_subcommand("simulate", "linearized training dynamics of a gradient file");
  si->add_option("--gradients", sim.gradients, "per-sample gradients (Jacobian rows)")->required();
  si->add_option("--residual", sim.residual, "initial outputs f0, one column per target");
  si->add_option("--eta", sim.opts.eta, "learning rate")->check(CLI::PositiveNumber);
  si->add_option("--eig-floor", sim.eig_floor, "absolute eigenvalue floor")->check(CLI::PositiveNumber);
  si->add_option("--t-max", sim.opts.t_max, "last time point")->check(CLI::NonNegativeNumber);
  si->add_option("--points", sim.opts.points, "number of time points")->check(CLI::Range(2, 1000000));
  si->add_option("--oracle-step", sim.oracle_step, "add a gradient-descent column with this step")
      ->check(CLI::PositiveNumber);
  si->add_option("--out", sim.out, "trajectory CSV path");
  si->add_option("--summary", sim.summary, "summary JSON path");
  si->callback([&] { action = [&] { return run_simulate(sim); }; });

  ProjectArgs proj;
  auto* pr = app.add_subcommand("project", "Gaussian random projection of an embedding file");
  pr->add_option("--in", proj.in, "input file")->required();
  pr->add_option("--out", proj.out, "output file")->required();
  pr->add_option("--k", proj.k, "target dimension")->check(CLI::PositiveNumber);
  pr->add_option("--seed", proj.seed, "random seed");
  pr->callback([&] { action = [&] { return run_project(proj); }; });

  SubsampleArgs sub;
  auto* ss = app.add_subcommand("subsample", "stratified per-class subsample");
  ss->add_option("--in", sub.in, "input file")->required();
  ss->add_option("--out", sub.out, "output file")->required();
  ss->add_option("--per-class-cap", sub.cap, "samples kept per class")->check(kCapValidator);
  ss->add_option("--seed", sub.seed, "random seed");
  ss->callback([&] { action = [&] { return run_subsample(sub); }; });

  SynthArgs syn;
  auto* sy = app.add_subcommand("synth", "write a synthetic model zoo with a planted ranking");
  sy->add_option("--out-dir", syn.out_dir, "output directory")->required();
  sy->add_option("--models", syn.models, "number of models")->check(CLI::PositiveNumber);
  sy->add_option("--alignment", syn.alignment, "per-model alignment in [0, 1]")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.0));
  sy->add_option("--task", syn.cfg.task_name, "task name");
  sy->add_option("--classes", syn.cfg.n_classes, "number of classes")->check(CLI::Range(2, 100000));
  sy->add_option("--per-class", syn.cfg.per_class, "samples per class")->check(CLI::PositiveNumber);
  sy->add_option("--dim", syn.cfg.dim, "feature dimension")->check(CLI::PositiveNumber);
  sy->add_option("--grad-dim", syn.cfg.grad_dim, "gradient dimension")->check(CLI::PositiveNumber);
  sy->add_option("--probe-dim", syn.cfg.probe_dim, "probe feature dimension")->check(CLI::PositiveNumber);
  sy->add_option("--noise", syn.cfg.noise, "noise scale")->check(CLI::NonNegativeNumber);
  sy->add_option("--separation", syn.cfg.separation, "class separation")->check(CLI::NonNegativeNumber);
  sy->add_option("--per-class-cap", syn.cfg.per_class_cap, "cap written to the manifest")->check(CLI::PositiveNumber);
  sy->add_option("--seed", syn.cfg.seed, "random seed");
  sy->callback([&] { action = [&] { return run_synth(syn); }; });

  InspectArgs ins;
  auto* in = app.add_subcommand("inspect", "summarize a wire-format file");
  in->add_option("path", ins.path, "file to inspect")->required();
  in->add_option("--out", ins.out, "summary JSON path");
  in->callback([&] { action = [&] { return run_inspect(ins); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitError;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
  } catch (const mzsel::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kExitError;
}
