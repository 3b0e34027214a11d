#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mzsel/error.hpp"
#include "mzsel/subsample.hpp"

namespace mzsel {

struct ModelEntry {
  std::string name;
  std::filesystem::path embedding_file;
  std::optional<std::filesystem::path> gradient_file;
  std::optional<std::filesystem::path> probs_file;
  std::optional<std::filesystem::path> probe_file;
  std::optional<std::filesystem::path> source_file;  // source-domain features, for domain similarity
  std::optional<double> finetune_accuracy;            // fraction in [0, 1]

  friend bool operator==(const ModelEntry&, const ModelEntry&) = default;
};

/// A model zoo on one target task. Relative file paths resolve against
/// `base_dir` (the manifest's directory when loaded from disk).
struct ZooManifest {
  std::string task_name;
  std::size_t per_class_cap = kDefaultPerClassCap;
  std::uint64_t seed = 0;
  std::string baseline_model;
  std::vector<ModelEntry> models;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::filesystem::path& p) const {
    return p.is_absolute() ? p : base_dir / p;
  }
  const ModelEntry* find(const std::string& name) const {
    for (const auto& m : models)
      if (m.name == name) return &m;
    return nullptr;
  }

  friend bool operator==(const ZooManifest&, const ZooManifest&) = default;
};

inline void validate(const ZooManifest& manifest) {
  if (manifest.models.empty()) throw Error(Errc::ManifestError, "manifest lists no models");
  if (manifest.per_class_cap == 0) throw Error(Errc::ManifestError, "per_class_cap must be >= 1");
  std::set<std::string> names;
  for (const auto& m : manifest.models) {
    if (m.name.empty()) throw Error(Errc::ManifestError, "model with empty name");
    if (!names.insert(m.name).second) throw Error(Errc::ManifestError, "duplicate model name " + m.name);
    if (m.finetune_accuracy && !(*m.finetune_accuracy >= 0.0 && *m.finetune_accuracy <= 1.0))
      throw Error(Errc::ManifestError, "accuracy of " + m.name + " outside [0, 1]");
  }
  if (!names.contains(manifest.baseline_model))
    throw Error(Errc::ManifestError, "baseline_model '" + manifest.baseline_model + "' is not in models");
}

namespace detail {

template <typename T>
std::optional<T> optional_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace detail

/// Accepts "accuracy_unit": "fraction" (default) or "percent"; percentages
/// are divided by 100 on ingestion.
inline ZooManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  ZooManifest m;
  try {
    m.task_name = j.at("task_name").get<std::string>();
    m.per_class_cap = j.value("per_class_cap", kDefaultPerClassCap);
    m.seed = j.value("seed", std::uint64_t{0});
    m.baseline_model = j.at("baseline_model").get<std::string>();
    const std::string unit = j.value("accuracy_unit", std::string("fraction"));
    double scale = 1.0;
    if (unit == "percent") scale = 0.01;
    else if (unit != "fraction") throw Error(Errc::ManifestError, "accuracy_unit must be 'fraction' or 'percent'");
    for (const auto& jm : j.at("models")) {
      ModelEntry e;
      e.name = jm.at("name").get<std::string>();
      e.embedding_file = jm.at("embedding_file").get<std::string>();
      if (auto p = detail::optional_field<std::string>(jm, "gradient_file")) e.gradient_file = *p;
      if (auto p = detail::optional_field<std::string>(jm, "probs_file")) e.probs_file = *p;
      if (auto p = detail::optional_field<std::string>(jm, "probe_file")) e.probe_file = *p;
      if (auto p = detail::optional_field<std::string>(jm, "source_file")) e.source_file = *p;
      if (auto a = detail::optional_field<double>(jm, "finetune_accuracy")) e.finetune_accuracy = *a * scale;
      m.models.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ManifestError, e.what());
  }
  m.base_dir = base_dir;
  validate(m);
  return m;
}

inline nlohmann::json manifest_to_json(const ZooManifest& m) {
  nlohmann::json j;
  j["task_name"] = m.task_name;
  j["per_class_cap"] = m.per_class_cap;
  j["seed"] = m.seed;
  j["baseline_model"] = m.baseline_model;
  j["accuracy_unit"] = "fraction";
  j["models"] = nlohmann::json::array();
  for (const auto& e : m.models) {
    nlohmann::json jm;
    jm["name"] = e.name;
    jm["embedding_file"] = e.embedding_file.generic_string();
    if (e.gradient_file) jm["gradient_file"] = e.gradient_file->generic_string();
    if (e.probs_file) jm["probs_file"] = e.probs_file->generic_string();
    if (e.probe_file) jm["probe_file"] = e.probe_file->generic_string();
    if (e.source_file) jm["source_file"] = e.source_file->generic_string();
    if (e.finetune_accuracy) jm["finetune_accuracy"] = *e.finetune_accuracy;
    j["models"].push_back(std::move(jm));
  }
  return j;
}

inline ZooManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ManifestError, path.string() + ": " + e.what());
  }
  return manifest_from_json(j, path.parent_path());
}

inline void save_manifest(const ZooManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write manifest " + path.string());
  out << manifest_to_json(m).dump(2) << '\n';
}

}  // namespace mzsel
