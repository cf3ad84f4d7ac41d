#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "falldet/collection.hpp"
#include "falldet/experiment.hpp"

namespace falldet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCellFailure = 1;
inline constexpr int kExitInputError = 2;

// Resolved settings for every subcommand. Precedence: command-line flags over
// the --config document over these defaults.
struct Settings {
  std::optional<std::filesystem::path> dataset1;
  std::optional<std::filesystem::path> dataset2;
  std::uint64_t seed = 0;
  std::vector<CollectionId> collections;  // empty: every buildable collection
  std::vector<FeatureKind> features{FeatureKind::Raw, FeatureKind::Magnitude,
                                    FeatureKind::AccelFeatures, FeatureKind::Ltp};
  std::vector<std::size_t> windows{128, 51};
  std::vector<Variant> classifiers{std::begin(kAllVariants), std::end(kAllVariants)};
  unsigned jobs = 1;
  std::filesystem::path out = "out";
  SizeMode size_mode = SizeMode::DeskScale;
  std::size_t folds = kDefaultFolds;
  ExperimentConfig experiment;
  bool export_features = false;  // run: also write features/<collection>_<feature>_<window>.csv

  // synth only
  std::size_t synth_adl = 200;
  std::size_t synth_falls = 20;
  std::size_t synth_dataset2 = 0;

  nlohmann::json to_json() const;
  // Overlays the keys present in doc. A stored run.json is accepted too: its
  // "config" member is used.
  void apply_json(const nlohmann::json& doc);
};

// SHA-256 over a file, or over every regular file below a directory (sorted
// relative path and content).
std::string sha256_path(const std::filesystem::path& path);

int run(int argc, const char* const* argv);

}  // namespace falldet::cli
