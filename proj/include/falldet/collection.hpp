#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "falldet/ingest.hpp"

namespace falldet {

enum class CollectionId : unsigned char { C1, C2, C3 };
enum class SourceDataset : unsigned char { D1, D2 };

std::string_view to_string(CollectionId id);
std::string_view to_string(SourceDataset source);
CollectionId parse_collection_id(std::string_view text);

inline constexpr std::size_t kDefaultFolds = 10;

// Stratified assignment of instances to folds.
struct FoldPlan {
  std::size_t num_folds = kDefaultFolds;
  std::vector<std::size_t> assignments;  // instance index -> fold index
  std::uint64_t seed = 0;

  std::vector<std::size_t> test_indices(std::size_t fold) const;
  std::vector<std::size_t> train_indices(std::size_t fold) const;
};

// Per class: seeded Fisher-Yates shuffle, then round-robin over folds. The
// FALL round-robin starts where the ADL one stopped so total fold sizes stay
// within one of each other as well.
FoldPlan make_stratified_folds(std::span<const Label> labels, std::size_t num_folds,
                               std::uint64_t seed);

struct Instance {
  TriaxialWindow window;
  Label label = Label::Adl;
  SourceDataset source = SourceDataset::D1;
  std::string source_id;
};

// Strict mode requires the published count relations (C2 needs enough
// dataset2 ADL to fill its half). Desk-scale mode takes whatever is available
// and records the shortfall in Collection::notes.
enum class SizeMode : unsigned char { Strict, DeskScale };

struct CollectionCounts {
  std::size_t adl = 0;
  std::size_t fall = 0;
  std::size_t adl_d1 = 0;
  std::size_t adl_d2 = 0;
};

struct Collection {
  CollectionId id = CollectionId::C1;
  std::uint64_t seed = 0;
  std::vector<Instance> instances;
  FoldPlan folds;
  std::vector<std::string> notes;

  CollectionCounts counts() const;
  std::vector<Label> labels() const;
};

// C1: every dataset1 instance. C2: dataset1 FALL; ADL of the same total size
// as dataset1 ADL, half (rounded up) sampled from dataset1 and half from
// dataset2. C3: dataset2 ADL and dataset1 FALL.
Collection build_collection(CollectionId id, std::span<const Recording> d1,
                            std::span<const Recording> d2, std::uint64_t seed,
                            SizeMode mode = SizeMode::DeskScale,
                            std::size_t num_folds = kDefaultFolds);

// Replayable manifest: {id, seed, num_folds, instances: [{source, source_id,
// label, fold}], notes}.
nlohmann::json collection_manifest(const Collection& collection);

// Rebuilds a collection from a manifest by looking each instance up by
// provenance in the parsed datasets. Throws InsufficientData on a missing id.
Collection collection_from_manifest(const nlohmann::json& manifest,
                                    std::span<const Recording> d1,
                                    std::span<const Recording> d2);

}  // namespace falldet
