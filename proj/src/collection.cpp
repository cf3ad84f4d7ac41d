#include "falldet/collection.hpp"

#include <algorithm>
#include <unordered_map>

#include "falldet/errors.hpp"
#include "falldet/rng.hpp"

namespace falldet {

namespace {

std::vector<std::size_t> indices_with_label(std::span<const Recording> recs, Label label) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i].label == label) out.push_back(i);
  }
  return out;
}

// Seeded sample of `count` indices, returned in ascending order.
std::vector<std::size_t> sample_indices(std::vector<std::size_t> pool, std::size_t count,
                                        std::uint64_t seed) {
  Rng rng(seed);
  rng.shuffle(pool);
  pool.resize(std::min(count, pool.size()));
  std::sort(pool.begin(), pool.end());
  return pool;
}

void append(Collection& c, std::span<const Recording> recs,
            const std::vector<std::size_t>& which, SourceDataset source) {
  for (std::size_t i : which) {
    c.instances.push_back({recs[i].window, recs[i].label, source, recs[i].source_id});
  }
}

}  // namespace

std::string_view to_string(CollectionId id) {
  switch (id) {
    case CollectionId::C1: return "c1";
    case CollectionId::C2: return "c2";
    case CollectionId::C3: return "c3";
  }
  return "?";
}

std::string_view to_string(SourceDataset source) {
  return source == SourceDataset::D1 ? "D1" : "D2";
}

CollectionId parse_collection_id(std::string_view text) {
  if (text == "c1" || text == "C1" || text == "1") return CollectionId::C1;
  if (text == "c2" || text == "C2" || text == "2") return CollectionId::C2;
  if (text == "c3" || text == "C3" || text == "3") return CollectionId::C3;
  throw InvalidArgument("unknown collection '" + std::string(text) + "'");
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

FoldPlan make_stratified_folds(std::span<const Label> labels, std::size_t num_folds,
                               std::uint64_t seed) {
  if (num_folds == 0) throw InvalidArgument("num_folds must be positive");
  FoldPlan plan;
  plan.num_folds = num_folds;
  plan.seed = seed;
  plan.assignments.assign(labels.size(), 0);

  std::size_t offset = 0;
  for (const Label label : {Label::Adl, Label::Fall}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == label) members.push_back(i);
    }
    Rng rng(derive_seed(seed, "folds", static_cast<std::uint64_t>(label)));
    rng.shuffle(members);
    for (std::size_t p = 0; p < members.size(); ++p) {
      plan.assignments[members[p]] = (offset + p) % num_folds;
    }
    offset = (offset + members.size()) % num_folds;
  }
  return plan;
}

CollectionCounts Collection::counts() const {
  CollectionCounts c;
  for (const auto& inst : instances) {
    if (inst.label == Label::Fall) {
      ++c.fall;
    } else {
      ++c.adl;
      (inst.source == SourceDataset::D1 ? c.adl_d1 : c.adl_d2) += 1;
    }
  }
  return c;
}

std::vector<Label> Collection::labels() const {
  std::vector<Label> out;
  out.reserve(instances.size());
  for (const auto& inst : instances) out.push_back(inst.label);
  return out;
}

Collection build_collection(CollectionId id, std::span<const Recording> d1,
                            std::span<const Recording> d2, std::uint64_t seed,
                            SizeMode mode, std::size_t num_folds) {
  Collection c;
  c.id = id;
  c.seed = seed;

  const auto d1_adl = indices_with_label(d1, Label::Adl);
  const auto d1_fall = indices_with_label(d1, Label::Fall);
  const auto d2_adl = indices_with_label(d2, Label::Adl);
  const std::string name(to_string(id));

  if (d1_fall.empty()) throw InsufficientData(name + ": dataset1 has no FALL instances");

  switch (id) {
    case CollectionId::C1:
      if (d1_adl.empty()) throw InsufficientData(name + ": dataset1 has no ADL instances");
      append(c, d1, d1_adl, SourceDataset::D1);
      break;
    case CollectionId::C2: {
      if (d1_adl.empty() || d2_adl.empty()) {
        throw InsufficientData(name + ": needs ADL from both datasets");
      }
      const std::size_t total = d1_adl.size();
      const std::size_t want_d1 = (total + 1) / 2;
      const std::size_t want_d2 = total / 2;
      if (d2_adl.size() < want_d2) {
        const std::string msg = name + ": dataset2 has " + std::to_string(d2_adl.size()) +
                                " ADL, " + std::to_string(want_d2) + " required";
        if (mode == SizeMode::Strict) throw InsufficientData(msg);
        c.notes.push_back("desk-scale: " + msg);
      }
      append(c, d1, sample_indices(d1_adl, want_d1, derive_seed(seed, "c2-adl-d1")),
             SourceDataset::D1);
      append(c, d2, sample_indices(d2_adl, want_d2, derive_seed(seed, "c2-adl-d2")),
             SourceDataset::D2);
      break;
    }
    case CollectionId::C3:
      if (d2_adl.empty()) throw InsufficientData(name + ": dataset2 has no ADL instances");
      append(c, d2, d2_adl, SourceDataset::D2);
      break;
  }
  append(c, d1, d1_fall, SourceDataset::D1);

  const auto counts = c.counts();
  if (counts.adl < num_folds || counts.fall < num_folds) {
    const std::string msg = name + ": fewer instances per class than folds (" +
                            std::to_string(counts.adl) + " ADL, " +
                            std::to_string(counts.fall) + " FALL)";
    throw InsufficientData(msg);
  }
  const auto labels = c.labels();
  c.folds = make_stratified_folds(labels, num_folds, derive_seed(seed, "outer-folds"));
  return c;
}

nlohmann::json collection_manifest(const Collection& c) {
  nlohmann::json instances = nlohmann::json::array();
  for (std::size_t i = 0; i < c.instances.size(); ++i) {
    const auto& inst = c.instances[i];
    instances.push_back({{"source", to_string(inst.source)},
                         {"source_id", inst.source_id},
                         {"label", to_string(inst.label)},
                         {"fold", c.folds.assignments.at(i)}});
  }
  const auto counts = c.counts();
  return {{"id", to_string(c.id)},
          {"seed", c.seed},
          {"fold_seed", c.folds.seed},
          {"num_folds", c.folds.num_folds},
          {"counts",
           {{"adl", counts.adl},
            {"fall", counts.fall},
            {"adl_d1", counts.adl_d1},
            {"adl_d2", counts.adl_d2}}},
          {"notes", c.notes},
          {"instances", std::move(instances)}};
}

Collection collection_from_manifest(const nlohmann::json& manifest,
                                    std::span<const Recording> d1,
                                    std::span<const Recording> d2) {
  std::unordered_map<std::string, std::size_t> index_d1;
  std::unordered_map<std::string, std::size_t> index_d2;
  for (std::size_t i = 0; i < d1.size(); ++i) index_d1.emplace(d1[i].source_id, i);
  for (std::size_t i = 0; i < d2.size(); ++i) index_d2.emplace(d2[i].source_id, i);

  Collection c;
  try {
    c.id = parse_collection_id(manifest.at("id").get<std::string>());
    c.seed = manifest.at("seed").get<std::uint64_t>();
    c.folds.num_folds = manifest.at("num_folds").get<std::size_t>();
    c.folds.seed = manifest.at("fold_seed").get<std::uint64_t>();
    c.notes = manifest.value("notes", std::vector<std::string>{});
    for (const auto& entry : manifest.at("instances")) {
      const auto source = entry.at("source").get<std::string>() == "D2"
                              ? SourceDataset::D2
                              : SourceDataset::D1;
      const auto id = entry.at("source_id").get<std::string>();
      const auto& index = source == SourceDataset::D1 ? index_d1 : index_d2;
      const auto recs = source == SourceDataset::D1 ? d1 : d2;
      const auto it = index.find(id);
      if (it == index.end()) {
        throw InsufficientData("manifest references missing instance " +
                               std::string(to_string(source)) + ":" + id);
      }
      const Label label = parse_label(entry.at("label").get<std::string>());
      if (recs[it->second].label != label) {
        throw InvalidArgument("label mismatch for instance " + id);
      }
      c.instances.push_back({recs[it->second].window, label, source, id});
      const auto fold = entry.at("fold").get<std::size_t>();
      if (fold >= c.folds.num_folds) throw InvalidArgument("fold index out of range for " + id);
      c.folds.assignments.push_back(fold);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed collection manifest: ") + e.what());
  }
  return c;
}

}  // namespace falldet
