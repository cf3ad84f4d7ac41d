#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "falldet/classifiers.hpp"
#include "falldet/collection.hpp"
#include "falldet/features.hpp"
#include "falldet/roc.hpp"
#include "falldet/svm.hpp"

namespace falldet {

// An RBF width: either a fixed value or the data-driven 1 / (d * mean var)
// computed on the (standardized) training split of each fit.
struct GammaChoice {
  bool scale = false;
  double value = 0.0;

  static GammaChoice automatic() { return {true, 0.0}; }
  static GammaChoice fixed(double v) { return {false, v}; }
  bool operator==(const GammaChoice&) const = default;
};

struct HyperGrid {
  std::vector<std::size_t> k{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> c{0.1, 1.0, 10.0, 100.0};
  std::vector<double> nu{0.01, 0.05, 0.1, 0.2};
  std::vector<GammaChoice> gamma{GammaChoice::automatic(), GammaChoice::fixed(0.01),
                                 GammaChoice::fixed(0.1), GammaChoice::fixed(1.0)};
};

struct ExperimentConfig {
  HyperGrid grid;
  std::size_t inner_folds = kDefaultFolds;
  std::uint64_t seed = 0;
  LtpParams ltp;
  SmoOptions smo;
  unsigned threads = 1;  // outer folds evaluated concurrently
};

struct FoldResult {
  std::size_t fold = 0;
  double auc = 0.0;
  double inner_auc = 0.0;  // mean inner-CV AUC of the chosen hyperparameters
  std::map<std::string, double> hyperparameters;
  std::size_t train_adl = 0;
  std::size_t train_fall = 0;
  std::size_t test_adl = 0;
  std::size_t test_fall = 0;
  // Audit trail: the outer test instances, and a digest of the instances the
  // inner search and the final fit were allowed to see.
  std::vector<std::size_t> test_indices;
  std::string train_digest;
  bool converged = true;
  RocCurve roc;
};

struct EvalReport {
  CollectionId collection = CollectionId::C1;
  FeatureKind feature = FeatureKind::Raw;
  std::size_t window_len = 0;
  Variant variant = Variant::OcKnn;
  std::size_t dimension = 0;
  std::uint64_t seed = 0;
  std::string standardization;
  std::vector<FoldResult> folds;
  double mean_auc = 0.0;      // mean of per-fold AUC
  double averaged_auc = 0.0;  // AUC of the averaged curve
  OperatingPoint operating_point;
  RocCurve averaged_roc;
  std::vector<std::string> notes;
};

// Cuts every instance to window_len (around its peak) and extracts features.
FeatureMatrix extract_matrix(const Collection& collection, FeatureKind kind,
                             std::size_t window_len, const LtpParams& ltp = {});

// Nested CV on a precomputed feature matrix. Fills folds and aggregates only;
// metadata (collection, feature, window) is left to the caller.
EvalReport evaluate(const FeatureMatrix& features, std::span<const Label> labels,
                    const FoldPlan& outer, Variant variant, const ExperimentConfig& config);

EvalReport run_experiment(const Collection& collection, FeatureKind kind,
                          std::size_t window_len, Variant variant,
                          const ExperimentConfig& config);

}  // namespace falldet
