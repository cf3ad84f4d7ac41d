#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "falldet/experiment.hpp"

namespace falldet {

// Writes to "<path>.tmp" and renames over path, creating parent directories.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

// Non-finite thresholds are stored as null and read back as +inf.
nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc);

// "fpr,tpr,threshold" rows of the averaged curve.
std::string roc_csv(const RocCurve& curve);

// One instance per row ("f0,...,f<d-1>,label"), values at full precision.
std::string feature_matrix_csv(const FeatureMatrix& features, std::span<const Label> labels);

// Stable file stem for a cell, e.g. "c1_raw_128_tc-svm".
std::string cell_name(CollectionId c, FeatureKind f, std::size_t window, Variant v);

struct SummaryRow {
  CollectionId collection = CollectionId::C1;
  std::size_t window = 0;
  FeatureKind feature = FeatureKind::Raw;
  Variant variant = Variant::OcKnn;
  double auc = 0.0;
  double se = 0.0;
  double sp = 0.0;
  double gm = 0.0;
  std::string error;  // non-empty for a failed cell
};

SummaryRow summary_row(const EvalReport& report);

// Orders rows as the published tables: window (128 before 51), collection,
// feature (raw, magnitude, accel, ltp), classifier (oc-knn, tc-knn, oc-svm,
// tc-svm).
void sort_summary(std::vector<SummaryRow>& rows);

std::string summary_csv(const std::vector<SummaryRow>& rows);
nlohmann::json summary_json(const std::vector<SummaryRow>& rows);

}  // namespace falldet
