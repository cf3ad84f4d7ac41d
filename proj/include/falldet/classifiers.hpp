#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "falldet/ingest.hpp"
#include "falldet/knn.hpp"
#include "falldet/svm.hpp"

namespace falldet {

enum class Variant : unsigned char { OcKnn, TcKnn, OcSvm, TcSvm };

inline constexpr Variant kAllVariants[] = {Variant::OcKnn, Variant::TcKnn, Variant::OcSvm,
                                           Variant::TcSvm};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);
bool is_one_class(Variant v);
bool is_svm(Variant v);

// Mean of the first k neighbour distances.
double mean_distance(std::span<const Neighbour> neighbours, std::size_t k);

// dA / (dA + dF); 0.5 when both are zero.
double distance_ratio_score(double d_adl, double d_fall);

struct KnnModel {
  std::size_t k = 1;
  FeatureMatrix adl;
  FeatureMatrix fall;  // empty for the one-class variant

  double score(std::span<const double> v) const;
};

struct TrainingSummary {
  std::size_t adl_count = 0;
  std::size_t fall_count = 0;
  std::map<std::string, double> hyperparameters;
  std::size_t iterations = 0;
  bool converged = true;
  std::string warning;
};

// Uniform scoring interface over the four variants; higher means more
// fall-like. Immutable once trained, so concurrent scoring is safe.
class TrainedModel {
 public:
  TrainedModel(Variant variant, KnnModel model, TrainingSummary summary);
  TrainedModel(Variant variant, SvmModel model, TrainingSummary summary);

  Variant variant() const noexcept { return variant_; }
  std::size_t dimension() const noexcept { return dimension_; }
  const TrainingSummary& summary() const noexcept { return summary_; }
  const KnnModel* knn() const { return std::get_if<KnnModel>(&model_); }
  const SvmModel* svm() const { return std::get_if<SvmModel>(&model_); }

  double score(std::span<const double> v) const;
  std::vector<double> score_batch(const FeatureMatrix& vectors) const;

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& doc);

 private:
  Variant variant_;
  std::size_t dimension_ = 0;
  std::variant<KnnModel, SvmModel> model_;
  TrainingSummary summary_;
};

TrainedModel train_oc_knn(const FeatureMatrix& adl, std::size_t k);
TrainedModel train_tc_knn(const FeatureMatrix& x, std::span<const Label> labels, std::size_t k);
TrainedModel train_tc_svm(const FeatureMatrix& x, std::span<const Label> labels, double c,
                          double gamma, const SmoOptions& options = {});
TrainedModel train_oc_svm(const FeatureMatrix& adl, double nu, double gamma,
                          const SmoOptions& options = {});

}  // namespace falldet
