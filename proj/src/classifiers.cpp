#include "falldet/classifiers.hpp"

#include <cctype>
#include <string>

#include "falldet/errors.hpp"

namespace falldet {

namespace {

using nlohmann::json;

json matrix_to_json(const FeatureMatrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"cols", m.cols()}, {"rows", std::move(rows)}};
}

FeatureMatrix matrix_from_json(const json& doc) {
  FeatureMatrix m;
  for (const auto& row : doc.at("rows")) m.push_back(row.get<std::vector<double>>());
  if (m.rows() == 0) m = FeatureMatrix(0, doc.at("cols").get<std::size_t>());
  return m;
}

std::string convergence_warning(const SvmModel& m) {
  return m.converged ? std::string()
                     : "ConvergenceWarning: SMO stopped at the iteration cap after " +
                           std::to_string(m.iterations) + " updates";
}

void require_k(std::size_t k, std::size_t available, const char* what) {
  if (k == 0) throw InvalidK("k must be at least 1");
  if (k > available) {
    throw InvalidK("k = " + std::to_string(k) + " exceeds " + std::to_string(available) + " " +
                   what + " training vectors");
  }
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::OcKnn: return "oc-knn";
    case Variant::TcKnn: return "tc-knn";
    case Variant::OcSvm: return "oc-svm";
    case Variant::TcSvm: return "tc-svm";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  std::string t;
  for (char c : text) t += c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "oc-knn" || t == "1-knn") return Variant::OcKnn;
  if (t == "tc-knn" || t == "2-knn") return Variant::TcKnn;
  if (t == "oc-svm" || t == "1-svm") return Variant::OcSvm;
  if (t == "tc-svm" || t == "2-svm") return Variant::TcSvm;
  throw InvalidArgument("unknown classifier '" + std::string(text) + "'");
}

bool is_one_class(Variant v) { return v == Variant::OcKnn || v == Variant::OcSvm; }
bool is_svm(Variant v) { return v == Variant::OcSvm || v == Variant::TcSvm; }

double mean_distance(std::span<const Neighbour> neighbours, std::size_t k) {
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += neighbours[i].distance;
  return s / static_cast<double>(k);
}

double distance_ratio_score(double d_adl, double d_fall) {
  const double total = d_adl + d_fall;
  return total > 0.0 ? d_adl / total : 0.5;
}

double KnnModel::score(std::span<const double> v) const {
  const double d_adl = mean_distance(k_nearest(adl, v, k), k);
  if (fall.empty()) return d_adl;
  return distance_ratio_score(d_adl, mean_distance(k_nearest(fall, v, k), k));
}

TrainedModel::TrainedModel(Variant variant, KnnModel model, TrainingSummary summary)
    : variant_(variant),
      dimension_(model.adl.cols()),
      model_(std::move(model)),
      summary_(std::move(summary)) {}

TrainedModel::TrainedModel(Variant variant, SvmModel model, TrainingSummary summary)
    : variant_(variant),
      dimension_(model.standardizer.mean.size()),
      model_(std::move(model)),
      summary_(std::move(summary)) {}

double TrainedModel::score(std::span<const double> v) const {
  if (v.size() != dimension_) {
    throw DimensionError("model expects dimension " + std::to_string(dimension_) + ", got " +
                         std::to_string(v.size()));
  }
  return std::visit([&](const auto& m) { return m.score(v); }, model_);
}

std::vector<double> TrainedModel::score_batch(const FeatureMatrix& vectors) const {
  std::vector<double> out;
  if (vectors.rows() == 0) return out;
  if (vectors.cols() != dimension_) {
    throw DimensionError("model expects dimension " + std::to_string(dimension_) + ", got " +
                         std::to_string(vectors.cols()));
  }
  out.reserve(vectors.rows());
  for (std::size_t r = 0; r < vectors.rows(); ++r) out.push_back(score(vectors.row(r)));
  return out;
}

json TrainedModel::to_json() const {
  json doc;
  doc["variant"] = to_string(variant_);
  doc["dimension"] = dimension_;
  doc["summary"] = {{"adl_count", summary_.adl_count},
                    {"fall_count", summary_.fall_count},
                    {"hyperparameters", summary_.hyperparameters},
                    {"iterations", summary_.iterations},
                    {"converged", summary_.converged},
                    {"warning", summary_.warning}};
  if (const auto* k = knn()) {
    doc["knn"] = {{"k", k->k}, {"distance", "euclidean"}, {"adl", matrix_to_json(k->adl)},
                  {"fall", matrix_to_json(k->fall)}};
  } else if (const auto* s = svm()) {
    doc["svm"] = {{"kind", s->kind == SvmKind::TwoClass ? "two-class" : "one-class"},
                  {"kernel", "rbf"},
                  {"gamma", s->gamma},
                  {"c", s->c},
                  {"nu", s->nu},
                  {"standardizer", {{"mean", s->standardizer.mean}, {"scale", s->standardizer.scale}}},
                  {"support_vectors", matrix_to_json(s->support_vectors)},
                  {"support_indices", s->support_indices},
                  {"alpha", s->alpha},
                  {"coef", s->coef},
                  {"bias", s->bias},
                  {"iterations", s->iterations},
                  {"converged", s->converged}};
  }
  return doc;
}

TrainedModel TrainedModel::from_json(const json& doc) {
  try {
    const Variant variant = parse_variant(doc.at("variant").get<std::string>());
    const auto& js = doc.at("summary");
    TrainingSummary summary;
    summary.adl_count = js.at("adl_count").get<std::size_t>();
    summary.fall_count = js.at("fall_count").get<std::size_t>();
    summary.hyperparameters = js.at("hyperparameters").get<std::map<std::string, double>>();
    summary.iterations = js.at("iterations").get<std::size_t>();
    summary.converged = js.at("converged").get<bool>();
    summary.warning = js.at("warning").get<std::string>();
    if (is_svm(variant)) {
      const auto& s = doc.at("svm");
      SvmModel m;
      m.kind = s.at("kind").get<std::string>() == "two-class" ? SvmKind::TwoClass
                                                              : SvmKind::OneClass;
      m.gamma = s.at("gamma").get<double>();
      m.c = s.at("c").get<double>();
      m.nu = s.at("nu").get<double>();
      m.standardizer.mean = s.at("standardizer").at("mean").get<std::vector<double>>();
      m.standardizer.scale = s.at("standardizer").at("scale").get<std::vector<double>>();
      m.support_vectors = matrix_from_json(s.at("support_vectors"));
      m.support_indices = s.at("support_indices").get<std::vector<std::size_t>>();
      m.alpha = s.at("alpha").get<std::vector<double>>();
      m.coef = s.at("coef").get<std::vector<double>>();
      m.bias = s.at("bias").get<double>();
      m.iterations = s.at("iterations").get<std::size_t>();
      m.converged = s.at("converged").get<bool>();
      return TrainedModel(variant, std::move(m), std::move(summary));
    }
    const auto& k = doc.at("knn");
    KnnModel m;
    m.k = k.at("k").get<std::size_t>();
    m.adl = matrix_from_json(k.at("adl"));
    m.fall = matrix_from_json(k.at("fall"));
    return TrainedModel(variant, std::move(m), std::move(summary));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed model document: ") + e.what());
  }
}

TrainedModel train_oc_knn(const FeatureMatrix& adl, std::size_t k) {
  require_k(k, adl.rows(), "ADL");
  TrainingSummary summary;
  summary.adl_count = adl.rows();
  summary.hyperparameters["k"] = static_cast<double>(k);
  return TrainedModel(Variant::OcKnn, KnnModel{k, adl, FeatureMatrix(0, adl.cols())},
                      std::move(summary));
}

TrainedModel train_tc_knn(const FeatureMatrix& x, std::span<const Label> labels, std::size_t k) {
  if (labels.size() != x.rows()) throw DimensionError("labels and vectors differ in count");
  std::vector<std::size_t> adl_rows, fall_rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == Label::Fall ? fall_rows : adl_rows).push_back(i);
  }
  require_k(k, adl_rows.size(), "ADL");
  require_k(k, fall_rows.size(), "FALL");
  TrainingSummary summary;
  summary.adl_count = adl_rows.size();
  summary.fall_count = fall_rows.size();
  summary.hyperparameters["k"] = static_cast<double>(k);
  return TrainedModel(Variant::TcKnn, KnnModel{k, x.select(adl_rows), x.select(fall_rows)},
                      std::move(summary));
}

TrainedModel train_tc_svm(const FeatureMatrix& x, std::span<const Label> labels, double c,
                          double gamma, const SmoOptions& options) {
  SvmModel m = fit_tc_svm(x, labels, c, gamma, options);
  TrainingSummary summary;
  for (Label l : labels) (l == Label::Fall ? summary.fall_count : summary.adl_count) += 1;
  summary.hyperparameters = {{"C", c}, {"gamma", gamma}};
  summary.iterations = m.iterations;
  summary.converged = m.converged;
  summary.warning = convergence_warning(m);
  return TrainedModel(Variant::TcSvm, std::move(m), std::move(summary));
}

TrainedModel train_oc_svm(const FeatureMatrix& adl, double nu, double gamma,
                          const SmoOptions& options) {
  SvmModel m = fit_oc_svm(adl, nu, gamma, options);
  TrainingSummary summary;
  summary.adl_count = adl.rows();
  summary.hyperparameters = {{"nu", nu}, {"gamma", gamma}};
  summary.iterations = m.iterations;
  summary.converged = m.converged;
  summary.warning = convergence_warning(m);
  return TrainedModel(Variant::OcSvm, std::move(m), std::move(summary));
}

}  // namespace falldet
