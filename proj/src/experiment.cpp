#include "falldet/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

#include "falldet/errors.hpp"
#include "falldet/rng.hpp"

namespace falldet {

namespace {

struct Params {
  std::size_t k = 0;
  double reg = 0.0;  // C (two-class) or nu (one-class)
  GammaChoice gamma;
};

// Training view of a split: one-class variants only ever see ADL rows.
struct TrainSet {
  FeatureMatrix x;
  std::vector<Label> labels;
  std::size_t adl = 0;
  std::size_t fall = 0;
};

TrainSet make_train_set(const FeatureMatrix& features, std::span<const Label> labels,
                        std::span<const std::size_t> rows, Variant variant) {
  TrainSet t;
  std::vector<std::size_t> keep;
  for (std::size_t r : rows) {
    if (labels[r] == Label::Fall) {
      ++t.fall;
      if (is_one_class(variant)) continue;
    } else {
      ++t.adl;
    }
    keep.push_back(r);
    t.labels.push_back(labels[r]);
  }
  t.x = features.select(keep);
  return t;
}

std::optional<double> split_auc(std::span<const double> scores, std::span<const Label> labels) {
  bool pos = false, neg = false;
  for (Label l : labels) (l == Label::Fall ? pos : neg) = true;
  if (!pos || !neg) return std::nullopt;
  return auc(roc_curve(scores, labels));
}

double resolve_gamma(const GammaChoice& g, const FeatureMatrix& x) {
  if (!g.scale) return g.value;
  return scale_gamma(Standardizer::fit(x).apply(x));
}

TrainedModel fit(Variant variant, const TrainSet& t, const Params& p, const SmoOptions& smo) {
  switch (variant) {
    case Variant::OcKnn: return train_oc_knn(t.x, p.k);
    case Variant::TcKnn: return train_tc_knn(t.x, t.labels, p.k);
    case Variant::OcSvm: return train_oc_svm(t.x, p.reg, resolve_gamma(p.gamma, t.x), smo);
    case Variant::TcSvm:
      return train_tc_svm(t.x, t.labels, p.reg, resolve_gamma(p.gamma, t.x), smo);
  }
  throw InvalidArgument("unknown variant");
}

struct InnerSplit {
  TrainSet train;
  std::vector<std::size_t> test_rows;
  std::vector<Label> test_labels;
  bool scorable = false;
};

std::vector<InnerSplit> inner_splits(const FeatureMatrix& features, std::span<const Label> labels,
                                     std::span<const std::size_t> outer_train, Variant variant,
                                     std::size_t inner_folds, std::uint64_t seed) {
  std::vector<Label> sub_labels;
  for (std::size_t r : outer_train) sub_labels.push_back(labels[r]);
  const FoldPlan plan = make_stratified_folds(sub_labels, inner_folds, seed);

  std::vector<InnerSplit> out(inner_folds);
  for (std::size_t f = 0; f < inner_folds; ++f) {
    std::vector<std::size_t> train_rows;
    for (std::size_t i = 0; i < outer_train.size(); ++i) {
      if (plan.assignments[i] == f) {
        out[f].test_rows.push_back(outer_train[i]);
        out[f].test_labels.push_back(labels[outer_train[i]]);
      } else {
        train_rows.push_back(outer_train[i]);
      }
    }
    out[f].train = make_train_set(features, labels, train_rows, variant);
    bool pos = false, neg = false;
    for (Label l : out[f].test_labels) (l == Label::Fall ? pos : neg) = true;
    out[f].scorable = pos && neg && !out[f].train.x.empty();
  }
  return out;
}

struct Selection {
  Params params;
  double inner_auc = 0.0;
};

// All k are scored from one neighbour query per test vector.
Selection select_knn(const FeatureMatrix& features, const std::vector<InnerSplit>& splits,
                     Variant variant, const HyperGrid& grid) {
  std::size_t limit = std::numeric_limits<std::size_t>::max();
  for (const auto& s : splits) {
    if (!s.scorable) continue;
    limit = std::min(limit, s.train.adl);
    if (variant == Variant::TcKnn) limit = std::min(limit, s.train.fall);
  }
  std::vector<std::size_t> ks;
  for (std::size_t k : grid.k) {
    if (k >= 1 && k <= limit) ks.push_back(k);
  }
  if (ks.empty()) throw InsufficientData("no admissible k for the inner training splits");
  const std::size_t kmax = *std::max_element(ks.begin(), ks.end());

  std::vector<double> sum(ks.size(), 0.0);
  std::size_t evaluated = 0;
  for (const auto& s : splits) {
    if (!s.scorable) continue;
    std::vector<std::size_t> adl_rows, fall_rows;
    for (std::size_t i = 0; i < s.train.labels.size(); ++i) {
      (s.train.labels[i] == Label::Fall ? fall_rows : adl_rows).push_back(i);
    }
    const FeatureMatrix adl = s.train.x.select(adl_rows);
    const FeatureMatrix fall = s.train.x.select(fall_rows);
    std::vector<std::vector<double>> scores(ks.size());
    for (std::size_t q : s.test_rows) {
      const auto v = features.row(q);
      const auto nn_adl = k_nearest(adl, v, kmax);
      std::vector<Neighbour> nn_fall;
      if (variant == Variant::TcKnn) nn_fall = k_nearest(fall, v, kmax);
      for (std::size_t c = 0; c < ks.size(); ++c) {
        const double d_adl = mean_distance(nn_adl, ks[c]);
        scores[c].push_back(variant == Variant::TcKnn
                                ? distance_ratio_score(d_adl, mean_distance(nn_fall, ks[c]))
                                : d_adl);
      }
    }
    for (std::size_t c = 0; c < ks.size(); ++c) sum[c] += *split_auc(scores[c], s.test_labels);
    ++evaluated;
  }
  if (evaluated == 0) throw InsufficientData("no inner fold holds both classes");

  Selection best;
  best.inner_auc = -1.0;
  for (std::size_t c = 0; c < ks.size(); ++c) {
    const double mean = sum[c] / static_cast<double>(evaluated);
    if (mean > best.inner_auc) {
      best.inner_auc = mean;
      best.params.k = ks[c];
    }
  }
  return best;
}

// Inner-fold scores for one grid point. Splits small enough for
// smo.cache_bytes share one distance matrix across the whole grid.
class SvmSplitScorer {
 public:
  SvmSplitScorer(const FeatureMatrix& features, const InnerSplit& split, Variant variant,
                 const SmoOptions& smo)
      : features_(features), split_(split), variant_(variant), smo_(smo) {
    const std::size_t m = split.train.x.rows();
    if (m * m * sizeof(double) > smo.cache_bytes) return;
    prepared_ = PreparedSplit::from(split.train.x);
    FeatureMatrix test(split.test_rows.size(), features.cols());
    for (std::size_t i = 0; i < split.test_rows.size(); ++i) {
      prepared_->standardizer.apply(features.row(split.test_rows[i]), test.row(i));
    }
    test_sq_ = squared_distances(test, prepared_->z);
  }

  std::vector<double> scores(const Params& p) const {
    std::vector<double> out;
    out.reserve(split_.test_rows.size());
    if (!prepared_) {
      const TrainedModel model = fit(variant_, split_.train, p, smo_);
      for (std::size_t q : split_.test_rows) out.push_back(model.score(features_.row(q)));
      return out;
    }
    const double gamma = p.gamma.scale ? prepared_->scale_gamma : p.gamma.value;
    const SvmModel model = variant_ == Variant::OcSvm
                               ? fit_oc_svm(*prepared_, p.reg, gamma, smo_)
                               : fit_tc_svm(*prepared_, split_.train.labels, p.reg, gamma, smo_);
    const std::size_t m = prepared_->z.rows();
    for (std::size_t i = 0; i < split_.test_rows.size(); ++i) {
      out.push_back(model.score_from_distances(std::span(test_sq_).subspan(i * m, m)));
    }
    return out;
  }

 private:
  const FeatureMatrix& features_;
  const InnerSplit& split_;
  Variant variant_;
  SmoOptions smo_;
  std::optional<PreparedSplit> prepared_;
  std::vector<double> test_sq_;
};

Selection select_svm(const FeatureMatrix& features, const std::vector<InnerSplit>& splits,
                     Variant variant, const ExperimentConfig& config) {
  const auto& regs = variant == Variant::OcSvm ? config.grid.nu : config.grid.c;
  if (regs.empty() || config.grid.gamma.empty()) throw InvalidArgument("empty SVM grid");

  std::vector<Params> grid;
  for (double reg : regs) {
    for (const auto& g : config.grid.gamma) grid.push_back({0, reg, g});
  }
  std::vector<double> sum(grid.size(), 0.0);
  std::size_t evaluated = 0;
  for (const auto& s : splits) {
    if (!s.scorable || s.train.x.rows() < 2) continue;
    const SvmSplitScorer scorer(features, s, variant, config.smo);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      sum[g] += *split_auc(scorer.scores(grid[g]), s.test_labels);
    }
    ++evaluated;
  }
  if (evaluated == 0) throw InsufficientData("no inner fold holds both classes");

  Selection best;
  best.inner_auc = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double mean = sum[g] / static_cast<double>(evaluated);
    if (mean > best.inner_auc) {
      best.inner_auc = mean;
      best.params = grid[g];
    }
  }
  return best;
}

std::string digest_of(std::span<const std::size_t> rows) {
  std::string text;
  for (std::size_t r : rows) {
    text += std::to_string(r);
    text += ',';
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

FoldResult run_fold(const FeatureMatrix& features, std::span<const Label> labels,
                    const FoldPlan& outer, std::size_t fold, Variant variant,
                    const ExperimentConfig& config) {
  FoldResult result;
  result.fold = fold;
  result.test_indices = outer.test_indices(fold);
  const std::vector<std::size_t> train_rows = outer.train_indices(fold);
  result.train_digest = digest_of(train_rows);

  const auto splits = inner_splits(features, labels, train_rows, variant, config.inner_folds,
                                   derive_seed(config.seed, "inner-folds", fold));
  const Selection chosen = is_svm(variant) ? select_svm(features, splits, variant, config)
                                           : select_knn(features, splits, variant, config.grid);
  result.inner_auc = chosen.inner_auc;

  const TrainSet train = make_train_set(features, labels, train_rows, variant);
  result.train_adl = train.adl;
  result.train_fall = train.fall;
  const TrainedModel model = fit(variant, train, chosen.params, config.smo);
  result.hyperparameters = model.summary().hyperparameters;
  if (is_svm(variant)) result.hyperparameters["gamma_scale"] = chosen.params.gamma.scale ? 1.0 : 0.0;
  result.converged = model.summary().converged;

  std::vector<double> scores;
  std::vector<Label> test_labels;
  for (std::size_t q : result.test_indices) {
    scores.push_back(model.score(features.row(q)));
    test_labels.push_back(labels[q]);
    (labels[q] == Label::Fall ? result.test_fall : result.test_adl) += 1;
  }
  result.roc = roc_curve(scores, test_labels);
  result.auc = auc(result.roc);
  return result;
}

}  // namespace

FeatureMatrix extract_matrix(const Collection& collection, FeatureKind kind,
                             std::size_t window_len, const LtpParams& ltp) {
  FeatureMatrix m;
  for (const auto& inst : collection.instances) {
    const TriaxialWindow w = inst.window.size() == window_len && !inst.window.peak_index
                                 ? inst.window
                                 : cut_subwindow(inst.window, window_len);
    m.push_back(extract_features(kind, w, ltp).values);
  }
  return m;
}

EvalReport evaluate(const FeatureMatrix& features, std::span<const Label> labels,
                    const FoldPlan& outer, Variant variant, const ExperimentConfig& config) {
  if (features.rows() != labels.size() || outer.assignments.size() != labels.size()) {
    throw DimensionError("features, labels and fold plan differ in instance count");
  }
  EvalReport report;
  report.variant = variant;
  report.dimension = features.cols();
  report.seed = config.seed;
  report.standardization = is_svm(variant) ? "z-score (training split statistics)" : "none";
  report.folds.resize(outer.num_folds);

  std::vector<std::exception_ptr> errors(outer.num_folds);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t f = next++; f < outer.num_folds; f = next++) {
      try {
        report.folds[f] = run_fold(features, labels, outer, f, variant, config);
      } catch (...) {
        errors[f] = std::current_exception();
      }
    }
  };
  const unsigned threads =
      std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(outer.num_folds)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (std::size_t f = 0; f < errors.size(); ++f) {
    if (!errors[f]) continue;
    try {
      std::rethrow_exception(errors[f]);
    } catch (const std::exception& e) {
      throw ExperimentError(f, e.what());
    }
  }

  std::vector<RocCurve> curves;
  double sum = 0.0;
  for (const auto& fr : report.folds) {
    curves.push_back(fr.roc);
    sum += fr.auc;
    if (!fr.converged) {
      report.notes.push_back("fold " + std::to_string(fr.fold) +
                             ": ConvergenceWarning in final SVM fit");
    }
  }
  report.mean_auc = sum / static_cast<double>(report.folds.size());
  report.averaged_roc = average_roc(curves);
  report.averaged_auc = auc(report.averaged_roc);
  report.operating_point = select_operating_point(report.averaged_roc);
  return report;
}

EvalReport run_experiment(const Collection& collection, FeatureKind kind,
                          std::size_t window_len, Variant variant,
                          const ExperimentConfig& config) {
  const FeatureMatrix features = extract_matrix(collection, kind, window_len, config.ltp);
  const auto labels = collection.labels();
  EvalReport report = evaluate(features, labels, collection.folds, variant, config);
  report.collection = collection.id;
  report.feature = kind;
  report.window_len = window_len;
  for (const auto& note : collection.notes) report.notes.push_back(note);
  return report;
}

}  // namespace falldet
