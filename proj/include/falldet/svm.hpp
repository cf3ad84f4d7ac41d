#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "falldet/ingest.hpp"
#include "falldet/knn.hpp"

namespace falldet {

// z-score transform fitted on training rows. Constant features get scale 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const FeatureMatrix& x);
  void apply(std::span<const double> in, std::span<double> out) const;
  FeatureMatrix apply(const FeatureMatrix& x) const;
};

// gamma = 1 / (d * mean feature variance); 1 when every feature is constant.
double scale_gamma(const FeatureMatrix& x);

double squared_distance(std::span<const double> a, std::span<const double> b);
double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

// Row-major a.rows() x b.rows() matrix of squared Euclidean distances.
std::vector<double> squared_distances(const FeatureMatrix& a, const FeatureMatrix& b);

// A standardized training split with its pairwise squared distances, so that a
// grid of fits on one split shares the expensive part of every kernel row.
// Fits through it are bit-identical to fits on the raw rows.
struct PreparedSplit {
  Standardizer standardizer;
  FeatureMatrix z;
  std::vector<double> sq;
  double scale_gamma = 1.0;

  static PreparedSplit from(const FeatureMatrix& x);
};

struct SmoOptions {
  double tol = 1e-3;
  // 0 selects the default cap of 10 passes, a pass being m pair updates.
  std::size_t max_iterations = 0;
  std::size_t cache_bytes = std::size_t{256} << 20;
};

// min 1/2 a'Qa + p'a  subject to  y'a = y'a0,  0 <= a_i <= upper_i.
// Q is supplied row by row; the solver caches rows within cache_bytes.
struct DualProblem {
  std::size_t size = 0;
  std::function<void(std::size_t, std::span<double>)> q_row;
  std::vector<double> q_diag;
  std::vector<double> linear;
  std::vector<signed char> y;
  std::vector<double> upper;
  std::vector<double> alpha0;  // feasible start
};

struct SmoResult {
  std::vector<double> alpha;
  std::vector<double> gradient;
  double rho = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
};

// Pairwise SMO with first-order (maximal violating pair) working-set
// selection. Stops when the violation gap falls to tol or the iteration cap
// is hit (converged = false).
SmoResult solve_smo(const DualProblem& problem, const SmoOptions& options);

enum class SvmKind : unsigned char { TwoClass, OneClass };

// RBF SVM over standardized features. Two-class: score = sum coef_i K + bias
// with FALL as +1. One-class: score = bias - sum coef_i K, i.e. rho minus the
// inlier decision, so larger means more anomalous in both cases.
struct SvmModel {
  SvmKind kind = SvmKind::TwoClass;
  double gamma = 1.0;
  double c = 1.0;   // two-class only
  double nu = 0.1;  // one-class only
  Standardizer standardizer;
  FeatureMatrix support_vectors;  // standardized
  std::vector<std::size_t> support_indices;
  std::vector<double> alpha;
  std::vector<double> coef;  // alpha_i * y_i
  double bias = 0.0;
  std::size_t iterations = 0;
  bool converged = true;

  double score(std::span<const double> raw) const;
  // Same score given the squared distances from a standardized query to every
  // training row (indexed like support_indices).
  double score_from_distances(std::span<const double> sq_to_train) const;
};

SvmModel fit_tc_svm(const FeatureMatrix& x, std::span<const Label> labels, double c,
                    double gamma, const SmoOptions& options = {});
SvmModel fit_oc_svm(const FeatureMatrix& x, double nu, double gamma,
                    const SmoOptions& options = {});
SvmModel fit_tc_svm(const PreparedSplit& split, std::span<const Label> labels, double c,
                    double gamma, const SmoOptions& options = {});
SvmModel fit_oc_svm(const PreparedSplit& split, double nu, double gamma,
                    const SmoOptions& options = {});

}  // namespace falldet
