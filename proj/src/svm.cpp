#include "falldet/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <string>
#include <unordered_map>

#include "falldet/errors.hpp"

namespace falldet {

namespace {

constexpr double kTau = 1e-12;

// LRU cache of Q rows.
class RowCache {
 public:
  RowCache(const DualProblem& problem, std::size_t cache_bytes)
      : problem_(problem) {
    const std::size_t row_bytes = std::max<std::size_t>(1, problem.size * sizeof(double));
    capacity_ = std::max<std::size_t>(2, cache_bytes / row_bytes);
    capacity_ = std::min(capacity_, problem.size);
  }

  std::span<const double> row(std::size_t i) {
    if (auto it = slots_.find(i); it != slots_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.position);
      return it->second.values;
    }
    std::vector<double> values;
    if (slots_.size() >= capacity_) {
      const std::size_t victim = lru_.back();
      lru_.pop_back();
      auto node = slots_.extract(victim);
      values = std::move(node.mapped().values);
    }
    values.resize(problem_.size);
    problem_.q_row(i, values);
    lru_.push_front(i);
    auto [it, inserted] = slots_.emplace(i, Slot{std::move(values), lru_.begin()});
    return it->second.values;
  }

 private:
  struct Slot {
    std::vector<double> values;
    std::list<std::size_t>::iterator position;
  };
  const DualProblem& problem_;
  std::size_t capacity_;
  std::list<std::size_t> lru_;
  std::unordered_map<std::size_t, Slot> slots_;
};

double compute_rho(const std::vector<double>& alpha, const std::vector<double>& grad,
                   const DualProblem& p) {
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t i = 0; i < p.size; ++i) {
    const double yg = p.y[i] * grad[i];
    if (alpha[i] >= p.upper[i]) {
      if (p.y[i] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[i] <= 0.0) {
      if (p.y[i] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  if (n_free > 0) return sum_free / static_cast<double>(n_free);
  if (!std::isfinite(ub)) return lb;
  if (!std::isfinite(lb)) return ub;
  return (ub + lb) / 2.0;
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw InvalidArgument("gamma must be positive and finite");
  }
}

// Kernel rows come from sq (precomputed squared distances) when given.
DualProblem rbf_problem(const FeatureMatrix& z, const std::vector<double>* sq,
                        std::vector<signed char> y, double gamma) {
  DualProblem p;
  p.size = z.rows();
  p.y = std::move(y);
  p.q_diag.assign(p.size, 1.0);
  if (sq) {
    p.q_row = [sq, n = p.size, gamma, ys = p.y](std::size_t i, std::span<double> out) {
      const double* d = sq->data() + i * n;
      for (std::size_t k = 0; k < out.size(); ++k) out[k] = ys[i] * ys[k] * std::exp(-gamma * d[k]);
    };
  } else {
    p.q_row = [&z, gamma, ys = p.y](std::size_t i, std::span<double> out) {
      const auto xi = z.row(i);
      for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = ys[i] * ys[k] * rbf_kernel(xi, z.row(k), gamma);
      }
    };
  }
  return p;
}

void keep_support_vectors(SvmModel& model, const FeatureMatrix& z, const SmoResult& r,
                          const std::vector<signed char>& y) {
  for (std::size_t i = 0; i < r.alpha.size(); ++i) {
    if (r.alpha[i] <= 0.0) continue;
    model.support_indices.push_back(i);
    model.alpha.push_back(r.alpha[i]);
    model.coef.push_back(r.alpha[i] * y[i]);
    model.support_vectors.push_back(z.row(i));
  }
  model.iterations = r.iterations;
  model.converged = r.converged;
}

}  // namespace

Standardizer Standardizer::fit(const FeatureMatrix& x) {
  Standardizer s;
  const std::size_t d = x.cols();
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  if (x.rows() == 0) return s;
  const double n = static_cast<double>(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
  }
  for (double& m : s.mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = row[j] - s.mean[j];
      var[j] += diff * diff;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / n);
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

void Standardizer::apply(std::span<const double> in, std::span<double> out) const {
  for (std::size_t j = 0; j < in.size(); ++j) out[j] = (in[j] - mean[j]) / scale[j];
}

FeatureMatrix Standardizer::apply(const FeatureMatrix& x) const {
  FeatureMatrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) apply(x.row(r), out.row(r));
  return out;
}

double scale_gamma(const FeatureMatrix& x) {
  if (x.rows() == 0 || x.cols() == 0) return 1.0;
  const double n = static_cast<double>(x.rows());
  double total_var = 0.0;
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) mean += x.row(r)[j];
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const double d = x.row(r)[j] - mean;
      var += d * d;
    }
    total_var += var / n;
  }
  const double mean_var = total_var / static_cast<double>(x.cols());
  if (!(mean_var > 0.0)) return 1.0;
  return 1.0 / (static_cast<double>(x.cols()) * mean_var);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  return std::exp(-gamma * squared_distance(a, b));
}

std::vector<double> squared_distances(const FeatureMatrix& a, const FeatureMatrix& b) {
  std::vector<double> out(a.rows() * b.rows());
  const bool same = &a == &b;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = same ? i : 0; k < b.rows(); ++k) {
      const double s = squared_distance(a.row(i), b.row(k));
      out[i * b.rows() + k] = s;
      if (same) out[k * b.rows() + i] = s;
    }
  }
  return out;
}

PreparedSplit PreparedSplit::from(const FeatureMatrix& x) {
  PreparedSplit p;
  p.standardizer = Standardizer::fit(x);
  p.z = p.standardizer.apply(x);
  p.sq = squared_distances(p.z, p.z);
  p.scale_gamma = falldet::scale_gamma(p.z);
  return p;
}

SmoResult solve_smo(const DualProblem& p, const SmoOptions& options) {
  const std::size_t m = p.size;
  if (p.q_diag.size() != m || p.linear.size() != m || p.y.size() != m ||
      p.upper.size() != m || p.alpha0.size() != m) {
    throw DimensionError("dual problem arrays disagree in size");
  }
  SmoResult r;
  r.alpha = p.alpha0;
  r.gradient = p.linear;
  if (m == 0) return r;

  RowCache cache(p, options.cache_bytes);
  for (std::size_t i = 0; i < m; ++i) {
    if (r.alpha[i] == 0.0) continue;
    const auto qi = cache.row(i);
    for (std::size_t k = 0; k < m; ++k) r.gradient[k] += r.alpha[i] * qi[k];
  }

  const std::size_t max_iter = options.max_iterations > 0
                                   ? options.max_iterations
                                   : std::max<std::size_t>(10 * m * m, 10000);
  auto& alpha = r.alpha;
  auto& grad = r.gradient;

  while (true) {
    // Maximal violating pair.
    double g_max = -std::numeric_limits<double>::infinity();
    double g_min = std::numeric_limits<double>::infinity();
    std::size_t i = m, j = m;
    for (std::size_t t = 0; t < m; ++t) {
      const double v = -p.y[t] * grad[t];
      const bool below_upper = alpha[t] < p.upper[t];
      const bool above_lower = alpha[t] > 0.0;
      const bool in_up = p.y[t] > 0 ? below_upper : above_lower;
      const bool in_low = p.y[t] > 0 ? above_lower : below_upper;
      if (in_up && v > g_max) {
        g_max = v;
        i = t;
      }
      if (in_low && v < g_min) {
        g_min = v;
        j = t;
      }
    }
    if (i == m || j == m || g_max - g_min < options.tol) break;
    if (r.iterations >= max_iter) {
      r.converged = false;
      break;
    }
    ++r.iterations;

    const auto qi = cache.row(i);
    const auto qj = cache.row(j);
    const double ci = p.upper[i];
    const double cj = p.upper[j];
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];

    if (p.y[i] != p.y[j]) {
      double quad = p.q_diag[i] + p.q_diag[j] + 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = -diff; }
      }
      if (diff > ci - cj) {
        if (alpha[i] > ci) { alpha[i] = ci; alpha[j] = ci - diff; }
      } else {
        if (alpha[j] > cj) { alpha[j] = cj; alpha[i] = cj + diff; }
      }
    } else {
      double quad = p.q_diag[i] + p.q_diag[j] - 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > ci) {
        if (alpha[i] > ci) { alpha[i] = ci; alpha[j] = sum - ci; }
      } else {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = sum; }
      }
      if (sum > cj) {
        if (alpha[j] > cj) { alpha[j] = cj; alpha[i] = sum - cj; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = sum; }
      }
    }

    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (std::size_t k = 0; k < m; ++k) grad[k] += qi[k] * dai + qj[k] * daj;
  }

  r.rho = compute_rho(alpha, grad, p);
  return r;
}

double SvmModel::score(std::span<const double> raw) const {
  if (raw.size() != standardizer.mean.size()) {
    throw DimensionError("SVM expects dimension " + std::to_string(standardizer.mean.size()) +
                         ", got " + std::to_string(raw.size()));
  }
  std::vector<double> z(raw.size());
  standardizer.apply(raw, z);
  double s = 0.0;
  for (std::size_t i = 0; i < coef.size(); ++i) {
    s += coef[i] * rbf_kernel(support_vectors.row(i), z, gamma);
  }
  return kind == SvmKind::TwoClass ? s + bias : bias - s;
}

double SvmModel::score_from_distances(std::span<const double> sq_to_train) const {
  double s = 0.0;
  for (std::size_t i = 0; i < coef.size(); ++i) {
    s += coef[i] * std::exp(-gamma * sq_to_train[support_indices[i]]);
  }
  return kind == SvmKind::TwoClass ? s + bias : bias - s;
}

namespace {

SvmModel tc_core(Standardizer standardizer, const FeatureMatrix& z, const std::vector<double>* sq,
                 std::span<const Label> labels, double c, double gamma,
                 const SmoOptions& options) {
  if (labels.size() != z.rows()) throw DimensionError("labels and vectors differ in count");
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("C must be positive and finite");
  check_gamma(gamma);
  std::vector<signed char> y(z.rows());
  std::size_t falls = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y[i] = labels[i] == Label::Fall ? 1 : -1;
    falls += labels[i] == Label::Fall;
  }
  if (falls == 0 || falls == labels.size()) {
    throw DegenerateLabels("two-class SVM needs both ADL and FALL instances");
  }

  SvmModel model;
  model.kind = SvmKind::TwoClass;
  model.gamma = gamma;
  model.c = c;
  model.standardizer = std::move(standardizer);

  DualProblem p = rbf_problem(z, sq, y, gamma);
  p.linear.assign(p.size, -1.0);
  p.upper.assign(p.size, c);
  p.alpha0.assign(p.size, 0.0);
  const SmoResult r = solve_smo(p, options);

  keep_support_vectors(model, z, r, y);
  model.bias = -r.rho;
  return model;
}

SvmModel oc_core(Standardizer standardizer, const FeatureMatrix& z, const std::vector<double>* sq,
                 double nu, double gamma, const SmoOptions& options) {
  if (!(nu > 0.0 && nu <= 1.0)) throw InvalidNu("nu must lie in (0, 1]");
  check_gamma(gamma);
  if (z.rows() < 2) throw InvalidArgument("one-class SVM needs at least 2 vectors");

  SvmModel model;
  model.kind = SvmKind::OneClass;
  model.gamma = gamma;
  model.nu = nu;
  model.standardizer = std::move(standardizer);

  const auto m = static_cast<double>(z.rows());
  std::vector<signed char> y(z.rows(), 1);
  DualProblem p = rbf_problem(z, sq, y, gamma);
  p.linear.assign(p.size, 0.0);
  // Solved with sum(alpha) = nu * m and 0 <= alpha <= 1 so the stopping
  // tolerance has its usual meaning, then rescaled to sum(alpha) = 1.
  p.upper.assign(p.size, 1.0);
  // Uniform start: feasible for every nu, and symmetric data stays symmetric.
  p.alpha0.assign(p.size, nu);
  SmoResult r = solve_smo(p, options);
  const double scale = 1.0 / (nu * m);
  for (double& a : r.alpha) a *= scale;
  r.rho *= scale;

  keep_support_vectors(model, z, r, y);
  model.bias = r.rho;
  return model;
}

}  // namespace

SvmModel fit_tc_svm(const FeatureMatrix& x, std::span<const Label> labels, double c,
                    double gamma, const SmoOptions& options) {
  if (labels.size() != x.rows()) throw DimensionError("labels and vectors differ in count");
  Standardizer st = Standardizer::fit(x);
  const FeatureMatrix z = st.apply(x);
  return tc_core(std::move(st), z, nullptr, labels, c, gamma, options);
}

SvmModel fit_tc_svm(const PreparedSplit& split, std::span<const Label> labels, double c,
                    double gamma, const SmoOptions& options) {
  return tc_core(split.standardizer, split.z, &split.sq, labels, c, gamma, options);
}

SvmModel fit_oc_svm(const FeatureMatrix& x, double nu, double gamma,
                    const SmoOptions& options) {
  Standardizer st = Standardizer::fit(x);
  const FeatureMatrix z = st.apply(x);
  return oc_core(std::move(st), z, nullptr, nu, gamma, options);
}

SvmModel fit_oc_svm(const PreparedSplit& split, double nu, double gamma,
                    const SmoOptions& options) {
  return oc_core(split.standardizer, split.z, &split.sq, nu, gamma, options);
}

}  // namespace falldet
