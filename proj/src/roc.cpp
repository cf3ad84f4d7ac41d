#include "falldet/roc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "falldet/errors.hpp"

namespace falldet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Index of the last point with fpr <= f.
std::size_t last_at_or_below(const RocCurve& curve, double f) {
  const auto it = std::upper_bound(curve.points.begin(), curve.points.end(), f,
                                   [](double v, const RocPoint& p) { return v < p.fpr; });
  return it == curve.points.begin() ? 0
                                    : static_cast<std::size_t>(it - curve.points.begin()) - 1;
}

}  // namespace

RocCurve roc_curve(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) throw DimensionError("scores and labels differ in count");
  std::size_t positives = 0;
  for (Label l : labels) positives += l == Label::Fall;
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw DegenerateLabels("ROC needs at least one FALL and one ADL label");
  }
  for (double s : scores) {
    if (std::isnan(s)) throw InvalidArgument("NaN score");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, kInf});
  std::size_t tp = 0, fp = 0;
  const auto p = static_cast<double>(positives);
  const auto n = static_cast<double>(negatives);
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == Label::Fall ? tp : fp) += 1;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / n, static_cast<double>(tp) / p, s});
  }
  return curve;
}

double auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto& a = curve.points[k - 1];
    const auto& b = curve.points[k];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
  }
  return area;
}

double tpr_at(const RocCurve& curve, double f) {
  const auto& pts = curve.points;
  const std::size_t k = last_at_or_below(curve, f);
  if (pts[k].fpr == f || k + 1 >= pts.size()) return pts[k].tpr;
  const auto& a = pts[k];
  const auto& b = pts[k + 1];
  return a.tpr + (f - a.fpr) / (b.fpr - a.fpr) * (b.tpr - a.tpr);
}

RocCurve average_roc(std::span<const RocCurve> curves, std::size_t grid_points) {
  if (curves.empty()) throw InvalidArgument("average_roc needs at least one curve");
  if (grid_points < 2) throw InvalidArgument("averaging grid needs at least 2 points");
  for (const auto& c : curves) {
    if (c.points.empty()) throw InvalidArgument("empty ROC curve");
  }

  const auto count = static_cast<double>(curves.size());
  const auto last = static_cast<double>(grid_points - 1);
  RocCurve out;
  out.points.reserve(grid_points + 1);
  for (std::size_t j = 0; j < grid_points; ++j) {
    const double f = static_cast<double>(j) / last;
    double tpr = 0.0;
    double threshold = 0.0;
    for (const auto& c : curves) {
      tpr += tpr_at(c, f);
      threshold += c.points[last_at_or_below(c, f)].threshold;
    }
    out.points.push_back({f, tpr / count, threshold / count});
  }
  if (out.points.front().tpr > 0.0) {
    out.points.insert(out.points.begin(), RocPoint{0.0, 0.0, kInf});
  }
  return out;
}

OperatingPoint select_operating_point(const RocCurve& curve) {
  if (curve.points.empty()) throw InvalidArgument("empty ROC curve");
  OperatingPoint best;
  bool have = false;
  for (const auto& p : curve.points) {
    const double se = p.tpr;
    const double sp = 1.0 - p.fpr;
    const double gm = std::sqrt(se * sp);
    const bool better = !have || gm > best.gm ||
                        (gm == best.gm && (se > best.se ||
                                           (se == best.se && p.threshold < best.threshold)));
    if (better) {
      best = {se, sp, gm, p.threshold};
      have = true;
    }
  }
  return best;
}

}  // namespace falldet
