#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "falldet/ingest.hpp"

namespace falldet {

// A score at or above threshold is classified FALL.
struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

// Sorted by FPR, TPR non-decreasing, from (0,0) to (1,1). The first point
// carries threshold +inf.
struct RocCurve {
  std::vector<RocPoint> points;
};

// Sweeps every distinct score from high to low; equal scores move together.
RocCurve roc_curve(std::span<const double> scores, std::span<const Label> labels);

// Trapezoidal area over the FPR axis.
double auc(const RocCurve& curve);

inline constexpr std::size_t kRocGridPoints = 1001;

// TPR of a curve at a given FPR: the highest TPR where the curve has points
// at exactly that FPR, otherwise linear interpolation.
double tpr_at(const RocCurve& curve, double fpr);

// Vertical averaging on the grid {0, 1/(n-1), ..., 1}. The threshold of a
// grid point is the mean over curves of the threshold of their last point
// with FPR <= grid value. A (0,0) point is prepended when the grid starts
// above it.
RocCurve average_roc(std::span<const RocCurve> curves,
                     std::size_t grid_points = kRocGridPoints);

struct OperatingPoint {
  double se = 0.0;
  double sp = 0.0;
  double gm = 0.0;  // sqrt(se * sp)
  double threshold = 0.0;
};

// Point maximising sqrt(TPR * (1 - FPR)); ties go to higher SE, then to the
// lower threshold.
OperatingPoint select_operating_point(const RocCurve& curve);

}  // namespace falldet
