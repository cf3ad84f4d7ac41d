#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "falldet/ingest.hpp"

namespace falldet {

enum class FeatureKind : unsigned char { Raw, Magnitude, AccelFeatures, Ltp };

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view text);

struct FeatureVector {
  std::vector<double> values;
  FeatureKind kind = FeatureKind::Raw;
  std::size_t window_len = 0;
};

// Local Temporal Patterns parameters. The per-window level cap m_max is not
// stored here: it is derived from each window's peak magnitude.
struct LtpParams {
  std::size_t num_neighbours = 6;
  double step = 1.0;  // g per boost level
};

// RAW 3L, MAGNITUDE L, ACCEL_FEATURES 12, LTP num_neighbours * L.
std::size_t feature_dimension(FeatureKind kind, std::size_t window_len,
                              const LtpParams& ltp = {});

FeatureVector raw_features(const TriaxialWindow& w);

std::vector<double> magnitude_series(const TriaxialWindow& w);
FeatureVector magnitude_features(const TriaxialWindow& w);

// Spectral energy sqrt(sum_k |X_k|^2 / N) of one axis, X the unnormalised DFT.
double spectral_energy(std::span<const double> axis);

// Population standard deviation.
double population_stddev(std::span<const double> v);

// Pearson correlation, defined as 0 when either series has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

// [mean x y z, std x y z, energy x y z, corr xy xz yz]
FeatureVector accel_features(const TriaxialWindow& w);

// Neighbour offsets of a sample: ceil(N/2) preceding then floor(N/2) following.
std::vector<int> ltp_neighbour_offsets(std::size_t num_neighbours);

// m_max = ceil(max magnitude / step) * step, expressed as a number of steps.
std::size_t ltp_level_cap(std::span<const double> magnitudes, double step);

FeatureVector ltp_features(const TriaxialWindow& w, const LtpParams& p = {});

// Dispatches on kind. The window must already be cut to its final length.
FeatureVector extract_features(FeatureKind kind, const TriaxialWindow& w,
                               const LtpParams& ltp = {});

}  // namespace falldet
