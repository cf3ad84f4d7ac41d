#include "falldet/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numeric>
#include <string>

#include <fftw3.h>

#include "falldet/errors.hpp"

namespace falldet {

namespace {

// FFTW planning is not thread-safe; execution with the new-array interface
// is. Plans are created once per length under a lock and reused.
fftw_plan forward_plan(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, fftw_plan> plans;
  std::lock_guard lock(mutex);
  if (auto it = plans.find(n); it != plans.end()) return it->second;
  std::vector<std::complex<double>> in(n), out(n);
  fftw_plan plan = fftw_plan_dft_1d(
      static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
      reinterpret_cast<fftw_complex*>(out.data()), FFTW_FORWARD,
      FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan == nullptr) throw Error("FFTW could not plan a transform of length " + std::to_string(n));
  plans.emplace(n, plan);
  return plan;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void require_window(const TriaxialWindow& w) {
  if (w.x.size() != w.y.size() || w.x.size() != w.z.size()) {
    throw LengthError("window axes differ in length");
  }
  if (w.x.empty()) throw LengthError("empty window");
}

}  // namespace

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Raw: return "raw";
    case FeatureKind::Magnitude: return "magnitude";
    case FeatureKind::AccelFeatures: return "accel";
    case FeatureKind::Ltp: return "ltp";
  }
  return "?";
}

FeatureKind parse_feature_kind(std::string_view text) {
  std::string t;
  for (char c : text) t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "raw") return FeatureKind::Raw;
  if (t == "magnitude" || t == "magn") return FeatureKind::Magnitude;
  if (t == "accel" || t == "energy" || t == "accel_features") return FeatureKind::AccelFeatures;
  if (t == "ltp") return FeatureKind::Ltp;
  throw InvalidArgument("unknown feature kind '" + std::string(text) + "'");
}

std::size_t feature_dimension(FeatureKind kind, std::size_t window_len, const LtpParams& ltp) {
  switch (kind) {
    case FeatureKind::Raw: return 3 * window_len;
    case FeatureKind::Magnitude: return window_len;
    case FeatureKind::AccelFeatures: return 12;
    case FeatureKind::Ltp: return ltp.num_neighbours * window_len;
  }
  return 0;
}

FeatureVector raw_features(const TriaxialWindow& w) {
  require_window(w);
  FeatureVector f{{}, FeatureKind::Raw, w.size()};
  f.values.reserve(3 * w.size());
  f.values.insert(f.values.end(), w.x.begin(), w.x.end());
  f.values.insert(f.values.end(), w.y.begin(), w.y.end());
  f.values.insert(f.values.end(), w.z.begin(), w.z.end());
  return f;
}

std::vector<double> magnitude_series(const TriaxialWindow& w) {
  std::vector<double> m(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    m[i] = std::sqrt(w.x[i] * w.x[i] + w.y[i] * w.y[i] + w.z[i] * w.z[i]);
  }
  return m;
}

FeatureVector magnitude_features(const TriaxialWindow& w) {
  require_window(w);
  return {magnitude_series(w), FeatureKind::Magnitude, w.size()};
}

double spectral_energy(std::span<const double> axis) {
  const std::size_t n = axis.size();
  if (n == 0) return 0.0;
  std::vector<std::complex<double>> in(axis.begin(), axis.end());
  std::vector<std::complex<double>> out(n);
  fftw_execute_dft(forward_plan(n), reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  double power = 0.0;
  for (const auto& c : out) power += std::norm(c);
  return std::sqrt(power / static_cast<double>(n));
}

double population_stddev(std::span<const double> v) {
  const double mu = mean_of(v);
  double ss = 0.0;
  for (double a : v) ss += (a - mu) * (a - mu);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

FeatureVector accel_features(const TriaxialWindow& w) {
  require_window(w);
  if (w.size() < 2) throw LengthError("accel features need at least 2 samples");
  const std::span<const double> x(w.x), y(w.y), z(w.z);
  FeatureVector f{{}, FeatureKind::AccelFeatures, w.size()};
  f.values = {mean_of(x),          mean_of(y),          mean_of(z),
              population_stddev(x), population_stddev(y), population_stddev(z),
              spectral_energy(x),  spectral_energy(y),  spectral_energy(z),
              pearson(x, y),       pearson(x, z),       pearson(y, z)};
  return f;
}

std::vector<int> ltp_neighbour_offsets(std::size_t num_neighbours) {
  const int before = static_cast<int>((num_neighbours + 1) / 2);
  const int after = static_cast<int>(num_neighbours / 2);
  std::vector<int> offsets;
  for (int d = -before; d <= -1; ++d) offsets.push_back(d);
  for (int d = 1; d <= after; ++d) offsets.push_back(d);
  return offsets;
}

std::size_t ltp_level_cap(std::span<const double> magnitudes, double step) {
  const double peak = magnitudes.empty() ? 0.0 : *std::max_element(magnitudes.begin(), magnitudes.end());
  return static_cast<std::size_t>(std::ceil(peak / step));
}

FeatureVector ltp_features(const TriaxialWindow& w, const LtpParams& p) {
  require_window(w);
  if (p.num_neighbours == 0) throw InvalidArgument("LTP needs at least one neighbour");
  if (!(p.step > 0.0)) throw InvalidArgument("LTP step must be positive");

  const auto m = magnitude_series(w);
  const auto n = static_cast<std::ptrdiff_t>(m.size());
  const std::size_t cap = ltp_level_cap(m, p.step);  // levels are 0..cap
  const auto offsets = ltp_neighbour_offsets(p.num_neighbours);

  FeatureVector f{{}, FeatureKind::Ltp, w.size()};
  f.values.reserve(offsets.size() * m.size());
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    for (int d : offsets) {
      const std::ptrdiff_t i = std::clamp<std::ptrdiff_t>(s + d, 0, n - 1);
      const double ms = m[static_cast<std::size_t>(s)];
      const double mi = m[static_cast<std::size_t>(i)];
      std::size_t count = 0;
      if (ms > mi) {
        // Number of levels j in [0, cap] with ms > mi + j*step. The ceiling is
        // a first estimate; the loops settle it against the inequality itself
        // so rounding in the subtraction can never shift the count.
        count = static_cast<std::size_t>(std::ceil((ms - mi) / p.step));
        count = std::min(count, cap + 1);
        while (count > 0 && !(ms > mi + static_cast<double>(count - 1) * p.step)) --count;
        while (count <= cap && ms > mi + static_cast<double>(count) * p.step) ++count;
      }
      f.values.push_back(static_cast<double>(count));
    }
  }
  return f;
}

FeatureVector extract_features(FeatureKind kind, const TriaxialWindow& w, const LtpParams& ltp) {
  switch (kind) {
    case FeatureKind::Raw: return raw_features(w);
    case FeatureKind::Magnitude: return magnitude_features(w);
    case FeatureKind::AccelFeatures: return accel_features(w);
    case FeatureKind::Ltp: return ltp_features(w, ltp);
  }
  throw InvalidArgument("unknown feature kind");
}

}  // namespace falldet
