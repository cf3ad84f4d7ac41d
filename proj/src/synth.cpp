#include "falldet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>

#include <json.hpp>

#include "falldet/errors.hpp"
#include "falldet/rng.hpp"

namespace falldet {

namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Oscillation {
  double amplitude;
  double freq;
  double phase;

  double at(double t) const { return amplitude * std::sin(kTwoPi * freq * t + phase); }
};

Oscillation random_oscillation(Rng& rng, double amp_lo, double amp_hi) {
  return {rng.uniform(amp_lo, amp_hi), rng.uniform(0.5, 2.0), rng.uniform(0.0, kTwoPi)};
}

std::string numbered(const char* prefix, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu.csv", prefix, i);
  return buf;
}

}  // namespace

TriaxialWindow synth_adl_window(std::size_t length, std::uint64_t seed) {
  Rng rng(seed);
  const Oscillation ox = random_oscillation(rng, 0.05, 0.25);
  const Oscillation oy = random_oscillation(rng, 0.05, 0.25);
  const Oscillation oz = random_oscillation(rng, 0.05, 0.25);
  TriaxialWindow w;
  w.x.resize(length);
  w.y.resize(length);
  w.z.resize(length);
  for (std::size_t i = 0; i < length; ++i) {
    const double t = static_cast<double>(i) / kSampleRateHz;
    w.x[i] = ox.at(t) + rng.normal(0.0, 0.01);
    w.y[i] = oy.at(t) + rng.normal(0.0, 0.01);
    w.z[i] = 1.0 + oz.at(t) + rng.normal(0.0, 0.01);
  }
  w.peak_index = argmax_magnitude(w);
  return w;
}

TriaxialWindow synth_fall_window(std::size_t length, std::uint64_t seed) {
  Rng rng(seed);
  const Oscillation walk = random_oscillation(rng, 0.05, 0.2);
  const double impact = rng.uniform(2.5, 4.0);
  const auto jitter = static_cast<std::ptrdiff_t>(rng.below(7)) - 3;
  const auto n = static_cast<std::ptrdiff_t>(length);
  const std::ptrdiff_t peak = std::clamp<std::ptrdiff_t>(n / 2 + jitter, 3, n - 4);
  const std::ptrdiff_t dip_start = std::max<std::ptrdiff_t>(0, peak - 18);

  TriaxialWindow w;
  w.x.resize(length);
  w.y.resize(length);
  w.z.resize(length);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRateHz;
    double x, y, z;
    if (i < dip_start) {
      x = walk.at(t);
      y = 0.5 * walk.at(t + 0.1);
      z = 1.0 + walk.at(t + 0.2);
    } else if (i < peak - 2) {
      x = 0.05;
      y = 0.05;
      z = 0.2;
    } else if (i <= peak + 2) {
      const double shape = 1.0 - 0.3 * static_cast<double>(std::abs(i - peak));
      const double m = impact * shape;
      x = 0.6 * m;
      y = 0.0;
      z = 0.8 * m;
    } else {
      const double decay = std::exp(-static_cast<double>(i - peak) / 8.0);
      x = 1.0 + 0.5 * decay * std::sin(kTwoPi * 3.0 * t);
      y = 0.0;
      z = 0.3 * decay;
      // Rebounds after the main impact.
      const std::ptrdiff_t since = i - peak;
      if (since == 6 || since == 12) x += impact * (since == 6 ? 0.6 : 0.4);
    }
    w.x[static_cast<std::size_t>(i)] = x + rng.normal(0.0, 0.01);
    w.y[static_cast<std::size_t>(i)] = y + rng.normal(0.0, 0.01);
    w.z[static_cast<std::size_t>(i)] = z + rng.normal(0.0, 0.01);
  }
  w.peak_index = argmax_magnitude(w);
  return w;
}

std::vector<Recording> synthesize_dataset1(const SynthOptions& options) {
  std::vector<Recording> out;
  out.reserve(options.adl + options.falls);
  for (std::size_t i = 0; i < options.adl; ++i) {
    out.push_back({synth_adl_window(kFullWindowLength, derive_seed(options.seed, "synth-adl", i)),
                   Label::Adl, "adl/" + numbered("adl", i + 1)});
  }
  for (std::size_t i = 0; i < options.falls; ++i) {
    out.push_back(
        {synth_fall_window(kFullWindowLength, derive_seed(options.seed, "synth-fall", i)),
         Label::Fall, "fall/" + numbered("fall", i + 1)});
  }
  return out;
}

std::vector<Recording> synthesize_dataset2(std::size_t count, std::uint64_t seed) {
  std::vector<Recording> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    // Same generator, gravity rotated onto x as in belt-worn recordings.
    TriaxialWindow w = synth_adl_window(kLongWindowLength, derive_seed(seed, "synth-d2", i));
    std::swap(w.x, w.z);
    out.push_back({std::move(w), Label::Adl, "rows:" + std::to_string(i + 1)});
  }
  return out;
}

void write_dataset1(const fs::path& root, std::span<const Recording> recordings,
                    std::uint64_t seed) {
  fs::create_directories(root / "adl");
  fs::create_directories(root / "fall");
  std::size_t adl = 0, fall = 0;
  for (const auto& rec : recordings) {
    write_window_csv(root / rec.source_id, rec.window);
    (rec.label == Label::Fall ? fall : adl) += 1;
  }
  const nlohmann::json manifest = {
      {"mode", "windows"},
      {"synthetic", true},
      {"description", "SYNTHETIC non-physiological fixtures for pipeline testing"},
      {"seed", seed},
      {"sample_rate", kSampleRateHz},
      {"window_length", kFullWindowLength},
      {"counts", {{"adl", adl}, {"fall", fall}}}};
  std::ofstream out(root / "manifest.json");
  if (!out) throw Error("cannot write " + (root / "manifest.json").string());
  out << manifest.dump(2) << "\n";
}

void write_dataset2(const fs::path& root, std::span<const Recording> recordings) {
  fs::create_directories(root);
  std::ofstream xs(root / "acc_x.txt"), ys(root / "acc_y.txt"), zs(root / "acc_z.txt"),
      labels(root / "labels.txt");
  if (!xs || !ys || !zs || !labels) throw Error("cannot write dataset2 files in " + root.string());
  char buf[64];
  auto write_row = [&](std::ofstream& out, const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.17g", i == 0 ? "" : " ", v[i]);
      out << buf;
    }
    out << "\n";
  };
  for (const auto& rec : recordings) {
    write_row(xs, rec.window.x);
    write_row(ys, rec.window.y);
    write_row(zs, rec.window.z);
    labels << (rec.label == Label::Fall ? "FALL" : "ADL") << "\n";
  }
}

}  // namespace falldet
