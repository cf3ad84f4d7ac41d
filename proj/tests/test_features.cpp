#include <doctest.h>

#include <array>
#include <cmath>

#include "falldet/errors.hpp"
#include "falldet/features.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace falldet;

namespace {

TriaxialWindow make(std::vector<double> x, std::vector<double> y, std::vector<double> z) {
  TriaxialWindow w;
  w.x = std::move(x);
  w.y = std::move(y);
  w.z = std::move(z);
  return w;
}

}  // namespace

TEST_CASE("feature kinds round trip through their names") {
  for (auto k : {FeatureKind::Raw, FeatureKind::Magnitude, FeatureKind::AccelFeatures, FeatureKind::Ltp}) {
    CHECK(parse_feature_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_feature_kind("fft"), InvalidArgument);
}

TEST_CASE("raw features concatenate x, y, z") {
  const auto f = raw_features(make({1, 2}, {3, 4}, {5, 6}));
  CHECK(f.values == std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(f.kind == FeatureKind::Raw);
  Rng rng(1);
  CHECK(raw_features(testing::random_window(rng, 51)).values.size() == 153);
  CHECK(raw_features(testing::random_window(rng, 128)).values.size() == 384);
}

TEST_CASE("magnitude samples") {
  const auto f = magnitude_features(make({3, 0, 1}, {0, 0, 1}, {4, 0, 1}));
  CHECK(f.values[0] == 5.0);
  CHECK(f.values[1] == 0.0);
  CHECK(f.values[2] == doctest::Approx(1.7320508).epsilon(1e-7));
}

TEST_CASE("magnitude ignores axis order and signs") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto w = testing::random_window(rng, 51);
    const auto base = magnitude_series(w);
    const auto perm = magnitude_series(make(w.z, w.x, w.y));
    TriaxialWindow flipped = w;
    for (auto& v : flipped.y) v = -v;
    const auto flip = magnitude_series(flipped);
    for (std::size_t i = 0; i < base.size(); ++i) {
      CHECK(perm[i] == doctest::Approx(base[i]).epsilon(1e-15));
      CHECK(flip[i] == base[i]);
    }
  }
}

TEST_CASE("energy of a constant axis is c * sqrt(L)") {
  for (std::size_t L : {std::size_t{51}, std::size_t{128}, std::size_t{300}}) {
    const std::vector<double> axis(L, 0.8);
    const double expected = 0.8 * std::sqrt(static_cast<double>(L));
    CHECK(spectral_energy(axis) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(oracle::dft_energy(axis) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("energy agrees with a direct DFT sum") {
  Rng rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t L = trial % 2 ? 51 : 128;
    std::vector<double> axis;
    for (std::size_t i = 0; i < L; ++i) axis.push_back(rng.uniform(-3, 3));
    const double dft = oracle::dft_energy(axis);
    CHECK(std::abs(spectral_energy(axis) - dft) <= 1e-9 * dft);
  }
  CHECK(spectral_energy(std::vector<double>{}) == 0.0);
}

TEST_CASE("accel feature layout") {
  Rng rng(5);
  auto w = testing::random_window(rng, 51);
  w.y = w.x;
  const auto f = accel_features(w).values;
  REQUIRE(f.size() == 12);
  for (double v : f) CHECK(std::isfinite(v));

  double mean_x = 0.0;
  for (double v : w.x) mean_x += v;
  mean_x /= 51.0;
  double var_x = 0.0;
  for (double v : w.x) var_x += (v - mean_x) * (v - mean_x);
  CHECK(f[0] == doctest::Approx(mean_x).epsilon(1e-12));
  CHECK(f[1] == f[0]);
  CHECK(f[3] == doctest::Approx(std::sqrt(var_x / 51.0)).epsilon(1e-12));
  CHECK(f[6] == doctest::Approx(oracle::l2_norm(w.x)).epsilon(1e-12));
  CHECK(f[9] == doctest::Approx(1.0).epsilon(1e-12));  // corr_xy with y = x
  CHECK(std::abs(f[10]) <= 1.0);
}

TEST_CASE("correlation with a constant axis is zero") {
  const auto f = accel_features(make({1, 2, 3, 4}, {2, 2, 2, 2}, {4, 3, 2, 1})).values;
  CHECK(f[4] == 0.0);
  CHECK(f[9] == 0.0);
  CHECK(f[11] == 0.0);
  CHECK(f[10] == doctest::Approx(-1.0));
  CHECK(pearson(std::vector<double>{1, 2}, std::vector<double>{5, 5}) == 0.0);
}

TEST_CASE("accel features need two samples") {
  CHECK_THROWS(accel_features(make({1}, {1}, {1})));
}

TEST_CASE("LTP neighbour topology and level cap") {
  CHECK(ltp_neighbour_offsets(6) == std::vector<int>{-3, -2, -1, 1, 2, 3});
  CHECK(ltp_neighbour_offsets(1) == std::vector<int>{-1});
  CHECK(ltp_level_cap(std::vector<double>{0.5, 2.5}, 1.0) == 3);
  CHECK(ltp_level_cap(std::vector<double>{0.5, 3.0}, 1.0) == 3);
  CHECK(ltp_level_cap(std::vector<double>{0.0, 0.0}, 1.0) == 0);
}

TEST_CASE("LTP entry counts satisfied boost levels") {
  // M = [2.5, 0.4], m_max = 3. Sample 0's following neighbour is sample 1.
  const auto f = ltp_features(make({2.5, 0.4}, {0, 0}, {0, 0}), {2, 1.0}).values;
  REQUIRE(f.size() == 4);
  CHECK(f[0] == 0.0);  // clamped preceding neighbour is itself
  CHECK(f[1] == 3.0);  // 2.5 > 0.4, 1.4, 2.4 but not 3.4
  CHECK(f[2] == 0.0);
  CHECK(f[3] == 0.0);
}

TEST_CASE("LTP equal magnitudes and all-zero windows give zeros") {
  const auto eq = ltp_features(make({1, 0, 1}, {0, 1, 0}, {0, 0, 0})).values;
  for (double v : eq) CHECK(v == 0.0);
  const auto zero = ltp_features(make(std::vector<double>(51, 0.0), std::vector<double>(51, 0.0),
                                      std::vector<double>(51, 0.0)));
  CHECK(zero.values.size() == 306);
  for (double v : zero.values) CHECK(v == 0.0);
}

TEST_CASE("LTP matches the brute-force oracle with in-range integers") {
  Rng rng(6);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t L = trial % 2 ? 51 : 128;
    const auto w = testing::random_window(rng, L, trial % 3 == 0 ? 0.4 : 2.5);
    for (const LtpParams p : {LtpParams{}, LtpParams{6, 0.1}, LtpParams{3, 0.5}}) {
      const auto f = ltp_features(w, p).values;
      const auto expected = oracle::ltp_bruteforce(w, p.num_neighbours, p.step);
      REQUIRE(f.size() == expected.size());
      const double cap = static_cast<double>(ltp_level_cap(magnitude_series(w), p.step)) + 1.0;
      for (std::size_t i = 0; i < f.size(); ++i) {
        REQUIRE(f[i] == static_cast<double>(expected[i]));
        REQUIRE(f[i] == std::floor(f[i]));
        REQUIRE(f[i] >= 0.0);
        REQUIRE(f[i] <= cap);
      }
    }
  }
}

TEST_CASE("dimension table") {
  Rng rng(7);
  const std::array<std::pair<FeatureKind, std::array<std::size_t, 2>>, 4> table{{
      {FeatureKind::Raw, {153, 384}},
      {FeatureKind::Magnitude, {51, 128}},
      {FeatureKind::AccelFeatures, {12, 12}},
      {FeatureKind::Ltp, {306, 768}},
  }};
  for (const auto& [kind, dims] : table) {
    CHECK(feature_dimension(kind, 51) == dims[0]);
    CHECK(feature_dimension(kind, 128) == dims[1]);
    const auto f51 = extract_features(kind, testing::random_window(rng, 51));
    const auto f128 = extract_features(kind, testing::random_window(rng, 128));
    CHECK(f51.values.size() == dims[0]);
    CHECK(f128.values.size() == dims[1]);
    CHECK(f51.window_len == 51);
    CHECK(f128.kind == kind);
  }
}

TEST_CASE("extractors are pure") {
  Rng rng(8);
  const auto w = testing::random_window(rng, 128);
  for (auto k : {FeatureKind::Raw, FeatureKind::Magnitude, FeatureKind::AccelFeatures, FeatureKind::Ltp}) {
    CHECK(extract_features(k, w).values == extract_features(k, w).values);
  }
}
