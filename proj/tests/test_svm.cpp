#include <doctest.h>

#include <cmath>
#include <numeric>

#include "falldet/errors.hpp"
#include "falldet/svm.hpp"
#include "helpers.hpp"

using namespace falldet;

namespace {

struct Problem {
  FeatureMatrix x;
  std::vector<Label> labels;
};

Problem two_clouds(Rng& rng, std::size_t n_adl, std::size_t n_fall, std::size_t d, double shift) {
  Problem p;
  p.x = FeatureMatrix(n_adl + n_fall, d);
  for (std::size_t r = 0; r < n_adl + n_fall; ++r) {
    const bool fall = r >= n_adl;
    for (auto& v : p.x.row(r)) v = rng.normal(fall ? shift : 0.0, 1.0);
    p.labels.push_back(fall ? Label::Fall : Label::Adl);
  }
  return p;
}

std::vector<double> full_alpha(const SvmModel& m, std::size_t n) {
  std::vector<double> a(n, 0.0);
  for (std::size_t i = 0; i < m.support_indices.size(); ++i) a[m.support_indices[i]] = m.alpha[i];
  return a;
}

}  // namespace

TEST_CASE("standardizer statistics") {
  const auto x = FeatureMatrix::from_rows({{1, 5}, {3, 5}});
  const auto s = Standardizer::fit(x);
  CHECK(s.mean == std::vector<double>{2, 5});
  CHECK(s.scale == std::vector<double>{1, 1});  // second feature is constant
  const auto z = s.apply(x);
  CHECK(z.row(0)[0] == -1.0);
  CHECK(z.row(1)[0] == 1.0);
  CHECK(z.row(0)[1] == 0.0);
}

TEST_CASE("scale gamma is 1 / (d * mean variance)") {
  const auto x = FeatureMatrix::from_rows({{0, 0}, {2, 4}});
  // variances 1 and 4, mean 2.5, d = 2
  CHECK(scale_gamma(x) == doctest::Approx(1.0 / 5.0));
  CHECK(scale_gamma(FeatureMatrix::from_rows({{1, 1}, {1, 1}})) == 1.0);
}

TEST_CASE("rbf kernel") {
  CHECK(rbf_kernel(std::vector<double>{0, 0}, std::vector<double>{1, 1}, 0.5) ==
        doctest::Approx(std::exp(-1.0)));
  CHECK(rbf_kernel(std::vector<double>{2}, std::vector<double>{2}, 3.0) == 1.0);
}

TEST_CASE("solver on a two-variable problem") {
  DualProblem p;
  p.size = 2;
  p.y = {1, -1};
  p.q_diag = {1.0, 1.0};
  p.q_row = [](std::size_t i, std::span<double> out) {
    out[0] = i == 0 ? 1.0 : 0.0;
    out[1] = i == 1 ? 1.0 : 0.0;
  };
  p.linear = {-1.0, -1.0};
  p.upper = {10.0, 10.0};
  p.alpha0 = {0.0, 0.0};
  const auto r = solve_smo(p, {});
  CHECK(r.converged);
  CHECK(r.alpha[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.alpha[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("two-class SVM satisfies the KKT conditions") {
  Rng rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const double c = std::array{0.1, 1.0, 10.0, 100.0}[trial % 4];
    auto p = two_clouds(rng, 40, 25, 3, 1.5);
    const auto m = fit_tc_svm(p.x, p.labels, c, 0.3);
    REQUIRE(m.converged);
    const auto alpha = full_alpha(m, p.x.rows());
    double balance = 0.0;
    for (double v : m.coef) balance += v;
    CHECK(std::abs(balance) <= 1e-6);
    for (std::size_t i = 0; i < p.x.rows(); ++i) {
      const double y = p.labels[i] == Label::Fall ? 1.0 : -1.0;
      const double margin = y * m.score(p.x.row(i));
      CHECK(alpha[i] >= 0.0);
      CHECK(alpha[i] <= c);
      if (alpha[i] <= 0.0) CHECK(margin >= 1.0 - 1e-3);
      else if (alpha[i] >= c) CHECK(margin <= 1.0 + 1e-3);
      else CHECK(std::abs(margin - 1.0) <= 1e-3);
    }
  }
}

TEST_CASE("one-class SVM constraints and nu-property") {
  Rng rng(32);
  for (double nu : {0.01, 0.05, 0.1, 0.3}) {
    const auto x = testing::gaussian_cloud(rng, 500, 1 + rng.below(6));
    const auto m = fit_oc_svm(x, nu, 0.25);
    const double sum = std::accumulate(m.alpha.begin(), m.alpha.end(), 0.0);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    for (double a : m.alpha) CHECK(a <= 1.0 / (nu * 500.0) + 1e-15);
    std::size_t outliers = 0;
    const double boundary = SmoOptions{}.tol / (nu * 500.0);
    for (std::size_t r = 0; r < x.rows(); ++r) outliers += m.score(x.row(r)) > boundary;
    CHECK(static_cast<double>(outliers) / 500.0 <= nu + 0.05);
  }
}

TEST_CASE("prepared splits give bit-identical models and scores") {
  Rng rng(33);
  auto p = two_clouds(rng, 30, 20, 5, 1.0);
  const auto split = PreparedSplit::from(p.x);
  CHECK(split.scale_gamma == scale_gamma(Standardizer::fit(p.x).apply(p.x)));

  const auto a = fit_tc_svm(p.x, p.labels, 10.0, 0.2);
  const auto b = fit_tc_svm(split, p.labels, 10.0, 0.2);
  CHECK(a.alpha == b.alpha);
  CHECK(a.bias == b.bias);
  const auto c = fit_oc_svm(p.x, 0.1, 0.2);
  const auto d = fit_oc_svm(split, 0.1, 0.2);
  CHECK(c.alpha == d.alpha);
  CHECK(c.bias == d.bias);

  const auto queries = testing::gaussian_cloud(rng, 10, 5);
  FeatureMatrix zq(10, 5);
  for (std::size_t r = 0; r < 10; ++r) split.standardizer.apply(queries.row(r), zq.row(r));
  const auto sq = squared_distances(zq, split.z);
  for (std::size_t r = 0; r < 10; ++r) {
    const std::span<const double> row(sq.data() + r * split.z.rows(), split.z.rows());
    CHECK(b.score_from_distances(row) == a.score(queries.row(r)));
    CHECK(d.score_from_distances(row) == c.score(queries.row(r)));
  }
}

TEST_CASE("argument checks") {
  const auto x = FeatureMatrix::from_rows({{0.0}, {1.0}});
  const std::vector<Label> one_class{Label::Adl, Label::Adl};
  const std::vector<Label> both{Label::Adl, Label::Fall};
  CHECK_THROWS_AS(fit_tc_svm(x, one_class, 1.0, 1.0), DegenerateLabels);
  CHECK_THROWS_AS(fit_tc_svm(x, both, 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(fit_tc_svm(x, both, 1.0, -1.0), InvalidArgument);
  CHECK_THROWS_AS(fit_oc_svm(x, 0.0, 1.0), InvalidNu);
  CHECK_THROWS_AS(fit_oc_svm(x, 1.5, 1.0), InvalidNu);
  CHECK_THROWS_AS(fit_oc_svm(FeatureMatrix::from_rows({{0.0}}), 0.5, 1.0), InvalidArgument);
  CHECK_THROWS_AS(fit_oc_svm(x, 0.5, 1.0).score(std::vector<double>{1, 2}), DimensionError);
}
