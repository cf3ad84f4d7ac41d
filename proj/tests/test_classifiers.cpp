#include <doctest.h>

#include <cmath>

#include "falldet/classifiers.hpp"
#include "falldet/errors.hpp"
#include "falldet/roc.hpp"
#include "helpers.hpp"

using namespace falldet;

namespace {

struct Data {
  FeatureMatrix x;
  std::vector<Label> labels;
  FeatureMatrix adl;
};

Data translated(Rng& rng, std::size_t n_adl, std::size_t n_fall, std::size_t d, double shift) {
  Data out;
  out.x = FeatureMatrix(n_adl + n_fall, d);
  for (std::size_t r = 0; r < n_adl + n_fall; ++r) {
    const bool fall = r >= n_adl;
    for (auto& v : out.x.row(r)) v = rng.normal(0.0, 1.0) + (fall ? shift : 0.0);
    out.labels.push_back(fall ? Label::Fall : Label::Adl);
    if (!fall) out.adl.push_back(out.x.row(r));
  }
  return out;
}

TrainedModel train(Variant v, const Data& d) {
  switch (v) {
    case Variant::OcKnn: return train_oc_knn(d.adl, 3);
    case Variant::TcKnn: return train_tc_knn(d.x, d.labels, 3);
    case Variant::OcSvm: return train_oc_svm(d.adl, 0.1, 0.1);
    case Variant::TcSvm: return train_tc_svm(d.x, d.labels, 1.0, 0.1);
  }
  throw std::logic_error("variant");
}

}  // namespace

TEST_CASE("variant names") {
  for (Variant v : kAllVariants) CHECK(parse_variant(to_string(v)) == v);
  CHECK(parse_variant("OC_SVM") == Variant::OcSvm);
  CHECK_THROWS_AS(parse_variant("rf"), InvalidArgument);
  CHECK(is_one_class(Variant::OcKnn));
  CHECK_FALSE(is_one_class(Variant::TcSvm));
  CHECK(is_svm(Variant::OcSvm));
}

TEST_CASE("one-class kNN scores") {
  const auto m1 = train_oc_knn(FeatureMatrix::from_rows({{0, 0}}), 1);
  CHECK(m1.score(std::vector<double>{3, 4}) == 5.0);
  CHECK(m1.score(std::vector<double>{0, 0}) == 0.0);
  const auto m2 = train_oc_knn(FeatureMatrix::from_rows({{0, 0}, {1, 0}}), 2);
  CHECK(m2.score(std::vector<double>{0, 1}) == doctest::Approx((1.0 + std::sqrt(2.0)) / 2.0));
  CHECK(m2.summary().adl_count == 2);
  CHECK(m2.summary().fall_count == 0);
  CHECK(m2.summary().hyperparameters.at("k") == 2.0);
  CHECK_THROWS_AS(train_oc_knn(FeatureMatrix::from_rows({{0, 0}}), 2), InvalidK);
  CHECK_THROWS_AS(train_oc_knn(FeatureMatrix::from_rows({{0, 0}}), 0), InvalidK);
}

TEST_CASE("two-class kNN scores") {
  const auto x = FeatureMatrix::from_rows({{0, 0}, {10, 0}});
  const std::vector<Label> labels{Label::Adl, Label::Fall};
  const auto m = train_tc_knn(x, labels, 1);
  CHECK(m.score(std::vector<double>{2, 0}) == doctest::Approx(0.2));
  CHECK(m.score(std::vector<double>{10, 0}) == 1.0);
  CHECK(m.score(std::vector<double>{5, 3}) == 0.5);
  CHECK(distance_ratio_score(0.0, 0.0) == 0.5);
  CHECK_THROWS_AS(train_tc_knn(x, labels, 2), InvalidK);
}

TEST_CASE("kNN scores are translation invariant") {
  Rng rng(41);
  const Data d = translated(rng, 40, 15, 6, 2.0);
  const std::vector<double> shift{3.5, -100.25, 7.0, 0.125, 1e3, -2.0};
  auto moved = [&](const FeatureMatrix& m) {
    FeatureMatrix out = m;
    for (std::size_t r = 0; r < out.rows(); ++r) {
      for (std::size_t j = 0; j < out.cols(); ++j) out.row(r)[j] += shift[j];
    }
    return out;
  };
  const auto oc = train_oc_knn(d.adl, 4);
  const auto oc2 = train_oc_knn(moved(d.adl), 4);
  const auto tc = train_tc_knn(d.x, d.labels, 4);
  const auto tc2 = train_tc_knn(moved(d.x), d.labels, 4);
  const auto queries = testing::gaussian_cloud(rng, 30, 6, 1.0);
  const auto moved_queries = moved(queries);
  for (std::size_t r = 0; r < queries.rows(); ++r) {
    CHECK(std::abs(oc.score(queries.row(r)) - oc2.score(moved_queries.row(r))) <= 1e-9);
    CHECK(std::abs(tc.score(queries.row(r)) - tc2.score(moved_queries.row(r))) <= 1e-9);
  }
}

TEST_CASE("every variant scores translated falls higher") {
  Rng rng(42);
  const Data train_set = translated(rng, 60, 30, 5, 6.0);
  const Data test_set = translated(rng, 40, 20, 5, 6.0);
  for (Variant v : kAllVariants) {
    CAPTURE(to_string(v));
    const auto model = train(v, train_set);
    if (is_one_class(v)) CHECK(model.summary().fall_count == 0);
    const auto scores = model.score_batch(test_set.x);
    double adl = 0.0, fall = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      CHECK(std::isfinite(scores[i]));
      (test_set.labels[i] == Label::Fall ? fall : adl) += scores[i];
    }
    CHECK(fall / 20.0 > adl / 40.0);
    CHECK(auc(roc_curve(scores, test_set.labels)) == 1.0);
  }
}

TEST_CASE("batch scoring") {
  Rng rng(43);
  const Data d = translated(rng, 30, 10, 4, 3.0);
  for (Variant v : kAllVariants) {
    const auto model = train(v, d);
    CHECK(model.score_batch(FeatureMatrix{}).empty());
    const auto one = FeatureMatrix::from_rows({{0.5, 0.5, 0.5, 0.5}});
    CHECK(model.score_batch(one) == std::vector<double>{model.score(one.row(0))});
    const auto all = model.score_batch(d.x);
    std::vector<std::size_t> reversed;
    for (std::size_t r = d.x.rows(); r-- > 0;) reversed.push_back(r);
    const auto back = model.score_batch(d.x.select(reversed));
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == back[all.size() - 1 - i]);
    CHECK_THROWS_AS(model.score(std::vector<double>{1.0}), DimensionError);
    CHECK_THROWS_AS(model.score_batch(FeatureMatrix::from_rows({{1.0, 2.0}})), DimensionError);
  }
}

TEST_CASE("models reload from JSON with identical scores") {
  Rng rng(44);
  const Data d = translated(rng, 30, 12, 4, 2.0);
  for (Variant v : kAllVariants) {
    const auto model = train(v, d);
    const auto doc = model.to_json();
    const auto back = TrainedModel::from_json(nlohmann::json::parse(doc.dump()));
    CHECK(back.variant() == v);
    CHECK(back.dimension() == 4);
    for (std::size_t r = 0; r < d.x.rows(); ++r) {
      CHECK(std::abs(back.score(d.x.row(r)) - model.score(d.x.row(r))) <= 1e-9);
    }
  }
}

TEST_CASE("two-class SVM on a separable toy set") {
  Rng rng(45);
  auto cluster = [&](double cx, std::size_t n, FeatureMatrix& x, std::vector<Label>& l, Label lab) {
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back(std::vector<double>{cx + rng.normal(0, 0.5), cx + rng.normal(0, 0.5)});
      l.push_back(lab);
    }
  };
  FeatureMatrix x, test;
  std::vector<Label> labels, test_labels;
  cluster(0.0, 20, x, labels, Label::Adl);
  cluster(10.0, 20, x, labels, Label::Fall);
  cluster(0.0, 20, test, test_labels, Label::Adl);
  cluster(10.0, 20, test, test_labels, Label::Fall);
  const auto model = train_tc_svm(x, labels, 10.0, 0.5);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    CHECK((model.score(x.row(r)) > 0.0) == (labels[r] == Label::Fall));
  }
  CHECK(auc(roc_curve(model.score_batch(test), test_labels)) == 1.0);
}

TEST_CASE("two points: the boundary is the bisector") {
  const auto x = FeatureMatrix::from_rows({{0.0, 0.0}, {2.0, 1.0}});
  const std::vector<Label> labels{Label::Adl, Label::Fall};
  const auto model = train_tc_svm(x, labels, 1e6, 0.5);
  CHECK(std::abs(model.score(std::vector<double>{1.0, 0.5})) <= 1e-3);
  CHECK(model.score(std::vector<double>{2.0, 1.0}) > 0.0);
}

TEST_CASE("duplicating the training set leaves the decision function unchanged") {
  Rng rng(46);
  FeatureMatrix x;
  std::vector<Label> labels;
  for (std::size_t i = 0; i < 40; ++i) {
    const bool fall = i >= 20;
    x.push_back(std::vector<double>{rng.normal(fall ? 4.0 : 0.0, 0.5), rng.normal(fall ? 4.0 : 0.0, 0.5)});
    labels.push_back(fall ? Label::Fall : Label::Adl);
  }
  FeatureMatrix doubled = x;
  std::vector<Label> doubled_labels = labels;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    doubled.push_back(x.row(r));
    doubled_labels.push_back(labels[r]);
  }
  // Large C keeps every multiplier off its bound, so the hard-margin optimum
  // is shared; the tolerance is tightened so both solves reach it.
  const SmoOptions tight{1e-10, 0, SmoOptions{}.cache_bytes};
  const auto a = train_tc_svm(x, labels, 1e4, 0.5, tight);
  const auto b = train_tc_svm(doubled, doubled_labels, 1e4, 0.5, tight);
  const auto probes = testing::gaussian_cloud(rng, 50, 2, 2.0, 2.0);
  for (std::size_t r = 0; r < probes.rows(); ++r) {
    CHECK(std::abs(a.score(probes.row(r)) - b.score(probes.row(r))) <= 1e-6);
  }
}

TEST_CASE("one-class SVM") {
  Rng rng(47);
  const auto x = testing::gaussian_cloud(rng, 200, 3);
  const auto model = train_oc_svm(x, 0.1, 0.5);
  CHECK(model.score(std::vector<double>{0, 0, 0}) < model.score(std::vector<double>{6, 6, 6}));
  CHECK(model.summary().hyperparameters.at("nu") == 0.1);
  CHECK(model.summary().hyperparameters.at("gamma") == 0.5);

  for (double nu : {0.05, 0.5, 1.0}) {
    const auto twin = train_oc_svm(FeatureMatrix::from_rows({{1.0, 2.0}, {1.0, 2.0}}), nu, 1.0);
    const auto* svm = twin.svm();
    REQUIRE(svm);
    REQUIRE(svm->alpha.size() == 2);
    CHECK(svm->alpha[0] == doctest::Approx(0.5));
    CHECK(svm->alpha[1] == doctest::Approx(0.5));
  }
  CHECK_THROWS_AS(train_oc_svm(x, 0.0, 0.5), InvalidNu);
}

TEST_CASE("hitting the iteration cap is reported, not thrown") {
  Rng rng(48);
  const Data d = translated(rng, 50, 50, 3, 0.3);
  const auto model = train_tc_svm(d.x, d.labels, 100.0, 1.0, SmoOptions{1e-3, 3, SmoOptions{}.cache_bytes});
  CHECK_FALSE(model.summary().converged);
  CHECK(model.summary().warning.rfind("ConvergenceWarning", 0) == 0);
  CHECK(std::isfinite(model.score(d.x.row(0))));
}

TEST_CASE("kNN and SVM scoring is deterministic") {
  Rng rng(49);
  const Data d = translated(rng, 40, 20, 3, 1.0);
  for (Variant v : kAllVariants) {
    CHECK(train(v, d).score_batch(d.x) == train(v, d).score_batch(d.x));
  }
}
