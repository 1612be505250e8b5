#include <doctest.h>

#include <random>

#include "explink/core.hpp"
#include "test_util.hpp"

using namespace explink;

namespace {

PairDataset tiny_pair_dataset() {
  PairDataset data;
  data.point_ids = {7, 9};
  data.labels = {0, 1};
  data.blocks = {0, 0};
  data.pair_features[{0, 1}] = {0.2, 0.8};
  return data;
}

}  // namespace

TEST_CASE("pair feature is the elementwise absolute difference") {
  CHECK(abs_diff({1, 3}, {4, 1}) == Vec{3, 2});
  CHECK(abs_diff({1, 3}, {4, 1}) == abs_diff({4, 1}, {1, 3}));
}

TEST_CASE("pair dataset feature lookup is symmetric and checked") {
  const auto data = tiny_pair_dataset();
  CHECK(data.feature(0, 1) == Vec{0.2, 0.8});
  CHECK(data.feature(1, 0) == Vec{0.2, 0.8});
  CHECK_THROWS_AS(data.feature(0, 0), std::invalid_argument);
}

TEST_CASE("cross-block pair lookup is a domain error") {
  PairDataset data = tiny_pair_dataset();
  data.blocks = {0, 1};
  data.pair_features.clear();
  CHECK_THROWS_AS(data.feature(0, 1), std::invalid_argument);
}

TEST_CASE("pair dataset validation reports a missing within-block pair") {
  PairDataset data = tiny_pair_dataset();
  data.pair_features.clear();
  CHECK_THROWS_WITH_AS(data.validate(), doctest::Contains("(7,9)"),
                       std::runtime_error);
}

TEST_CASE("linear model with zero weights returns the bias") {
  const auto model = DissimilarityModel::linear_from({0, 0}, 3.5);
  CHECK(model.score_feature({1, 2}) == 3.5);
  CHECK(model.score_feature({-4, 9}) == 3.5);
}

TEST_CASE("identity Mahalanobis is squared Euclidean") {
  const auto model = DissimilarityModel::mahalanobis_from({1, 0, 0, 1}, 2);
  CHECK(model.score_points({0, 0}, {3, 4}) == doctest::Approx(25.0));
}

TEST_CASE("linear model evaluates the dot product plus bias") {
  const auto model = DissimilarityModel::linear_from({1, -2}, 0.5);
  CHECK(model.score_feature({2, 1}) == doctest::Approx(0.5));
}

TEST_CASE("dimension mismatch is a domain error") {
  const auto model = DissimilarityModel::linear_from({1, -2}, 0.5);
  CHECK_THROWS_AS(model.score_feature({1, 2, 3}), std::invalid_argument);
  const auto mah = DissimilarityModel::mahalanobis_from({1, 0, 0, 1}, 2);
  CHECK_THROWS_AS(mah.score_points({1}, {2}), std::invalid_argument);
}

TEST_CASE("linear gradient is the feature with a trailing 1") {
  const auto model = DissimilarityModel::linear_from({1, -2}, 0.5);
  CHECK(model.feature_gradient({3, 2}) == Vec{3, 2, 1});
}

TEST_CASE("identity Mahalanobis gradient on a unit difference") {
  const auto model = DissimilarityModel::mahalanobis_from({1, 0, 0, 1}, 2);
  CHECK(model.point_gradient({1, 0}, {0, 0}) == Vec{2, 0, 0, 0});
}

TEST_CASE("model gradients match central finite differences") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 3;
    auto a = testutil::random_vec(rng, d * d, -1.0, 1.0);
    const auto x = testutil::random_vec(rng, d, -2.0, 2.0);
    const auto y = testutil::random_vec(rng, d, -2.0, 2.0);
    auto model = DissimilarityModel::mahalanobis_from(a, d);
    const Vec grad = model.point_gradient(x, y);
    for (int k = 0; k < d * d; ++k) {
      const double num = testutil::central_diff(
          [&](double v) {
            Vec p = a;
            p[k] = v;
            return DissimilarityModel::mahalanobis_from(p, d).score_points(x, y);
          },
          a[k]);
      CHECK(testutil::grad_close(grad[k], num, 1e-5));
    }
  }
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 4;
    auto w = testutil::random_vec(rng, d, -1.0, 1.0);
    const double b = testutil::random_vec(rng, 1, -1.0, 1.0)[0];
    const auto phi = testutil::random_vec(rng, d, 0.0, 2.0);
    const auto model = DissimilarityModel::linear_from(w, b);
    const Vec grad = model.feature_gradient(phi);
    for (int k = 0; k < d; ++k) {
      const double num = testutil::central_diff(
          [&](double v) {
            Vec ww = w;
            ww[k] = v;
            return DissimilarityModel::linear_from(ww, b).score_feature(phi);
          },
          w[k]);
      CHECK(testutil::grad_close(grad[k], num, 1e-5));
    }
  }
}

TEST_CASE("Mahalanobis dissimilarity is symmetric, nonnegative, zero at x=x") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 3;
    const auto model = DissimilarityModel::mahalanobis_from(
        testutil::random_vec(rng, d * d, -2.0, 2.0), d);
    const auto x = testutil::random_vec(rng, d, -3.0, 3.0);
    const auto y = testutil::random_vec(rng, d, -3.0, 3.0);
    CHECK(model.score_points(x, y) == doctest::Approx(model.score_points(y, x)));
    CHECK(model.score_points(x, y) >= 0.0);
    CHECK(model.score_points(x, x) == 0.0);
  }
}

TEST_CASE("averaged parameters are the mean over update steps") {
  auto model = DissimilarityModel::linear_from({1, 1}, 0);
  const Vec grad{1, 2, 3};
  // identical updates: the average equals the single-update parameters
  model.apply_update(grad, 0.0);
  model.apply_update(grad, 0.0);
  model.apply_update(grad, 0.0);
  CHECK(model.averaged().params() == model.params());

  auto m2 = DissimilarityModel::linear_from({0}, 0);
  m2.apply_update({1, 0}, 1.0);  // params (-1, 0)
  m2.apply_update({1, 0}, 1.0);  // params (-2, 0)
  CHECK(m2.averaged().params() == Vec{-1.5, 0});
  CHECK(m2.update_count() == 2);
}

TEST_CASE("point dataset validation catches ragged rows and label gaps") {
  PointDataset data;
  data.points = {{1, 2}, {3}};
  data.labels = {0, 1};
  CHECK_THROWS_AS(data.validate(), std::invalid_argument);
  data.points = {{1, 2}, {3, 4}};
  data.labels = {0, 2};
  CHECK_THROWS_AS(data.validate(), std::invalid_argument);
  data.labels = {0, 1};
  CHECK_NOTHROW(data.validate());
}

TEST_CASE("dataset view dissimilarity is symmetric") {
  PointDataset data;
  data.points = {{0.0, 1.0}, {2.0, 5.0}, {1.0, -1.0}};
  data.labels = {0, 0, 1};
  const DatasetView view(data);
  const auto model = DissimilarityModel::linear_from({0.7, -0.2}, 0.1);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      CHECK(view.dissim(model, i, j) == doctest::Approx(view.dissim(model, j, i)));
    }
  }
}

TEST_CASE("view ground truth partitions all pairs") {
  PointDataset data;
  data.points = {{0.}, {1.}, {2.}, {3.}};
  data.labels = {0, 0, 1, 1};
  const auto gt = DatasetView(data).ground_truth();
  CHECK(gt.partition.size() == 2);
  CHECK(gt.within_pairs.size() == 2);
  CHECK(gt.across_pairs.size() == 4);
}
