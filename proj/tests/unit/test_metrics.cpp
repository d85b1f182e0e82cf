#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <random>

#include "epf/error.hpp"
#include "epf/metrics.hpp"

using namespace epf;

TEST_CASE("rmse and mae hand values") {
  const std::vector<double> y = {1, 2, 3};
  const std::vector<double> p = {2, 2, 2};
  CHECK(rmse(y, p) == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  CHECK(rmse(y, p) == doctest::Approx(0.816497).epsilon(1e-6));
  CHECK(mae(y, p) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(rmse(y, y) == 0.0);
  CHECK(mae(y, y) == 0.0);
  CHECK(rmse(std::vector<double>{0}, std::vector<double>{3}) == 3.0);
  CHECK(mae(std::vector<double>{0}, std::vector<double>{3}) == 3.0);
  CHECK_THROWS_AS(rmse(y, std::vector<double>{1}), Error);
  CHECK_THROWS_AS(mae(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST_CASE("rmse >= mae and translation invariance") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(1 + rng() % 50), b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = n(rng);
      b[i] = n(rng);
    }
    CHECK(rmse(a, b) >= mae(a, b));
    auto a2 = a, b2 = b;
    for (std::size_t i = 0; i < a.size(); ++i) {
      a2[i] += 37.5;
      b2[i] += 37.5;
    }
    CHECK(std::abs(rmse(a2, b2) - rmse(a, b)) < 1e-12);
    CHECK(std::abs(mae(a2, b2) - mae(a, b)) < 1e-12);
  }
}

TEST_CASE("spike threshold") {
  std::vector<double> v;
  for (int i = 10; i <= 100; i += 10) v.push_back(i);
  CHECK(resolve_spike_threshold(v, 0.9) == 90.0);
  const std::vector<double> flat(7, 4.0);
  CHECK(resolve_spike_threshold(flat, 0.9) == 4.0);
  for (bool b : spike_labels(flat, 4.0)) CHECK_FALSE(b);
  CHECK(resolve_spike_threshold(std::vector<double>{3.5}, 0.2) == 3.5);
  CHECK_THROWS_AS(resolve_spike_threshold(std::vector<double>{}, 0.9), Error);
  CHECK_THROWS_AS(resolve_spike_threshold(v, 1.5), Error);
}

TEST_CASE("raising the quantile never adds positives") {
  std::mt19937_64 rng(4);
  std::lognormal_distribution<double> d(4.0, 0.6);
  std::vector<double> train(500), test(300);
  for (auto& x : train) x = d(rng);
  for (auto& x : test) x = d(rng);
  std::size_t previous = test.size() + 1;
  for (double q = 0.05; q < 1.0; q += 0.05) {
    const auto labels = spike_labels(test, resolve_spike_threshold(train, q));
    const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
    CHECK(positives <= previous);
    previous = positives;
  }
}

TEST_CASE("confusion counts") {
  const auto c = confusion_from_labels({true, false, true, false}, {true, false, false, true});
  CHECK(c == ConfusionCounts{1, 1, 1, 1});
  const auto same = confusion_from_labels({true, false, true}, {true, false, true});
  CHECK(same.fp == 0);
  CHECK(same.fn == 0);
  const auto misses = confusion_from_labels({true, true, true}, {false, false, false});
  CHECK(misses == ConfusionCounts{0, 0, 0, 3});
  CHECK_THROWS_AS(confusion_from_labels({true}, {true, false}), Error);
}

TEST_CASE("classification metrics") {
  const auto m = classification_metrics(ConfusionCounts{5, 3, 90, 2});
  CHECK(m.accuracy == doctest::Approx(0.95).epsilon(1e-15));
  CHECK(m.precision == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(m.recall == doctest::Approx(5.0 / 7.0).epsilon(1e-15));
  CHECK(m.f_score == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  const auto none = classification_metrics(ConfusionCounts{0, 0, 10, 0});
  CHECK(none.accuracy == 1.0);
  CHECK(none.precision == 0.0);
  CHECK(none.precision_undefined);
  CHECK(none.recall == 0.0);
  CHECK(none.recall_undefined);
  CHECK(none.f_score == 0.0);
  CHECK(none.f_score_undefined);

  CHECK_THROWS_AS(classification_metrics(ConfusionCounts{}), Error);
}

TEST_CASE("f score properties") {
  CHECK(f_score(0.28, 0.96) == doctest::Approx(2 * 0.28 * 0.96 / 1.24).epsilon(1e-15));
  CHECK(f_score(0.0, 0.0) == 0.0);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double p = u(rng), r = u(rng);
    CHECK(f_score(p, r) == f_score(r, p));
    CHECK(f_score(p, r) <= 1.0);
    CHECK(f_score(p, r) <= 2.0 * std::min(p, r) + 1e-15);
  }
}

TEST_CASE("full report and serialization") {
  const std::vector<double> a = {10, 50, 120, 80, 200};
  const auto same = full_report(a, a, 100.0);
  CHECK(same.rmse == 0.0);
  CHECK(same.classification.accuracy == 1.0);
  CHECK(same.confusion.fp == 0);
  CHECK(same.confusion.fn == 0);
  CHECK(same.confusion.tp == 2);

  const auto doc = nlohmann::json::parse(same.to_json());
  CHECK(doc.at("rmse").get<double>() == 0.0);
  CHECK(doc.at("spike_threshold").get<double>() == 100.0);
  for (const auto& [key, value] : doc.items()) CHECK_FALSE(value.is_object());
}

TEST_CASE("comparison table layout") {
  MetricsReport r;
  r.rmse = 1.5;
  r.mae = 0.5;
  r.classification.accuracy = 0.9708;
  r.classification.precision = 0.28;
  r.classification.recall = 0.96;
  r.classification.f_score = 0.43;
  const std::string csv = comparison_csv({{"LSTM+AlexNet", r}});
  CHECK(csv.rfind("Algorithm,Accuracy (%),Precision,Recall,F-Score,RMSE,MAE\n", 0) == 0);
  CHECK(csv.find("LSTM+AlexNet,97.08,0.2800,0.9600,0.4300,1.500000,0.500000\n") != std::string::npos);
}
