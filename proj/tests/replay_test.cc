#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "invevolve/errors.h"
#include "invevolve/replay.h"
#include "invevolve/xi.h"

namespace iv = invevolve;

namespace {

iv::GainSamples Pair(std::vector<double> z, std::optional<double> bound = {}) {
  return {iv::BaseStock{5}, iv::BaseStock{6}, std::move(z), bound};
}

}  // namespace

TEST_CASE("replay mean and biased variance") {
  auto [m, v] = iv::ReplayMeanVar(std::vector<double>{2, 4});
  CHECK(m == 3.0);
  CHECK(v == 1.0);
  std::tie(m, v) = iv::ReplayMeanVar(std::vector<double>{1.7, 1.7, 1.7});
  CHECK(m == doctest::Approx(1.7));
  CHECK(v == doctest::Approx(0.0));
  std::tie(m, v) = iv::ReplayMeanVar(std::vector<double>{-1, 0, 1});
  CHECK(m == 0.0);
  CHECK(v == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(iv::ReplayMeanVar(std::vector<double>{}), iv::InputError);
}

TEST_CASE("Hoeffding radius values and monotonicity") {
  CHECK(iv::HoeffdingRadius(10, 100, 25, 0.05) == doctest::Approx(3.7170).epsilon(3e-4));
  const double r = iv::HoeffdingRadius(1, 40, 9, 0.1);
  CHECK(iv::HoeffdingRadius(1, 160, 9, 0.1) == doctest::Approx(r / 2));
  // m = 2 ln(2N/delta) gives radius 1 for B = 1; choose N, delta to make m integral.
  const double delta = 2.0 * 5 / std::exp(10.0);
  CHECK(iv::HoeffdingRadius(1, 20, 5, delta) == doctest::Approx(1.0));
  CHECK(iv::HoeffdingRadius(1, 50, 9, 0.1) < r);
  CHECK(iv::HoeffdingRadius(2, 40, 9, 0.1) > r);
  CHECK(iv::HoeffdingRadius(1, 40, 10, 0.1) > r);
  CHECK(iv::HoeffdingRadius(1, 40, 9, 0.2) < r);
  CHECK_THROWS_AS(iv::HoeffdingRadius(1, 10, 0, 0.1), iv::InputError);
  CHECK_THROWS_AS(iv::HoeffdingRadius(1, 10, 2, 1.0), iv::InputError);
  CHECK_THROWS_AS(iv::HoeffdingRadius(0, 10, 2, 0.5), iv::InputError);
}

TEST_CASE("t quantile agrees with the boost oracle") {
  CHECK(iv::TQuantile(0.5, 7) == 0.0);
  CHECK(iv::TQuantile(0.975, 13) == doctest::Approx(2.1604).epsilon(5e-4));
  CHECK(iv::TQuantile(0.95, 1) == doctest::Approx(std::tan(M_PI * 0.45)).epsilon(1e-9));
  for (int dof : {1, 2, 3, 5, 8, 13, 30, 100, 1000}) {
    boost::math::students_t dist(dof);
    for (double p : {0.001, 0.05, 0.3, 0.6, 0.9, 0.975, 0.999, 0.99998}) {
      CHECK(iv::TQuantile(p, dof) ==
            doctest::Approx(boost::math::quantile(dist, p)).epsilon(1e-7));
    }
  }
  const double z = boost::math::quantile(boost::math::normal(), 0.975);
  // The exact gap at 1000 dof is 2.375e-3; it shrinks monotonically in dof.
  CHECK(std::fabs(iv::TQuantile(0.975, 1000) - z) < 2.5e-3);
  CHECK(iv::TQuantile(0.975, 1000) - z < iv::TQuantile(0.975, 100) - z);
  CHECK(std::fabs(iv::TQuantile(0.975, 100000) - z) < 2.5e-5);
  CHECK_THROWS_AS(iv::TQuantile(1.0, 3), iv::InputError);
  CHECK_THROWS_AS(iv::TQuantile(0.4, 0), iv::InputError);
}

TEST_CASE("incomplete beta matches the boost oracle") {
  for (double a : {0.5, 1.0, 3.5, 20.0}) {
    for (double b : {0.5, 2.0, 7.0}) {
      boost::math::beta_distribution<> dist(a, b);
      for (double x : {1e-6, 0.1, 0.5, 0.77, 0.999}) {
        CHECK(iv::RegularizedIncompleteBeta(a, b, x) ==
              doctest::Approx(boost::math::cdf(dist, x)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("blockwise-t bound") {
  CHECK(iv::BlockSize(4) == 7);
  CHECK(iv::BlockSize(9) == 10);

  const std::vector<double> c(30, 2.5);
  auto cb = iv::BlockwiseTBound(c, 2, 10, 0.05, 1.0);
  CHECK(cb.radius == 0.0);
  CHECK(cb.lcb == 2.5);
  CHECK(cb.ucb == 2.5);

  std::vector<double> z(100);
  for (int i = 0; i < 100; ++i) z[i] = (i * 37 % 11) - 5.0;
  cb = iv::BlockwiseTBound(z, 3, 25, 0.05, 10.0);
  CHECK(cb.blocks == 14);
  CHECK(cb.method == iv::CertMethod::kBlockwiseT);
  // Oracle: block means with the last block holding 7 + 2 samples.
  std::vector<double> means;
  for (int k = 0; k < 14; ++k) {
    const int end = k == 13 ? 100 : 7 * (k + 1);
    double s = 0;
    for (int i = 7 * k; i < end; ++i) s += z[i];
    means.push_back(s / (end - 7 * k));
  }
  double gbar = 0;
  for (double g : means) gbar += g / 14;
  double ss = 0;
  for (double g : means) ss += (g - gbar) * (g - gbar);
  const double s = std::sqrt(ss / 13);
  const double t = boost::math::quantile(boost::math::students_t(13), 1 - 0.05 / 50);
  CHECK(cb.mean == doctest::Approx(gbar));
  CHECK(cb.radius == doctest::Approx(t * s / std::sqrt(14.0)));
  CHECK(cb.lcb == doctest::Approx(gbar - cb.radius));

  const std::vector<double> few(10, 1.0);
  cb = iv::BlockwiseTBound(few, 0, 4, 0.1, 3.0);
  CHECK(cb.fell_back);
  CHECK(cb.method == iv::CertMethod::kHoeffding);
  CHECK(cb.radius == doctest::Approx(iv::HoeffdingRadius(3.0, 10, 4, 0.1)));
}

TEST_CASE("evaluation budget") {
  CHECK(iv::EvaluationBudget(6, 60) == 125);
  CHECK(iv::EvaluationBudget(1, 1) == 2);
  CHECK_THROWS_AS(iv::EvaluationBudget(2, 0), iv::InputError);
}

TEST_CASE("confidence bound composition") {
  iv::GainSamples self{iv::CappedBaseStock{5, 100}, iv::BaseStock{5}, {3, -1, 4}, {}};
  auto cb = iv::ComputeConfidenceBound(self, 10, 0.05, iv::CertMethod::kHoeffding, 0);
  CHECK(cb.mean == 0.0);
  CHECK(cb.radius == 0.0);
  CHECK(cb.lcb == 0.0);
  CHECK(cb.ucb == 0.0);

  cb = iv::ComputeConfidenceBound(Pair({2, 4}, 4.0), 1, 0.5,
                                  iv::CertMethod::kHoeffding, 0);
  CHECK(cb.mean == 3.0);
  CHECK(cb.radius == doctest::Approx(iv::HoeffdingRadius(4.0, 2, 1, 0.5)));
  CHECK(cb.lcb == cb.mean - cb.radius);
  CHECK(cb.ucb == cb.mean + cb.radius);

  cb = iv::ComputeConfidenceBound(Pair({0}, 1.0), 1, 0.5, iv::CertMethod::kHoeffding, 0);
  CHECK(cb.mean == 0.0);
  CHECK(cb.lcb == -cb.ucb);

  cb = iv::ComputeConfidenceBound(Pair({1, -2, 0.5}), 3, 0.1, iv::CertMethod::kHoeffding, 0);
  CHECK(cb.bound == doctest::Approx(3.0));
  CHECK(cb.bound_inferred);
  CHECK_THROWS_AS(iv::ComputeConfidenceBound(Pair({5}, 1.0), 1, 0.1,
                                             iv::CertMethod::kHoeffding, 0),
                  iv::InputError);
  CHECK(iv::DefaultCertMethod(100) == iv::CertMethod::kBlockwiseT);
  CHECK(iv::DefaultCertMethod(365) == iv::CertMethod::kHoeffding);
  CHECK(cb.ToJson()["method"] == "hoeffding");
}

TEST_CASE("Hoeffding joint coverage on bounded gains") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int reps = 2000, n_pairs = 25, m = 50;
  const double delta = 0.05;
  const double rad = iv::HoeffdingRadius(1.0, m, n_pairs, delta);
  int covered = 0;
  for (int r = 0; r < reps; ++r) {
    bool all = true;
    for (int k = 0; k < n_pairs; ++k) {
      const double mu = 0.3 * (k % 3) - 0.3;
      double s = 0;
      for (int i = 0; i < m; ++i) s += std::clamp(mu + 0.7 * u(rng), -1.0, 1.0);
      // Clamping is inactive: |mu| + 0.7 <= 1.
      all &= std::fabs(s / m - mu) <= rad;
    }
    covered += all;
  }
  const double freq = static_cast<double>(covered) / reps;
  CHECK(freq >= 1 - delta - 3 * std::sqrt(delta * (1 - delta) / reps));
}

TEST_CASE("historical xi") {
  auto e = iv::XiHistorical(std::vector<double>{0.1, 0.2, 0.3, 0.4}, 0.25);
  CHECK(e.value == 0.3);
  CHECK(iv::XiHistorical(std::vector<double>{0.7}, 0.5).value == 0.7);
  CHECK(iv::XiHistorical(std::vector<double>{0.1, 0.9, 0.4}, 1e-9).value == 0.9);
  e = iv::XiHistorical(std::vector<double>{}, 0.1);
  CHECK(e.value == 0.0);
  CHECK(e.cold_start);
}

TEST_CASE("shift-conditioned xi") {
  std::vector<iv::XiCalibrationPair> cal;
  for (int i = 0; i < 20; ++i) cal.push_back({{0.25 * i}, 2.0 * 0.25 * i});
  const std::vector<double> probe{3.0};
  CHECK(iv::XiShift(cal, probe, 0.1, 0.0).value == doctest::Approx(6.0).epsilon(0.05));
  CHECK(iv::XiShift(cal, probe, 0.1, 0.0, 5).value ==
        doctest::Approx(iv::XiShift(cal, probe, 0.1, 0.0, 5).value));

  std::vector<iv::XiCalibrationPair> zeros(8, {{1.0, 2.0}, 0.0});
  zeros[3].shift_features = {4.0, -1.0};
  CHECK(iv::XiShift(zeros, std::vector<double>{2.0, 2.0}, 0.1, 0.25).value == 0.25);

  const std::vector<iv::XiCalibrationPair> three{{{1.0}, 0.2}, {{2.0}, 0.5}, {{3.0}, 0.1}};
  const auto fb = iv::XiShift(three, std::vector<double>{1.0}, 0.3, 0.0);
  CHECK(fb.fell_back);
  CHECK(fb.value == iv::XiHistorical(std::vector<double>{0.2, 0.5, 0.1}, 0.3).value);

  CHECK_THROWS_AS(iv::XiShift(cal, std::vector<double>{1.0, 2.0}, 0.1, 0.0),
                  iv::InputError);

  const auto budget = iv::CombineXi({0.3}, {0.7}, 0.1, 8, 0.0);
  CHECK(budget.xi == 0.7);
  CHECK(iv::CombineXi({0.9}, {0.2}, 0.1, 8, 0.0).xi == 0.9);
}

TEST_CASE("oracle xi") {
  using M = std::map<std::string, double>;
  CHECK(iv::XiOracle(M{{"a", 1.0}}, M{{"a", 1.4}}, 0.0) == doctest::Approx(0.4));
  CHECK(iv::XiOracle(M{{"a", 1.0}, {"b", 2.0}}, M{{"a", 1.0}, {"b", 2.0}}, 0.0) == 0.0);
  CHECK(iv::XiOracle(M{{"a", 0.0}, {"b", 0.0}}, M{{"a", 0.1}, {"b", -0.5}}, 0.0) ==
        doctest::Approx(0.5));
  CHECK_THROWS_AS(iv::XiOracle(M{{"a", 0.0}}, M{{"b", 0.0}}, 0.0), iv::InputError);
}
