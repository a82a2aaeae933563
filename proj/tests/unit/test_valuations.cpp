#include <doctest.h>

#include <cmath>

#include "fairauction/valuations.hpp"
#include "oracles.hpp"

using namespace fairauction;

using testing::quadrature_myerson;

TEST_CASE("named settings carry their documented shapes and supports") {
  const SettingSpec a = setting_a();
  CHECK(a.agents == 1);
  CHECK(a.items == 2);
  CHECK(a.bidder_type == BidderType::Additive);
  CHECK(a.support().low == std::vector<double>{0.0, 0.0});
  CHECK(a.support().high == std::vector<double>{1.0, 1.0});

  const SettingSpec b = setting_b();
  CHECK(b.bidder_type == BidderType::UnitDemand);
  CHECK(b.support().low == std::vector<double>{2.0, 2.0});
  CHECK(b.support().high == std::vector<double>{3.0, 3.0});

  const SettingSpec c = setting_c(4, 5);
  CHECK(c.agents == 4);
  CHECK(c.items == 5);

  for (const SettingSpec& s : {setting_d(0.5), setting_e(0.5), setting_f(0.5)}) {
    CHECK(s.agents == 3);
    CHECK(s.items == 4);
    CHECK(s.feature1 == std::vector<int>{0, 0, 1, 1});
  }
  CHECK(setting_d(0).feature2 == std::vector<int>{0, 1, 0, 1});
  CHECK(setting_e(0).feature2 == std::vector<int>{1, 1, 0, 1});
  CHECK(setting_f(0).feature2 == std::vector<int>{0, 1, 0, 1});
  CHECK(setting_by_id("E", 0, 0, 0.25).shift == 0.25);
  CHECK_THROWS_AS(setting_by_id("G", 1, 1, 0.0), std::invalid_argument);
}

TEST_CASE("samples stay inside the support") {
  for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
    const diff::Tensor a = sample_profiles(setting_a(), 2000, seed);
    for (double v : a.values()) CHECK((v >= 0.0 && v <= 1.0));
    const diff::Tensor b = sample_profiles(setting_b(), 2000, seed);
    for (double v : b.values()) CHECK((v >= 2.0 && v <= 3.0));
  }
  const diff::Tensor d = sample_profiles(setting_d(1.0), 2000, 4);
  for (std::size_t l = 0; l < 2000; ++l)
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK((d.at(l, i, 0) >= 0.0 && d.at(l, i, 0) <= 1.0));
      CHECK((d.at(l, i, 1) >= 0.0 && d.at(l, i, 1) <= 1.0));
      CHECK((d.at(l, i, 2) >= 1.0 && d.at(l, i, 2) <= 2.0));
      CHECK((d.at(l, i, 3) >= 1.0 && d.at(l, i, 3) <= 2.0));
    }
}

TEST_CASE("sampling is deterministic per seed and streams are independent") {
  const SettingSpec s = setting_c(2, 3);
  CHECK(sample_profiles(s, 50, 7) == sample_profiles(s, 50, 7));
  CHECK_FALSE(sample_profiles(s, 50, 7) == sample_profiles(s, 50, 8));
  CHECK_FALSE(sample_profiles(s, 50, 7, Stream::TrainingData) == sample_profiles(s, 50, 7, Stream::Holdout));
  // A longer draw from one stream starts with the shorter draw.
  const diff::Tensor longer = sample_profiles(s, 80, 7);
  const diff::Tensor shorter = sample_profiles(s, 50, 7);
  for (std::size_t k = 0; k < shorter.size(); ++k) CHECK(longer[k] == shorter[k]);
}

TEST_CASE("empirical means sit within three standard errors") {
  const std::size_t count = 100000;
  for (const SettingSpec& s : {setting_a(), setting_b(), setting_d(0.75)}) {
    const diff::Tensor v = sample_profiles(s, count, 21);
    const SupportBox box = s.support();
    for (std::size_t j = 0; j < s.items; ++j) {
      double sum = 0.0;
      for (std::size_t l = 0; l < count; ++l) sum += v.at(l, 0, j);
      const double mean = sum / count;
      const double sigma = box.width(j) / std::sqrt(12.0) / std::sqrt(static_cast<double>(count));
      CHECK(std::abs(mean - 0.5 * (box.low[j] + box.high[j])) <= 3.0 * sigma);
    }
  }
}

TEST_CASE("invalid settings are rejected") {
  SettingSpec neg = setting_d(0.0);
  neg.shift = -0.5;
  CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
  SettingSpec len = setting_d(0.0);
  len.feature1 = {0, 1};
  CHECK_THROWS_AS(len.validate(), std::invalid_argument);
  SettingSpec nonbin = setting_d(0.0);
  nonbin.feature2 = {0, 2, 0, 1};
  CHECK_THROWS_AS(nonbin.validate(), std::invalid_argument);
  SettingSpec gauss = setting_a();
  gauss.distribution = "normal";
  CHECK_THROWS_AS(gauss.validate(), std::invalid_argument);
  CHECK_THROWS_AS(itemwise_myerson_revenue(gauss, 10, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_profiles(setting_a(), 0, 0), std::invalid_argument);
}

TEST_CASE("Myerson reserve and closed form") {
  CHECK(myerson_reserve(0.0, 1.0) == 0.5);
  CHECK(myerson_reserve(2.0, 3.0) == 2.0);
  CHECK(myerson_reserve(1.0, 2.0) == 1.0);
  CHECK(myerson_revenue_uniform01(1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(myerson_revenue_uniform01(2) == doctest::Approx(5.0 / 12.0).epsilon(1e-15));
  for (std::size_t n = 1; n <= 6; ++n) {
    CHECK(myerson_revenue_uniform01(n) == doctest::Approx(quadrature_myerson(n, 0.5)).epsilon(1e-9));
  }
}

TEST_CASE("Monte Carlo Myerson agrees with the quadrature oracle") {
  for (std::size_t n : {1u, 2u, 3u, 5u}) {
    const MyersonEstimate est = itemwise_myerson_revenue(setting_c(n, 1), 200000, 3);
    CHECK(std::abs(est.revenue - quadrature_myerson(n, 0.5)) <= 4.0 * est.std_error);
    CHECK(est.std_error > 0.0);
  }
  const MyersonEstimate one = itemwise_myerson_revenue(setting_c(1, 2), 200000, 5);
  CHECK(one.revenue == doctest::Approx(0.50).epsilon(0.01));
  const MyersonEstimate two = itemwise_myerson_revenue(setting_c(2, 2), 200000, 5);
  CHECK(two.revenue == doctest::Approx(0.83).epsilon(0.01));
  CHECK(itemwise_myerson_revenue(setting_a(), 1000, 9).revenue == itemwise_myerson_revenue(setting_a(), 1000, 9).revenue);
}
