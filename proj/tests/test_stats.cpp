#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "gradkit/errors.hpp"
#include "gradkit/stats.hpp"
#include "oracles.hpp"

using namespace gradkit;

namespace {

std::vector<double> random_sample(std::mt19937_64& rng, size_t n, double mu,
                                  double sigma) {
  std::normal_distribution<double> dist(mu, sigma);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

}  // namespace

TEST_CASE("mean_activation matches direct summation") {
  CHECK(mean_activation(std::vector<double>{4.25}) == 4.25);
  CHECK(mean_activation(std::vector<double>{1.0, 3.0}) == 2.0);

  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    size_t n = 100;
    double mu = std::uniform_real_distribution<double>(-50.0, 50.0)(rng);
    double sigma = std::uniform_real_distribution<double>(0.001, 30.0)(rng);
    auto xs = random_sample(rng, n, mu, sigma);
    double got = mean_activation(xs);
    double want = oracle::mean_direct(xs);
    CHECK(std::fabs(got - want) <= 1e-12 * std::fmax(1.0, std::fabs(want)));
  }

  CHECK_THROWS_AS(mean_activation(std::vector<double>{}), empty_group);
}

TEST_CASE("sample_variance is the unbiased estimator") {
  // hand example: {1, 2, 3, 4} has mean 2.5, ssq 5, variance 5/3
  CHECK(sample_variance(std::vector<double>{1, 2, 3, 4}) ==
        doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK(sample_variance(std::vector<double>{7.0, 7.0, 7.0}) == 0.0);

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto xs = random_sample(rng, 64, 3.0, 11.0);
    CHECK(sample_variance(xs) ==
          doctest::Approx(oracle::variance_direct(xs)).epsilon(1e-12));
  }

  CHECK_THROWS_AS(sample_variance(std::vector<double>{1.0}), empty_group);
}

TEST_CASE("student t tail matches numerical integration") {
  // df = 1 is Cauchy, where the two-sided tail has a closed form
  for (double t : {0.0, 0.3, 1.0, 2.5, 14.0}) {
    double closed = 1.0 - 2.0 / M_PI * std::atan(t);
    CHECK(student_t_two_sided_p(t, 1.0) ==
          doctest::Approx(closed).epsilon(1e-10));
  }

  CHECK(student_t_two_sided_p(0.0, 5.0) == doctest::Approx(1.0));

  std::mt19937_64 rng(99);
  double prev = 2.0;
  for (double t = 0.0; t <= 6.0; t += 0.5) {
    double p = student_t_two_sided_p(t, 7.3);
    CHECK(p <= prev);  // monotone in |t|
    CHECK(p == doctest::Approx(student_t_two_sided_p(-t, 7.3)));
    prev = p;
  }

  for (int trial = 0; trial < 100; ++trial) {
    double t = std::uniform_real_distribution<double>(-8.0, 8.0)(rng);
    double df = std::uniform_real_distribution<double>(1.0, 200.0)(rng);
    double got = student_t_two_sided_p(t, df);
    double want = oracle::t_two_sided_p_integrated(t, df);
    CHECK(std::fabs(got - want) <= 1e-6);
  }
}

TEST_CASE("betainc_regularized basic identities") {
  CHECK(betainc_regularized(2.0, 3.0, 0.0) == 0.0);
  CHECK(betainc_regularized(2.0, 3.0, 1.0) == 1.0);
  // I_x(1, 1) is the uniform CDF
  CHECK(betainc_regularized(1.0, 1.0, 0.37) == doctest::Approx(0.37));
  // closed form for a = 1: I_x(1, b) = 1 - (1 - x)^b
  CHECK(betainc_regularized(1.0, 4.0, 0.2) ==
        doctest::Approx(1.0 - std::pow(0.8, 4.0)).epsilon(1e-12));

  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 200; ++trial) {
    double a = std::uniform_real_distribution<double>(0.1, 20.0)(rng);
    double b = std::uniform_real_distribution<double>(0.1, 20.0)(rng);
    double x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double lhs = betainc_regularized(a, b, x);
    CHECK(lhs >= 0.0);
    CHECK(lhs <= 1.0);
    // reflection symmetry
    CHECK(lhs == doctest::Approx(1.0 - betainc_regularized(b, a, 1.0 - x))
                     .epsilon(1e-9));
  }

  CHECK_THROWS_AS(betainc_regularized(-1.0, 2.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(betainc_regularized(1.0, 2.0, 1.5), std::invalid_argument);
}

TEST_CASE("welch_t_test matches the integration oracle") {
  SUBCASE("identical samples") {
    std::vector<double> a{1.0, 2.0, 3.0};
    auto r = welch_t_test(a, a);
    CHECK(r.t == 0.0);
    CHECK(r.p == doctest::Approx(1.0));
  }

  SUBCASE("worked example") {
    std::vector<double> a{1, 2, 3, 4};
    std::vector<double> b{2, 3, 4, 5};
    auto r = welch_t_test(a, b);
    auto want = oracle::welch_direct(a, b);
    CHECK(r.t == doctest::Approx(want.t).epsilon(1e-12));
    CHECK(r.df == doctest::Approx(want.df).epsilon(1e-12));
    CHECK(std::fabs(r.p - want.p) <= 1e-6);
    // equal sizes and variances make this plain Student t with df = 6
    CHECK(r.df == doctest::Approx(6.0));
    CHECK(r.t == doctest::Approx(-1.0 / std::sqrt(5.0 / 6.0)).epsilon(1e-12));
  }

  SUBCASE("100 random cases to 1e-6") {
    std::mt19937_64 rng(4242);
    for (int trial = 0; trial < 100; ++trial) {
      size_t na = std::uniform_int_distribution<size_t>(2, 40)(rng);
      size_t nb = std::uniform_int_distribution<size_t>(2, 40)(rng);
      auto a = random_sample(
          rng, na, std::uniform_real_distribution<double>(-3.0, 3.0)(rng),
          std::uniform_real_distribution<double>(0.2, 4.0)(rng));
      auto b = random_sample(
          rng, nb, std::uniform_real_distribution<double>(-3.0, 3.0)(rng),
          std::uniform_real_distribution<double>(0.2, 4.0)(rng));
      auto r = welch_t_test(a, b);
      auto want = oracle::welch_direct(a, b);
      CAPTURE(trial);
      CHECK(r.t == doctest::Approx(want.t).epsilon(1e-10));
      CHECK(r.df == doctest::Approx(want.df).epsilon(1e-10));
      CHECK(std::fabs(r.p - want.p) <= 1e-6);
      CHECK(r.p >= 0.0);
      CHECK(r.p <= 1.0);
    }
  }

  SUBCASE("scale and shift invariance of t") {
    std::vector<double> a{0.3, 1.9, -0.4, 2.2, 0.0};
    std::vector<double> b{1.1, 1.4, 0.9, 2.0};
    auto base = welch_t_test(a, b);
    std::vector<double> as, bs;
    for (double v : a) as.push_back(5.0 * v);
    for (double v : b) bs.push_back(5.0 * v);
    auto scaled = welch_t_test(as, bs);
    CHECK(scaled.t == doctest::Approx(base.t).epsilon(1e-12));
    CHECK(scaled.p == doctest::Approx(base.p).epsilon(1e-9));
  }

  SUBCASE("error paths") {
    std::vector<double> one{1.0};
    std::vector<double> two{1.0, 2.0};
    std::vector<double> flat{3.0, 3.0, 3.0};
    CHECK_THROWS_AS(welch_t_test(one, two), empty_group);
    CHECK_THROWS_AS(welch_t_test(two, one), empty_group);
    CHECK_THROWS_AS(welch_t_test(flat, flat), degenerate_variance);
    // one degenerate side is fine
    CHECK_NOTHROW(welch_t_test(flat, two));
  }
}

TEST_CASE("p-value calibration under the null") {
  std::mt19937_64 rng(555);
  int rejections = 0;
  constexpr int kResamples = 1000;
  for (int trial = 0; trial < kResamples; ++trial) {
    auto a = random_sample(rng, 30, 0.0, 1.0);
    auto b = random_sample(rng, 24, 0.0, 1.0);
    if (welch_t_test(a, b).p < 0.005) ++rejections;
  }
  double rate = (double)rejections / kResamples;
  CHECK(rate <= 0.02);
}
