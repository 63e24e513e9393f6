#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "bother/error.hpp"
#include "bother/stats.hpp"
#include "oracles.hpp"

using namespace bother;
using namespace bother::stats;

TEST_SUITE("stats") {

TEST_CASE("summarize uses the n-1 denominator") {
  const std::vector<double> xs = {10, 20, 30};
  const auto s = summarize(xs);
  CHECK(s.n == 3);
  CHECK(s.mean == doctest::Approx(20));
  CHECK(s.sd == doctest::Approx(10));
  const std::vector<double> one = {4};
  CHECK(summarize(one).sd == 0.0);
}

TEST_CASE("student_t_cdf fixed points") {
  CHECK(student_t_cdf(0.0, 5) == 0.5);
  CHECK(student_t_cdf(50.0, 10) >= 1 - 1e-12);
  CHECK(std::fabs(student_t_cdf(1.0, 10) - oracle::t_cdf(1.0, 10)) < 1e-8);
  // Cauchy has a closed form.
  for (double t : {-7.0, -1.0, 0.3, 2.0, 40.0}) {
    CHECK(std::fabs(student_t_cdf(t, 1) - (0.5 + std::atan(t) / M_PI)) < 1e-12);
  }
  // df = 2 as well: 1/2 + t / (2 sqrt(2 + t^2)).
  for (double t : {-5.0, -0.5, 1.5, 9.0}) {
    CHECK(std::fabs(student_t_cdf(t, 2) - (0.5 + t / (2 * std::sqrt(2 + t * t)))) < 1e-12);
  }
}

TEST_CASE("student_t_cdf matches quadrature across the stated range") {
  for (double df : {1.0, 1.5, 3.0, 10.0, 57.0, 1000.0, 1e6}) {
    for (double t : {-50.0, -12.0, -2.5, -0.3, 0.7, 3.0, 20.0, 50.0}) {
      const double got = student_t_cdf(t, df);
      const double want = oracle::t_cdf(t, df);
      CHECK_MESSAGE(std::fabs(got - want) < 1e-8, "df=" << df << " t=" << t << " got " << got
                                                       << " want " << want);
    }
  }
}

TEST_CASE("student_t_cdf rejects bad input") {
  CHECK_THROWS_AS(student_t_cdf(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(student_t_cdf(1.0, -3.0), DomainError);
  CHECK_THROWS_AS(student_t_cdf(NAN, 3.0), DomainError);
  CHECK_THROWS_AS(student_t_cdf(INFINITY, 3.0), DomainError);
}

TEST_CASE("student_t_cdf is monotone and symmetric") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> tdist(-30, 30);
  std::uniform_real_distribution<double> logdf(0, 6);
  for (int i = 0; i < 3000; ++i) {
    const double df = std::pow(10.0, logdf(rng));
    double a = tdist(rng), b = tdist(rng);
    if (a > b) std::swap(a, b);
    CHECK(student_t_cdf(a, df) <= student_t_cdf(b, df));
    CHECK(std::fabs(student_t_cdf(-a, df) + student_t_cdf(a, df) - 1) < 1e-10);
  }
}

TEST_CASE("welch examples") {
  const SampleSummary same{30, 5.0, 2.0};
  const auto r0 = welch_one_tailed(same, same, 0.05);
  CHECK(r0.t == 0.0);
  CHECK(r0.p_one_tailed == doctest::Approx(0.5));
  CHECK(!r0.significant);

  const auto r1 = welch_one_tailed({50, 90, 1}, {50, 10, 1}, 0.05);
  CHECK(r1.significant);
  CHECK(r1.p_one_tailed < 1e-12);

  const auto r2 = welch_one_tailed({20, 1.0, 1.0}, {20, 0.5, 1.0}, 0.05);
  CHECK(r2.t == doctest::Approx(1.5811).epsilon(1e-4));
  CHECK(std::fabs(r2.t - 0.5 / std::sqrt(0.1)) < 1e-12);
  CHECK(std::fabs(r2.df - 38.0) < 1e-9);
  CHECK(std::fabs(r2.p_one_tailed - (1 - oracle::t_cdf(r2.t, r2.df))) < 1e-6);
  CHECK(r2.p_one_tailed > 0.05);
  CHECK(!r2.significant);
}

TEST_CASE("welch degenerate variances") {
  CHECK(welch_one_tailed({5, 2, 0}, {5, 1, 0}, 0.05).p_one_tailed == 0.0);
  CHECK(welch_one_tailed({5, 1, 0}, {5, 2, 0}, 0.05).p_one_tailed == 1.0);
  const auto eq = welch_one_tailed({5, 1, 0}, {5, 1, 0}, 0.05);
  CHECK(eq.p_one_tailed == 0.5);
  CHECK(eq.df > 0);
  CHECK_THROWS_AS(welch_one_tailed({1, 1, 0}, {5, 1, 1}, 0.05), InsufficientDataError);
  CHECK_THROWS_AS(welch_one_tailed({5, 1, 1}, {5, 1, 1}, 1.0), DomainError);
}

TEST_CASE("welch p stays in [0,1] and agrees with quadrature") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.1, 3);
  for (int i = 0; i < 200; ++i) {
    const SampleSummary h{2 + rng() % 80, u(rng) - 1.5, u(rng)};
    const SampleSummary l{2 + rng() % 80, u(rng) - 1.5, u(rng)};
    const auto r = welch_one_tailed(h, l, 0.05);
    CHECK(r.p_one_tailed >= 0.0);
    CHECK(r.p_one_tailed <= 1.0);
    CHECK(r.df > 0);
    CHECK(std::fabs(r.p_one_tailed - (1 - oracle::t_cdf(r.t, r.df))) < 1e-8);
  }
}

TEST_CASE("welch is invariant to a common shift") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 500; ++i) {
    // Dyadic means and integer shifts keep the difference exact.
    const double mh = static_cast<double>(static_cast<int>(rng() % 64) - 32) / 8;
    const double ml = static_cast<double>(static_cast<int>(rng() % 64) - 32) / 8;
    const double c = static_cast<double>(static_cast<int>(rng() % 2001) - 1000);
    const SampleSummary h{3 + rng() % 50, mh, 0.25 + static_cast<double>(rng() % 16) / 4};
    const SampleSummary l{3 + rng() % 50, ml, 0.25 + static_cast<double>(rng() % 16) / 4};
    const auto a = welch_one_tailed(h, l, 0.05);
    const auto b = welch_one_tailed({h.n, h.mean + c, h.sd}, {l.n, l.mean + c, l.sd}, 0.05);
    CHECK(a.t == b.t);
    CHECK(a.df == b.df);
    CHECK(a.p_one_tailed == b.p_one_tailed);
  }
}

TEST_CASE("pearson examples") {
  CHECK(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == doctest::Approx(1.0));
  CHECK(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0));
  // By hand: sxy = 5.5, sxx = 5, syy = 8.75, so r = 5.5 / sqrt(43.75) = 0.8315.
  const std::vector<double> x = {1, 2, 3, 4}, y = {1, 3, 2, 5};
  double mx = 2.5, my = 2.75, sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  CHECK(std::fabs(pearson(x, y) - sxy / std::sqrt(sxx * syy)) < 1e-15);
  CHECK(std::fabs(pearson(x, y) - 5.5 / std::sqrt(43.75)) < 1e-15);
}

TEST_CASE("pearson errors") {
  CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), DomainError);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), DomainError);
  CHECK_THROWS_AS(pearson(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}), DomainError);
}

TEST_CASE("pearson is affine invariant") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> scale(0.01, 100), shift(-1000, 1000);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = g(rng);
      y[i] = 0.3 * x[i] + g(rng);
    }
    const double a = scale(rng), b = shift(rng);
    std::vector<double> ax(n);
    for (std::size_t i = 0; i < n; ++i) ax[i] = a * x[i] + b;
    const double r = pearson(x, y);
    CHECK(r >= -1.0);
    CHECK(r <= 1.0);
    CHECK(std::fabs(pearson(ax, y) - r) < 1e-12);
    CHECK(std::fabs(pearson(y, ax) - r) < 1e-12);
  }
}

TEST_CASE("bootstrap_indices examples") {
  const auto one = bootstrap_indices(1, 3, 99);
  REQUIRE(one.size() == 3);
  for (const auto& r : one) CHECK(r == std::vector<std::size_t>{0});
  CHECK(bootstrap_indices(50, 4, 1) == bootstrap_indices(50, 4, 1));
  CHECK(bootstrap_indices(50, 4, 1) != bootstrap_indices(50, 4, 2));
  CHECK_THROWS_AS(bootstrap_indices(0, 3, 1), DomainError);
}

TEST_CASE("bootstrap distinct-index fraction is near 1 - 1/e") {
  const auto resamples = bootstrap_indices(1000, 200, 7);
  for (const auto& r : resamples) {
    REQUIRE(r.size() == 1000);
    std::set<std::size_t> distinct(r.begin(), r.end());
    CHECK(*distinct.rbegin() < 1000);
    const double frac = static_cast<double>(distinct.size()) / 1000.0;
    CHECK(std::fabs(frac - (1 - std::exp(-1.0))) < 0.05);
  }
}

TEST_CASE("bootstrap is prefix stable") {
  for (std::uint64_t seed : {0ull, 1ull, 12345ull}) {
    const auto small = bootstrap_indices(37, 5, seed);
    const auto large = bootstrap_indices(37, 40, seed);
    for (std::size_t r = 0; r < small.size(); ++r) {
      CHECK(small[r] == large[r]);
      CHECK(bootstrap_resample(37, seed, r) == small[r]);
    }
  }
}

}
