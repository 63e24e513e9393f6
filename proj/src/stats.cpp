#include "bother/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bother/error.hpp"
#include "bother/random.hpp"

namespace bother::stats {

namespace {

constexpr int kMaxIterations = 200000;
constexpr double kEpsilon = 1e-15;
constexpr double kTiny = 1e-300;

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEpsilon) return h;
  }
  throw DomainError("incomplete beta continued fraction did not converge (a=" +
                    std::to_string(a) + ", b=" + std::to_string(b) + ")");
}

}  // namespace

SampleSummary summarize(std::span<const double> xs) {
  SampleSummary s;
  s.n = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  return s;
}

double incomplete_beta(double a, double b, double x, double one_minus_x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete beta needs a, b > 0");
  if (!(x >= 0.0) || !(x <= 1.0)) throw DomainError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (one_minus_x == 0.0) return 1.0;

  const double log_x = x > 0.5 ? std::log1p(-one_minus_x) : std::log(x);
  const double log_1mx = one_minus_x > 0.5 ? std::log1p(-x) : std::log(one_minus_x);
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * log_x + b * log_1mx;
  const double front = std::exp(log_front);

  // The fraction converges rapidly only below the mean; use the symmetry
  // I_x(a, b) = 1 - I_{1-x}(b, a) above it.
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, one_minus_x) / b;
}

double incomplete_beta(double a, double b, double x) {
  return incomplete_beta(a, b, x, 1.0 - x);
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0) || !std::isfinite(df)) {
    throw DomainError("student_t_cdf needs finite df > 0");
  }
  if (!std::isfinite(t)) throw DomainError("student_t_cdf needs finite t");
  if (t == 0.0) return 0.5;
  const double t2 = t * t;
  const double x = df / (df + t2);
  const double one_minus_x = t2 / (df + t2);
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x, one_minus_x);
  return t > 0.0 ? 1.0 - tail : tail;
}

TTestResult welch_one_tailed(const SampleSummary& higher,
                             const SampleSummary& lower, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must be in (0, 1)");
  if (higher.n < 2 || lower.n < 2) {
    throw InsufficientDataError("welch test needs n >= 2 in both groups");
  }
  const double nh = static_cast<double>(higher.n);
  const double nl = static_cast<double>(lower.n);
  const double vh = higher.sd * higher.sd / nh;
  const double vl = lower.sd * lower.sd / nl;
  const double diff = higher.mean - lower.mean;

  TTestResult r;
  const double se2 = vh + vl;
  if (se2 == 0.0) {
    r.df = nh + nl - 2.0;
    if (diff > 0.0) {
      r.t = std::numeric_limits<double>::infinity();
      r.p_one_tailed = 0.0;
    } else if (diff < 0.0) {
      r.t = -std::numeric_limits<double>::infinity();
      r.p_one_tailed = 1.0;
    } else {
      r.t = 0.0;
      r.p_one_tailed = 0.5;
    }
  } else {
    r.t = diff / std::sqrt(se2);
    r.df = se2 * se2 / (vh * vh / (nh - 1.0) + vl * vl / (nl - 1.0));
    r.p_one_tailed = std::clamp(1.0 - student_t_cdf(r.t, r.df), 0.0, 1.0);
  }
  r.significant = r.p_one_tailed < alpha;
  return r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("pearson: length mismatch");
  if (x.size() < 2) throw DomainError("pearson: need at least 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DomainError("pearson: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<std::size_t> bootstrap_resample(std::size_t n, std::uint64_t seed,
                                            std::size_t r) {
  if (n == 0) throw DomainError("bootstrap needs n >= 1");
  Engine rng = substream(seed, "bootstrap", r);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> out(n);
  for (auto& i : out) i = pick(rng);
  return out;
}

std::vector<std::vector<std::size_t>> bootstrap_indices(std::size_t n,
                                                        std::size_t b,
                                                        std::uint64_t seed) {
  if (n == 0) throw DomainError("bootstrap needs n >= 1");
  if (b == 0) throw DomainError("bootstrap needs b >= 1");
  std::vector<std::vector<std::size_t>> out;
  out.reserve(b);
  for (std::size_t r = 0; r < b; ++r) out.push_back(bootstrap_resample(n, seed, r));
  return out;
}

}  // namespace bother::stats
