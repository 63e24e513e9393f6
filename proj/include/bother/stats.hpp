#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bother::stats {

struct SampleSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // n-1 denominator; 0 when n < 2
};

SampleSummary summarize(std::span<const double> xs);

// Regularized incomplete beta I_x(a, b). one_minus_x is passed separately so
// callers that know 1-x exactly avoid cancellation.
double incomplete_beta(double a, double b, double x, double one_minus_x);
double incomplete_beta(double a, double b, double x);

// P(T <= t) for Student's t with df degrees of freedom.
double student_t_cdf(double t, double df);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_one_tailed = 0.5;
  bool significant = false;
};

// One-tailed Welch test of H1: mean(higher) > mean(lower).
TTestResult welch_one_tailed(const SampleSummary& higher,
                             const SampleSummary& lower, double alpha);

double pearson(std::span<const double> x, std::span<const double> y);

// Resample r is drawn from substream (seed, r) only.
std::vector<std::size_t> bootstrap_resample(std::size_t n, std::uint64_t seed,
                                            std::size_t r);
std::vector<std::vector<std::size_t>> bootstrap_indices(std::size_t n,
                                                        std::size_t b,
                                                        std::uint64_t seed);

}  // namespace bother::stats
