#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bother/corpus.hpp"
#include "bother/qc.hpp"
#include "bother/typology.hpp"

namespace bother::importance {

inline constexpr std::string_view kIntercept = "(intercept)";

// One row per annotation (or per sentence when averaged). Column order is
// the typology's category order with the intercept appended last.
struct DesignMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> x;  // row-major, rows * cols
  std::vector<double> y;
  std::vector<std::string> column_labels;  // categories only
  std::vector<int> row_sentence;
  std::map<std::string, long> support;  // edits per category over distinct sentences

  double at(std::size_t r, std::size_t c) const { return x[r * cols + c]; }
};

// Test and tooling helper: features row by row, intercept added.
DesignMatrix make_design(std::vector<std::string> labels,
                         const std::vector<std::vector<double>>& features,
                         std::vector<double> y);

struct DesignOptions {
  bool per_sentence_mean = false;
};

DesignMatrix build_design(const std::vector<qc::ZScoredRecord>& records,
                          const std::vector<typology::FeatureVector>& features,
                          const typology::Typology& typology,
                          const DesignOptions& options = {});

struct LeastSquaresSolution {
  std::vector<double> coef;         // 0 for dropped columns
  std::vector<std::size_t> dropped; // column indices, ascending
  std::size_t rank = 0;
};

// Householder QR with column pivoting on a row-major m x n matrix. Columns
// whose pivot falls below rel_tol times the largest pivot are dropped.
// `first`, if set, is pivoted in before the norm-based choice starts.
LeastSquaresSolution solve_least_squares(std::span<const double> a, std::size_t m,
                                         std::size_t n, std::span<const double> y,
                                         double rel_tol = 1e-10,
                                         std::optional<std::size_t> first = std::nullopt);

struct FitResult {
  std::map<std::string, double> weights;
  double intercept = 0.0;
  std::vector<std::string> dropped_columns;
  std::size_t n_rows = 0;
  double residual_sse = 0.0;
};

FitResult fit_ols(const DesignMatrix& design);

struct RankResult {
  std::map<std::string, int> ranks;  // 1 = most bothersome
  std::vector<std::string> order;    // rank order
  bool tie = false;
};

RankResult rank_types(const FitResult& fit);

struct RankEntry {
  std::string category;
  double mean_rank = 0.0;
  double rank_std = 0.0;
  double mean_weight = 0.0;
  double weight_std = 0.0;
  long support = 0;
  double full_weight = 0.0;
  std::size_t dropped_resamples = 0;
};

struct RankReport {
  std::vector<RankEntry> entries;  // sorted by mean rank
  std::size_t b_resamples = 0;
  std::size_t failed_resamples = 0;
  std::uint64_t seed = 0;
};

inline constexpr std::string_view kUncertaintyMethod =
    "nonparametric row bootstrap (resample annotations with replacement, refit, re-rank)";
inline constexpr std::string_view kWeightCaveat =
    "Weights are relative to the intercept baseline: a negative weight marks an "
    "error type as less bothersome than the baseline, not as welcome.";

RankReport bootstrap_importance(const DesignMatrix& design, std::size_t b,
                                std::uint64_t seed, unsigned threads = 0);

struct SentenceTokenWeights {
  int sentence_id = 0;
  std::vector<double> weights;
};

struct TokenWeightExport {
  std::vector<SentenceTokenWeights> sentences;
  std::size_t n_tokens = 0;
  std::size_t n_covered = 0;   // under at least one edit (insertions at anchor)
  std::size_t n_weighted = 0;  // weight > 1
};

TokenWeightExport export_token_weights(const corpus::Corpus& corpus,
                                       const FitResult& fit,
                                       const typology::Typology& typology,
                                       double w_max);

}  // namespace bother::importance
