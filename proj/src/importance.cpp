#include "bother/importance.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <optional>
#include <thread>
#include <unordered_map>

#include "bother/error.hpp"
#include "bother/stats.hpp"

namespace bother::importance {

namespace {

// Rows with identical features collapse to one row weighted by sqrt(count)
// whose target is the group mean. X'X and X'y are unchanged, so the pivoted
// QR sees the same Gram matrix and returns the same solution.
struct RowGroups {
  std::vector<std::size_t> group_of_row;
  std::vector<std::size_t> first_row;  // representative row per group
};

RowGroups group_rows(const DesignMatrix& d) {
  RowGroups g;
  g.group_of_row.resize(d.rows);
  std::map<std::vector<double>, std::size_t> index;
  std::vector<double> key(d.cols);
  for (std::size_t r = 0; r < d.rows; ++r) {
    std::copy_n(d.x.begin() + static_cast<std::ptrdiff_t>(r * d.cols), d.cols, key.begin());
    auto [it, inserted] = index.try_emplace(key, g.first_row.size());
    if (inserted) g.first_row.push_back(r);
    g.group_of_row[r] = it->second;
  }
  return g;
}

// Least squares from per-group counts and target sums.
LeastSquaresSolution solve_grouped(const DesignMatrix& d, const RowGroups& g,
                                   std::span<const double> counts,
                                   std::span<const double> sums) {
  std::vector<double> a;
  std::vector<double> y;
  std::size_t m = 0;
  for (std::size_t k = 0; k < g.first_row.size(); ++k) {
    if (counts[k] == 0.0) continue;
    const double w = std::sqrt(counts[k]);
    const std::size_t r = g.first_row[k];
    for (std::size_t c = 0; c < d.cols; ++c) a.push_back(w * d.at(r, c));
    y.push_back(w * sums[k] / counts[k]);
    ++m;
  }
  // The intercept goes first so that a feature collinear with it is the
  // column that gets dropped.
  return solve_least_squares(a, m, d.cols, y, 1e-10, d.cols - 1);
}

bool all_features_dropped(const LeastSquaresSolution& s, std::size_t n_features) {
  std::size_t dropped_features = 0;
  for (std::size_t c : s.dropped) {
    if (c < n_features) ++dropped_features;
  }
  return dropped_features == n_features;
}

// Ranks kept columns by weight (desc, label asc); dropped ones take the
// trailing ranks in label order. Returns rank per column.
std::vector<int> rank_columns(const std::vector<std::string>& labels,
                              const std::vector<double>& weight,
                              const std::vector<bool>& dropped) {
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dropped[a] != dropped[b]) return !dropped[a];
    if (!dropped[a] && weight[a] != weight[b]) return weight[a] > weight[b];
    return labels[a] < labels[b];
  });
  std::vector<int> rank(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = static_cast<int>(i + 1);
  return rank;
}

}  // namespace

DesignMatrix make_design(std::vector<std::string> labels,
                         const std::vector<std::vector<double>>& features,
                         std::vector<double> y) {
  if (features.size() != y.size()) throw ConfigError("features and y differ in length");
  DesignMatrix d;
  d.column_labels = std::move(labels);
  d.rows = features.size();
  d.cols = d.column_labels.size() + 1;
  d.x.reserve(d.rows * d.cols);
  for (std::size_t r = 0; r < d.rows; ++r) {
    if (features[r].size() + 1 != d.cols) throw ConfigError("ragged feature rows");
    d.x.insert(d.x.end(), features[r].begin(), features[r].end());
    d.x.push_back(1.0);
    d.row_sentence.push_back(static_cast<int>(r));
  }
  d.y = std::move(y);
  for (std::size_t c = 0; c + 1 < d.cols; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < d.rows; ++r) s += d.at(r, c);
    d.support[d.column_labels[c]] = std::lround(s);
  }
  return d;
}

DesignMatrix build_design(const std::vector<qc::ZScoredRecord>& records,
                          const std::vector<typology::FeatureVector>& features,
                          const typology::Typology& typology,
                          const DesignOptions& options) {
  std::unordered_map<int, const typology::FeatureVector*> by_sentence;
  for (const auto& f : features) by_sentence.emplace(f.sentence_id, &f);

  DesignMatrix d;
  d.column_labels = typology.categories;
  const bool has_other = std::find(d.column_labels.begin(), d.column_labels.end(),
                                   typology::kOther) != d.column_labels.end();
  if (!has_other) {
    for (const auto& f : features) {
      if (f.count(std::string(typology::kOther)) > 0) {
        d.column_labels.emplace_back(typology::kOther);
        std::sort(d.column_labels.begin(), d.column_labels.end());
        break;
      }
    }
  }
  d.cols = d.column_labels.size() + 1;
  std::map<std::string, std::size_t> column;
  for (std::size_t c = 0; c < d.column_labels.size(); ++c) column[d.column_labels[c]] = c;

  // Sentence order of first appearance keeps rows deterministic.
  std::vector<int> sentence_order;
  std::unordered_map<int, std::pair<double, std::size_t>> sentence_y;
  std::vector<std::pair<int, double>> rows;
  for (const auto& zr : records) {
    const int sid = zr.record.sentence_id;
    if (!by_sentence.contains(sid)) {
      throw ConfigError("no features for sentence " + std::to_string(sid));
    }
    if (options.per_sentence_mean) {
      auto [it, inserted] = sentence_y.try_emplace(sid, 0.0, 0);
      if (inserted) sentence_order.push_back(sid);
      it->second.first += zr.z;
      ++it->second.second;
    } else {
      rows.emplace_back(sid, zr.z);
    }
  }
  if (options.per_sentence_mean) {
    for (int sid : sentence_order) {
      const auto& [sum, n] = sentence_y.at(sid);
      rows.emplace_back(sid, sum / static_cast<double>(n));
    }
  }

  d.rows = rows.size();
  d.x.assign(d.rows * d.cols, 0.0);
  std::unordered_map<int, bool> counted;
  for (const auto& c : d.column_labels) d.support[c] = 0;
  for (std::size_t r = 0; r < d.rows; ++r) {
    const auto& [sid, y] = rows[r];
    const auto* f = by_sentence.at(sid);
    const bool first = counted.try_emplace(sid, true).second;
    for (const auto& [cat, n] : f->counts) {
      auto it = column.find(cat);
      if (it == column.end()) {
        throw ConfigError("feature category '" + cat + "' not in typology '" +
                          typology.name + "'");
      }
      d.x[r * d.cols + it->second] = n;
      if (first) d.support[cat] += n;
    }
    d.x[r * d.cols + d.cols - 1] = 1.0;
    d.y.push_back(y);
    d.row_sentence.push_back(sid);
  }
  return d;
}

LeastSquaresSolution solve_least_squares(std::span<const double> a, std::size_t m,
                                         std::size_t n, std::span<const double> y,
                                         double rel_tol, std::optional<std::size_t> first) {
  // Column-major working copy; R accumulates in the upper triangle.
  std::vector<double> q(m * n);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) q[c * m + r] = a[r * n + c];
  }
  std::vector<double> rhs(y.begin(), y.end());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto col = [&](std::size_t c) { return q.data() + c * m; };

  std::size_t rank = 0;
  double max_pivot = 0.0;
  const std::size_t steps = std::min(m, n);
  for (std::size_t k = 0; k < steps; ++k) {
    std::size_t best = k;
    double best_norm2 = -1.0;
    for (std::size_t j = k; j < n; ++j) {
      if (k == 0 && first && j != *first) continue;
      const double* cj = col(j);
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += cj[i] * cj[i];
      if (s > best_norm2) {
        best_norm2 = s;
        best = j;
      }
    }
    if (best != k) {
      std::swap_ranges(col(k), col(k) + m, col(best));
      std::swap(perm[k], perm[best]);
    }
    const double norm = std::sqrt(best_norm2);
    max_pivot = std::max(max_pivot, norm);
    if (norm == 0.0 || norm < rel_tol * max_pivot) break;

    double* ck = col(k);
    const double x0 = ck[k];
    const double alpha = x0 >= 0.0 ? -norm : norm;
    ck[k] = x0 - alpha;  // ck[k..m) now holds the Householder vector v
    double vtv = 0.0;
    for (std::size_t i = k; i < m; ++i) vtv += ck[i] * ck[i];
    auto reflect = [&](double* target) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += ck[i] * target[i];
      const double f = 2.0 * s / vtv;
      for (std::size_t i = k; i < m; ++i) target[i] -= f * ck[i];
    };
    for (std::size_t j = k + 1; j < n; ++j) reflect(col(j));
    reflect(rhs.data());
    ck[k] = alpha;
    rank = k + 1;
  }

  LeastSquaresSolution sol;
  sol.rank = rank;
  sol.coef.assign(n, 0.0);
  std::vector<double> b(rank);
  for (std::size_t ii = rank; ii-- > 0;) {
    double s = rhs[ii];
    for (std::size_t j = ii + 1; j < rank; ++j) s -= col(j)[ii] * b[j];
    b[ii] = s / col(ii)[ii];
  }
  for (std::size_t i = 0; i < rank; ++i) sol.coef[perm[i]] = b[i];
  sol.dropped.assign(perm.begin() + static_cast<std::ptrdiff_t>(rank), perm.end());
  std::sort(sol.dropped.begin(), sol.dropped.end());
  return sol;
}

FitResult fit_ols(const DesignMatrix& d) {
  if (d.rows == 0 || d.cols < 2) throw FitError("empty design matrix");
  const std::size_t n_features = d.cols - 1;
  const RowGroups groups = group_rows(d);
  std::vector<double> counts(groups.first_row.size(), 0.0);
  std::vector<double> sums(groups.first_row.size(), 0.0);
  for (std::size_t r = 0; r < d.rows; ++r) {
    counts[groups.group_of_row[r]] += 1.0;
    sums[groups.group_of_row[r]] += d.y[r];
  }
  const auto sol = solve_grouped(d, groups, counts, sums);
  if (all_features_dropped(sol, n_features)) {
    throw FitError("all feature columns are collinear or empty");
  }

  FitResult fit;
  fit.n_rows = d.rows;
  std::vector<bool> dropped(d.cols, false);
  for (std::size_t c : sol.dropped) {
    dropped[c] = true;
    fit.dropped_columns.push_back(c < n_features ? d.column_labels[c]
                                                 : std::string(kIntercept));
  }
  for (std::size_t c = 0; c < n_features; ++c) {
    if (!dropped[c]) fit.weights[d.column_labels[c]] = sol.coef[c];
  }
  fit.intercept = sol.coef[n_features];
  for (std::size_t r = 0; r < d.rows; ++r) {
    double pred = 0.0;
    for (std::size_t c = 0; c < d.cols; ++c) pred += d.at(r, c) * sol.coef[c];
    const double e = d.y[r] - pred;
    fit.residual_sse += e * e;
  }
  return fit;
}

RankResult rank_types(const FitResult& fit) {
  RankResult out;
  std::vector<std::pair<std::string, double>> items(fit.weights.begin(), fit.weights.end());
  // std::map iteration is already label-ordered; stable sort keeps it for ties.
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (std::size_t i = 0; i < items.size(); ++i) {
    out.ranks[items[i].first] = static_cast<int>(i + 1);
    out.order.push_back(items[i].first);
    if (i > 0 && items[i].second == items[i - 1].second) out.tie = true;
  }
  return out;
}

RankReport bootstrap_importance(const DesignMatrix& d, std::size_t b,
                                std::uint64_t seed, unsigned threads) {
  if (b < 2) throw ConfigError("bootstrap needs b >= 2 resamples");
  const FitResult full = fit_ols(d);
  const std::size_t k = d.cols - 1;
  const RowGroups groups = group_rows(d);

  struct Outcome {
    bool failed = false;
    std::vector<int> rank;
    std::vector<double> weight;
    std::vector<bool> dropped;
  };
  std::vector<Outcome> outcomes(b);

  auto run = [&](std::size_t r) {
    Outcome& o = outcomes[r];
    const auto idx = stats::bootstrap_resample(d.rows, seed, r);
    std::vector<double> counts(groups.first_row.size(), 0.0);
    std::vector<double> sums(groups.first_row.size(), 0.0);
    for (std::size_t i : idx) {
      counts[groups.group_of_row[i]] += 1.0;
      sums[groups.group_of_row[i]] += d.y[i];
    }
    const auto sol = solve_grouped(d, groups, counts, sums);
    if (all_features_dropped(sol, k)) {
      o.failed = true;
      return;
    }
    o.dropped.assign(k, false);
    for (std::size_t c : sol.dropped) {
      if (c < k) o.dropped[c] = true;
    }
    o.weight.assign(sol.coef.begin(), sol.coef.begin() + static_cast<std::ptrdiff_t>(k));
    o.rank = rank_columns(d.column_labels, o.weight, o.dropped);
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, b));
  if (threads <= 1) {
    for (std::size_t r = 0; r < b; ++r) run(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < b; r = next++) run(r);
      });
    }
    for (auto& th : pool) th.join();
  }

  RankReport report;
  report.b_resamples = b;
  report.seed = seed;
  for (const auto& o : outcomes) {
    if (o.failed) ++report.failed_resamples;
  }
  if (static_cast<double>(report.failed_resamples) > 0.1 * static_cast<double>(b)) {
    throw FitError("fit failed in " + std::to_string(report.failed_resamples) + " of " +
                   std::to_string(b) + " bootstrap resamples (limit 10%)");
  }

  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> ranks, weights;
    RankEntry e;
    e.category = d.column_labels[c];
    for (const auto& o : outcomes) {
      if (o.failed) continue;
      ranks.push_back(o.rank[c]);
      if (o.dropped[c]) {
        ++e.dropped_resamples;
      } else {
        weights.push_back(o.weight[c]);
      }
    }
    const auto rs = stats::summarize(ranks);
    const auto ws = stats::summarize(weights);
    e.mean_rank = rs.mean;
    e.rank_std = rs.sd;
    e.mean_weight = ws.mean;
    e.weight_std = ws.sd;
    auto sup = d.support.find(e.category);
    e.support = sup == d.support.end() ? 0 : sup->second;
    auto fw = full.weights.find(e.category);
    e.full_weight = fw == full.weights.end() ? 0.0 : fw->second;
    report.entries.push_back(std::move(e));
  }
  std::stable_sort(report.entries.begin(), report.entries.end(),
                   [](const RankEntry& a, const RankEntry& b) {
                     if (a.mean_rank != b.mean_rank) return a.mean_rank < b.mean_rank;
                     return a.category < b.category;
                   });
  return report;
}

TokenWeightExport export_token_weights(const corpus::Corpus& corpus,
                                       const FitResult& fit,
                                       const typology::Typology& typology,
                                       double w_max) {
  if (!(w_max > 1.0) || !std::isfinite(w_max)) throw ConfigError("w_max must be > 1");
  if (fit.weights.empty()) throw FitError("fit has no category weights");
  double lo = fit.weights.begin()->second, hi = lo;
  for (const auto& [cat, w] : fit.weights) {
    lo = std::min(lo, w);
    hi = std::max(hi, w);
  }
  auto scaled = [&](const std::string& label) {
    auto it = fit.weights.find(typology.category_of(label));
    if (it == fit.weights.end()) return 1.0;  // category without a fitted weight
    if (hi == lo) return w_max;
    return 1.0 + (w_max - 1.0) * (it->second - lo) / (hi - lo);
  };

  TokenWeightExport out;
  for (const auto& s : corpus) {
    SentenceTokenWeights tw{s.id, std::vector<double>(s.tokens.size(), 1.0)};
    std::vector<bool> covered(s.tokens.size(), false);
    const int n = static_cast<int>(s.tokens.size());
    for (const auto& e : s.edits) {
      if (n == 0) break;
      const double w = scaled(e.label);
      int first = e.start, last = e.end;
      if (first == last) {
        first = std::min(first, n - 1);
        last = first + 1;
      }
      for (int t = first; t < last; ++t) {
        covered[t] = true;
        tw.weights[t] = std::max(tw.weights[t], w);
      }
    }
    out.n_tokens += s.tokens.size();
    for (std::size_t t = 0; t < covered.size(); ++t) {
      if (covered[t]) ++out.n_covered;
      if (tw.weights[t] > 1.0) ++out.n_weighted;
    }
    out.sentences.push_back(std::move(tw));
  }
  return out;
}

}  // namespace bother::importance
