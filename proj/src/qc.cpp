#include "bother/qc.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <set>
#include <unordered_map>

#include "bother/error.hpp"
#include "bother/csv.hpp"
#include "bother/stats.hpp"

namespace bother::qc {

namespace {

constexpr std::string_view kHeader =
    "annotator_id,batch_id,sentence_id,role,raw_score,batch_seconds";

template <typename T>
bool parse_number(std::string_view s, T& value) {
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), last, value);
  return ec == std::errc() && ptr == last;
}

AnnotationRecord parse_row(const std::vector<std::string>& f) {
  if (f.size() != 6) {
    throw ConfigError("expected 6 fields, got " + std::to_string(f.size()));
  }
  AnnotationRecord r;
  r.annotator_id = f[0];
  if (r.annotator_id.empty()) throw ConfigError("empty annotator_id");
  if (!parse_number(f[1], r.batch_id)) throw ConfigError("bad batch_id '" + f[1] + "'");
  if (!parse_number(f[2], r.sentence_id)) {
    throw ConfigError("bad sentence_id '" + f[2] + "'");
  }
  r.role = corpus::parse_role(f[3]);
  if (!parse_number(f[4], r.raw_score)) throw ConfigError("bad raw_score '" + f[4] + "'");
  if (r.raw_score < 1 || r.raw_score > 100) {
    throw ConfigError("raw_score " + f[4] + " outside [1, 100]");
  }
  if (!parse_number(f[5], r.batch_seconds) || !std::isfinite(r.batch_seconds) ||
      r.batch_seconds <= 0.0) {
    throw ConfigError("batch_seconds must be a positive number, got '" + f[5] + "'");
  }
  return r;
}

}  // namespace

void QcConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
  if (!(corr_threshold >= -1.0 && corr_threshold <= 1.0)) {
    throw ConfigError("corr_threshold must be in [-1, 1]");
  }
  if (min_responses_per_repeat < 2) {
    throw ConfigError("min_responses_per_repeat must be >= 2");
  }
  if (min_corr_pairs < 2) throw ConfigError("min_corr_pairs must be >= 2");
  if (!(min_batch_seconds >= 0.0)) throw ConfigError("min_batch_seconds must be >= 0");
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kNone:
      return "none";
    case Stage::kDegenerate:
      return "degenerate";
    case Stage::kTime:
      return "time";
    case Stage::kTTest:
      return "ttest";
    case Stage::kCorrelation:
      return "correlation";
  }
  return "none";
}

IngestResult ingest_annotations(std::istream& in, bool strict) {
  IngestResult result;
  std::string line;
  std::size_t lineno = 0;
  bool seen_header = false;
  // (annotator, batch) -> (seconds, line of first occurrence)
  std::map<std::pair<std::string, int>, std::pair<double, std::size_t>> timing;

  auto fail = [&](std::size_t at, const std::string& msg) {
    if (strict) throw ParseError(at, msg);
    result.errors.push_back({at, msg});
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!seen_header) {
      if (line != kHeader) {
        throw ParseError(lineno, "expected header '" + std::string(kHeader) + "'");
      }
      seen_header = true;
      continue;
    }
    AnnotationRecord r;
    try {
      r = parse_row(io::split_csv_line(line));
    } catch (const ConfigError& e) {
      fail(lineno, e.what());
      continue;
    }
    auto key = std::make_pair(r.annotator_id, r.batch_id);
    auto [it, inserted] = timing.try_emplace(key, r.batch_seconds, lineno);
    if (!inserted && it->second.first != r.batch_seconds) {
      fail(lineno, "batch_seconds " + std::to_string(r.batch_seconds) +
                       " inconsistent with line " + std::to_string(it->second.second) +
                       " for annotator " + r.annotator_id + ", batch " +
                       std::to_string(r.batch_id));
      continue;
    }
    result.records.push_back(std::move(r));
  }
  if (!seen_header) throw ParseError(lineno, "missing header");
  return result;
}

Profiles make_profiles(const std::vector<AnnotationRecord>& records) {
  Profiles profiles;
  for (const auto& r : records) {
    auto& p = profiles[r.annotator_id];
    p.annotator_id = r.annotator_id;
    ++p.n_records;
  }
  return profiles;
}

ZNormResult z_normalize(const std::vector<AnnotationRecord>& records,
                        bool flip_scores) {
  ZNormResult result;
  result.profiles = make_profiles(records);

  auto value = [&](const AnnotationRecord& r) {
    return static_cast<double>(flip_scores ? 101 - r.raw_score : r.raw_score);
  };
  std::unordered_map<std::string, std::vector<double>> scores;
  for (const auto& r : records) scores[r.annotator_id].push_back(value(r));

  std::unordered_map<std::string, stats::SampleSummary> params;
  for (auto& [id, xs] : scores) {
    auto s = stats::summarize(xs);
    if (s.n < 2 || s.sd == 0.0) {
      result.profiles[id].remove(Stage::kDegenerate);
    } else {
      params.emplace(id, s);
    }
  }
  for (const auto& r : records) {
    auto it = params.find(r.annotator_id);
    if (it == params.end()) continue;
    result.records.push_back({r, (value(r) - it->second.mean) / it->second.sd});
  }
  return result;
}

void filter_time(const std::vector<AnnotationRecord>& records,
                 const QcConfig& config, Profiles& profiles) {
  // (annotator, batch) -> (items, seconds)
  std::map<std::pair<std::string, int>, std::pair<std::size_t, double>> batches;
  for (const auto& r : records) {
    auto& b = batches[{r.annotator_id, r.batch_id}];
    ++b.first;
    b.second = r.batch_seconds;
  }
  for (const auto& [key, batch] : batches) {
    auto it = profiles.find(key.first);
    if (it == profiles.end() || !it->second.kept) continue;
    const double threshold =
        config.min_batch_seconds * static_cast<double>(batch.first) / 100.0;
    if (batch.second < threshold) it->second.remove(Stage::kTime);
  }
}

void filter_ttest(const std::vector<ZScoredRecord>& records,
                  const QcConfig& config, Profiles& profiles) {
  struct Groups {
    std::vector<double> clean, errorful;
  };
  std::map<std::string, Groups> groups;
  for (const auto& zr : records) {
    auto& g = groups[zr.record.annotator_id];
    (zr.record.role == Role::kClean ? g.clean : g.errorful).push_back(zr.z);
  }
  for (auto& [id, profile] : profiles) {
    if (!profile.kept) continue;
    auto it = groups.find(id);
    if (it == groups.end() || it->second.clean.size() < 2 ||
        it->second.errorful.size() < 2) {
      profile.remove(Stage::kTTest);
      continue;
    }
    auto result = stats::welch_one_tailed(stats::summarize(it->second.errorful),
                                          stats::summarize(it->second.clean),
                                          config.alpha);
    profile.t = result.t;
    profile.df = result.df;
    profile.p = result.p_one_tailed;
    if (!result.significant) profile.remove(Stage::kTTest);
  }
}

void filter_correlation(const std::vector<ZScoredRecord>& records,
                        const QcConfig& config, Profiles& profiles) {
  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
  };
  // sentence -> totals over surviving annotators, and per annotator.
  std::map<int, Acc> totals;
  std::map<std::string, std::map<int, Acc>> mine;
  for (const auto& zr : records) {
    const auto& r = zr.record;
    if (r.role != Role::kRepeat) continue;
    auto it = profiles.find(r.annotator_id);
    if (it == profiles.end() || !it->second.kept) continue;
    auto& t = totals[r.sentence_id];
    t.sum += zr.z;
    ++t.n;
    auto& m = mine[r.annotator_id][r.sentence_id];
    m.sum += zr.z;
    ++m.n;
  }

  // Single pass against a fixed snapshot of survivors.
  std::vector<std::string> to_remove;
  for (const auto& [id, sentences] : mine) {
    std::vector<double> own, others;
    for (const auto& [sid, acc] : sentences) {
      const Acc& total = totals.at(sid);
      if (total.n < static_cast<std::size_t>(config.min_responses_per_repeat)) continue;
      const std::size_t n_others = total.n - acc.n;
      if (n_others == 0) continue;
      own.push_back(acc.sum / static_cast<double>(acc.n));
      others.push_back((total.sum - acc.sum) / static_cast<double>(n_others));
    }
    auto& profile = profiles.at(id);
    profile.repeat_pairs = own.size();
    if (own.size() < static_cast<std::size_t>(config.min_corr_pairs)) continue;
    double r = 0.0;
    try {
      r = stats::pearson(own, others);
    } catch (const DomainError&) {
      continue;  // zero variance: filter skipped
    }
    profile.repeat_corr = r;
    if (r < config.corr_threshold) to_remove.push_back(id);
  }
  for (const auto& id : to_remove) profiles.at(id).remove(Stage::kCorrelation);
}

QcResult run_qc(const std::vector<AnnotationRecord>& records,
                const QcConfig& config) {
  config.validate();
  if (records.empty()) throw EmptyDataError("no annotation records");

  auto norm = z_normalize(records, config.flip_scores);
  QcResult result;
  result.profiles = std::move(norm.profiles);
  filter_time(records, config, result.profiles);
  filter_ttest(norm.records, config, result.profiles);
  filter_correlation(norm.records, config, result.profiles);

  for (auto& zr : norm.records) {
    if (result.profiles.at(zr.record.annotator_id).kept) {
      result.surviving.push_back(std::move(zr));
    }
  }

  QcSummary& s = result.summary;
  s.n_annotators = result.profiles.size();
  s.n_records_in = records.size();
  s.n_records_kept = result.surviving.size();
  for (Stage stage : {Stage::kDegenerate, Stage::kTime, Stage::kTTest,
                      Stage::kCorrelation}) {
    StageCount c{stage, 0, 0.0};
    for (const auto& [id, p] : result.profiles) {
      if (p.removal_stage == stage) ++c.removed;
    }
    c.fraction = static_cast<double>(c.removed) / static_cast<double>(s.n_annotators);
    s.stages.push_back(c);
  }
  for (const auto& [id, p] : result.profiles) {
    if (p.kept) ++s.n_kept;
  }
  s.removed_fraction = static_cast<double>(s.n_annotators - s.n_kept) /
                       static_cast<double>(s.n_annotators);
  return result;
}

}  // namespace bother::qc
