#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bother/corpus.hpp"

namespace bother::qc {

using corpus::Role;

struct AnnotationRecord {
  std::string annotator_id;
  int batch_id = 0;
  int sentence_id = 0;
  Role role = Role::kErrorful;
  int raw_score = 1;       // slider value in [1, 100]
  double batch_seconds = 0;  // total working time of the batch
};

struct ZScoredRecord {
  AnnotationRecord record;
  double z = 0.0;
};

struct QcConfig {
  double min_batch_seconds = 350.0;  // per 100-sentence batch
  double alpha = 0.05;
  double corr_threshold = -0.4;
  int min_responses_per_repeat = 15;
  int min_corr_pairs = 5;
  // Negates the orientation so that higher raw means less bothersome.
  bool flip_scores = false;

  void validate() const;
};

enum class Stage { kNone, kDegenerate, kTime, kTTest, kCorrelation };

std::string_view to_string(Stage stage);

struct AnnotatorProfile {
  std::string annotator_id;
  std::size_t n_records = 0;
  bool kept = true;
  Stage removal_stage = Stage::kNone;
  std::optional<double> t;
  std::optional<double> df;
  std::optional<double> p;
  std::optional<double> repeat_corr;
  std::size_t repeat_pairs = 0;

  void remove(Stage stage) {
    kept = false;
    removal_stage = stage;
  }
};

// Keyed by annotator id; ordered for deterministic output.
using Profiles = std::map<std::string, AnnotatorProfile>;

struct RowError {
  std::size_t line = 0;
  std::string message;
};

struct IngestResult {
  std::vector<AnnotationRecord> records;
  std::vector<RowError> errors;  // lenient mode only
};

// Header: annotator_id,batch_id,sentence_id,role,raw_score,batch_seconds.
// Strict mode throws ParseError at the first bad row.
IngestResult ingest_annotations(std::istream& in, bool strict = true);

struct ZNormResult {
  std::vector<ZScoredRecord> records;  // non-degenerate annotators only
  Profiles profiles;                   // every annotator, degenerate marked
};

ZNormResult z_normalize(const std::vector<AnnotationRecord>& records,
                        bool flip_scores = false);

Profiles make_profiles(const std::vector<AnnotationRecord>& records);

// Each filter only looks at annotators still kept in `profiles`.
void filter_time(const std::vector<AnnotationRecord>& records,
                 const QcConfig& config, Profiles& profiles);
void filter_ttest(const std::vector<ZScoredRecord>& records,
                  const QcConfig& config, Profiles& profiles);
void filter_correlation(const std::vector<ZScoredRecord>& records,
                        const QcConfig& config, Profiles& profiles);

struct StageCount {
  Stage stage = Stage::kNone;
  std::size_t removed = 0;
  double fraction = 0.0;  // of all annotators
};

struct QcSummary {
  std::size_t n_annotators = 0;
  std::size_t n_kept = 0;
  std::size_t n_records_in = 0;
  std::size_t n_records_kept = 0;
  std::vector<StageCount> stages;  // degenerate, time, ttest, correlation
  double removed_fraction = 0.0;
};

struct QcResult {
  std::vector<ZScoredRecord> surviving;
  Profiles profiles;
  QcSummary summary;
};

QcResult run_qc(const std::vector<AnnotationRecord>& records,
                const QcConfig& config);

}  // namespace bother::qc
