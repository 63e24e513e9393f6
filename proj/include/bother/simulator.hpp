#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bother/corpus.hpp"
#include "bother/qc.hpp"
#include "bother/typology.hpp"

namespace bother::simulator {

enum class AnnotatorKind { kHonest, kSpeeder, kConstant, kAnti };

std::string_view to_string(AnnotatorKind kind);

struct AnnotatorMix {
  double honest = 1.0;
  double speeder = 0.0;
  double constant = 0.0;
  double anti = 0.0;
};

struct SimConfig {
  int n_types = 5;
  // Empty means a seeded permutation of evenly spaced weights in
  // (0, 1.5] so the true order is not the label order.
  std::vector<double> true_weights;
  double true_intercept = 0.0;
  int n_sentences = 2000;
  int max_edits_per_sentence = 1;  // per type
  double clean_fraction = 0.18;
  AnnotatorMix annotator_mix;
  double noise_sd = 0.5;
  int scores_per_sentence = 2;  // annotation passes over the corpus
  std::uint64_t seed = 0;

  // Private calibration of honest annotators: raw = gain * latent + offset.
  double gain_min = 4.0;
  double gain_max = 6.0;
  double offset_min = 10.0;
  double offset_max = 20.0;
  int batches_per_annotator = 1;
  corpus::BatchPlan plan;

  void validate() const;
  std::vector<std::string> category_names() const;
};

struct GroundTruth {
  std::vector<std::string> categories;
  std::map<std::string, double> weights;
  double intercept = 0.0;
  std::vector<double> latent;  // indexed by sentence id
};

struct SimCorpus {
  corpus::Corpus corpus;
  std::vector<typology::FeatureVector> features;
  GroundTruth truth;
};

SimCorpus generate_corpus(const SimConfig& config);

struct SimAnnotations {
  std::vector<qc::AnnotationRecord> records;
  std::map<std::string, AnnotatorKind> kinds;
  double saturation_fraction = 0.0;  // scores clamped into [1, 100]
};

SimAnnotations generate_annotations(const corpus::Corpus& corpus,
                                    const GroundTruth& truth,
                                    const SimConfig& config);

}  // namespace bother::simulator
