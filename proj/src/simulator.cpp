#include "bother/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "bother/error.hpp"
#include "bother/random.hpp"

namespace bother::simulator {

namespace {

constexpr std::string_view kVocabulary[] = {
    "the",    "student", "people",  "should", "think",  "about",   "their",
    "future", "many",    "country", "has",    "been",   "develop", "new",
    "system", "which",   "will",    "help",   "them",   "to",      "live",
    "better", "because", "it",      "is",     "very",   "important", "for",
    "society", "and",    "also",    "can",    "make",   "our",     "life",
    "more",   "easy",    "when",    "we",     "use",    "technology", "in",
    "school", "work",    "city"};

std::string annotator_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sim%05zu", i);
  return buf;
}

// Largest-remainder allocation of n slots to the mix fractions.
std::vector<AnnotatorKind> allocate_kinds(const AnnotatorMix& mix, std::size_t n) {
  const double fractions[] = {mix.honest, mix.speeder, mix.constant, mix.anti};
  const AnnotatorKind kinds[] = {AnnotatorKind::kHonest, AnnotatorKind::kSpeeder,
                                 AnnotatorKind::kConstant, AnnotatorKind::kAnti};
  std::size_t counts[4];
  std::vector<std::pair<double, int>> remainders;
  std::size_t assigned = 0;
  for (int k = 0; k < 4; ++k) {
    const double exact = fractions[k] * static_cast<double>(n);
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[k];
    remainders.emplace_back(exact - std::floor(exact), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[remainders[i].second];
  std::vector<AnnotatorKind> out;
  for (int k = 0; k < 4; ++k) out.insert(out.end(), counts[k], kinds[k]);
  return out;
}

}  // namespace

std::string_view to_string(AnnotatorKind kind) {
  switch (kind) {
    case AnnotatorKind::kHonest:
      return "honest";
    case AnnotatorKind::kSpeeder:
      return "speeder";
    case AnnotatorKind::kConstant:
      return "constant";
    case AnnotatorKind::kAnti:
      return "anti";
  }
  return "honest";
}

void SimConfig::validate() const {
  if (n_types < 1) throw ConfigError("n_types must be >= 1");
  if (!true_weights.empty() && true_weights.size() != static_cast<std::size_t>(n_types)) {
    throw ConfigError("true_weights must have n_types entries");
  }
  if (n_sentences < 1) throw ConfigError("n_sentences must be >= 1");
  if (max_edits_per_sentence < 1) throw ConfigError("max_edits_per_sentence must be >= 1");
  if (!(clean_fraction >= 0.0 && clean_fraction <= 1.0)) {
    throw ConfigError("clean_fraction must be in [0, 1]");
  }
  const double fr[] = {annotator_mix.honest, annotator_mix.speeder,
                       annotator_mix.constant, annotator_mix.anti};
  double sum = 0.0;
  for (double f : fr) {
    if (!(f >= 0.0)) throw ConfigError("annotator mix fractions must be >= 0");
    sum += f;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw ConfigError("annotator mix must sum to 1");
  if (!(noise_sd >= 0.0)) throw ConfigError("noise_sd must be >= 0");
  if (scores_per_sentence < 1) throw ConfigError("scores_per_sentence must be >= 1");
  if (!(gain_min > 0.0 && gain_max >= gain_min)) throw ConfigError("bad gain range");
  if (!(offset_max >= offset_min)) throw ConfigError("bad offset range");
  if (batches_per_annotator < 1) throw ConfigError("batches_per_annotator must be >= 1");
  plan.validate();
}

std::vector<std::string> SimConfig::category_names() const {
  std::vector<std::string> names;
  for (int i = 0; i < n_types; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "T%02d", i + 1);
    names.emplace_back(buf);
  }
  return names;
}

SimCorpus generate_corpus(const SimConfig& config) {
  config.validate();
  SimCorpus sim;
  GroundTruth& truth = sim.truth;
  truth.categories = config.category_names();
  truth.intercept = config.true_intercept;

  std::vector<double> weights = config.true_weights;
  if (weights.empty()) {
    for (int i = 0; i < config.n_types; ++i) {
      weights.push_back(1.5 * (i + 1) / config.n_types);
    }
    Engine wrng = substream(config.seed, "sim-weights");
    std::shuffle(weights.begin(), weights.end(), wrng);
  }
  for (int i = 0; i < config.n_types; ++i) truth.weights[truth.categories[i]] = weights[i];

  const std::size_t n = static_cast<std::size_t>(config.n_sentences);
  std::vector<bool> clean(n, false);
  {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Engine crng = substream(config.seed, "sim-clean");
    std::shuffle(idx.begin(), idx.end(), crng);
    const auto n_clean =
        static_cast<std::size_t>(std::llround(config.clean_fraction * static_cast<double>(n)));
    for (std::size_t i = 0; i < n_clean; ++i) clean[idx[i]] = true;
  }

  constexpr std::size_t kVocab = std::size(kVocabulary);
  for (std::size_t s = 0; s < n; ++s) {
    Engine rng = substream(config.seed, "sim-sentence", s);
    std::vector<int> counts(config.n_types, 0);
    int total = 0;
    if (!clean[s]) {
      std::uniform_int_distribution<int> draw(0, config.max_edits_per_sentence);
      while (total == 0) {
        total = 0;
        for (auto& c : counts) total += (c = draw(rng));
      }
    }
    std::uniform_int_distribution<int> extra(0, 6);
    const int length = std::max(8, total + 2) + extra(rng);
    corpus::Sentence sentence;
    sentence.id = static_cast<int>(s);
    std::uniform_int_distribution<std::size_t> word(0, kVocab - 1);
    for (int t = 0; t + 1 < length; ++t) sentence.tokens.emplace_back(kVocabulary[word(rng)]);
    sentence.tokens.emplace_back(".");

    // Distinct single-token substitution positions, never the final period.
    std::vector<int> positions(length - 1);
    std::iota(positions.begin(), positions.end(), 0);
    std::shuffle(positions.begin(), positions.end(), rng);
    std::size_t next = 0;
    double latent = config.true_intercept;
    typology::FeatureVector fv;
    fv.sentence_id = sentence.id;
    for (int type = 0; type < config.n_types; ++type) {
      for (int k = 0; k < counts[type]; ++k) {
        corpus::Edit e;
        e.start = positions[next++];
        e.end = e.start + 1;
        e.label = truth.categories[type];
        e.replacement = std::string(kVocabulary[word(rng)]);
        sentence.edits.push_back(std::move(e));
      }
      if (counts[type] > 0) fv.counts[truth.categories[type]] = counts[type];
      latent += weights[type] * counts[type];
    }
    fv.total_edits = total;
    std::sort(sentence.edits.begin(), sentence.edits.end(),
              [](const corpus::Edit& a, const corpus::Edit& b) { return a.start < b.start; });
    sentence.display_text = corpus::detokenize(sentence.tokens, corpus::SpaceMode::kConventional);
    truth.latent.push_back(latent);
    sim.features.push_back(std::move(fv));
    sim.corpus.push_back(std::move(sentence));
  }
  return sim;
}

SimAnnotations generate_annotations(const corpus::Corpus& corpus,
                                    const GroundTruth& truth,
                                    const SimConfig& config) {
  config.validate();
  const auto split = corpus::split_by_errors(corpus);

  corpus::BatchPlan plan = config.plan;
  plan.seed = splitmix64(config.seed ^ stream_tag("sim-pool"));
  const auto pool = corpus::sample_repeat_pool(split.errorful, plan);

  std::vector<corpus::Batch> batches;
  for (int pass = 0; pass < config.scores_per_sentence; ++pass) {
    corpus::BatchPlan pass_plan = config.plan;
    pass_plan.seed = splitmix64(config.seed ^ stream_tag("sim-pass") ^
                                static_cast<std::uint64_t>(pass));
    auto set = corpus::compose_batches(split.errorful, split.clean, pass_plan, pool);
    for (auto& b : set.batches) {
      b.batch_id = static_cast<int>(batches.size());
      batches.push_back(std::move(b));
    }
  }

  const std::size_t per = static_cast<std::size_t>(config.batches_per_annotator);
  const std::size_t n_annotators = (batches.size() + per - 1) / per;
  auto kinds = allocate_kinds(config.annotator_mix, n_annotators);
  {
    Engine krng = substream(config.seed, "sim-kinds");
    std::shuffle(kinds.begin(), kinds.end(), krng);
  }

  struct Annotator {
    std::string id;
    AnnotatorKind kind;
    double gain, offset;
    int constant_score;
  };
  std::vector<Annotator> annotators;
  SimAnnotations out;
  for (std::size_t a = 0; a < n_annotators; ++a) {
    Engine rng = substream(config.seed, "sim-annotator", a);
    Annotator ann;
    ann.id = annotator_name(a);
    ann.kind = kinds[a];
    ann.gain = std::uniform_real_distribution<double>(config.gain_min, config.gain_max)(rng);
    ann.offset =
        std::uniform_real_distribution<double>(config.offset_min, config.offset_max)(rng);
    ann.constant_score = std::uniform_int_distribution<int>(1, 100)(rng);
    out.kinds[ann.id] = ann.kind;
    annotators.push_back(std::move(ann));
  }

  std::size_t saturated = 0, scored = 0;
  std::normal_distribution<double> noise(0.0, 1.0);
  for (const auto& batch : batches) {
    const Annotator& ann = annotators[static_cast<std::size_t>(batch.batch_id) / per];
    Engine rng = substream(config.seed, "sim-batch", static_cast<std::uint64_t>(batch.batch_id));
    const double threshold = 350.0 * static_cast<double>(batch.items.size()) / 100.0;
    const double seconds =
        ann.kind == AnnotatorKind::kSpeeder
            ? std::uniform_real_distribution<double>(0.4 * threshold, 0.97 * threshold)(rng)
            : std::uniform_real_distribution<double>(1.2 * threshold, 3.5 * threshold)(rng);
    const double rounded_seconds = std::round(seconds * 10.0) / 10.0;
    for (const auto& item : batch.items) {
      int raw;
      if (ann.kind == AnnotatorKind::kConstant) {
        raw = ann.constant_score;
      } else {
        const double latent = truth.latent.at(static_cast<std::size_t>(item.sentence_id));
        const double eps = config.noise_sd * noise(rng);
        const double value = std::round(ann.gain * (latent + eps) + ann.offset);
        const double clamped = std::clamp(value, 1.0, 100.0);
        if (clamped != value) ++saturated;
        ++scored;
        raw = static_cast<int>(clamped);
        if (ann.kind == AnnotatorKind::kAnti) raw = 101 - raw;
      }
      out.records.push_back({ann.id, batch.batch_id, item.sentence_id, item.role, raw,
                             rounded_seconds});
    }
  }
  out.saturation_fraction =
      scored == 0 ? 0.0 : static_cast<double>(saturated) / static_cast<double>(scored);
  return out;
}

}  // namespace bother::simulator
