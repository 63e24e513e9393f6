#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "bother/corpus.hpp"
#include "bother/error.hpp"
#include "bother/importance.hpp"
#include "bother/qc.hpp"
#include "bother/simulator.hpp"
#include "bother/stats.hpp"

using namespace bother;
using namespace bother::simulator;

namespace {

SimConfig base(std::uint64_t seed) {
  SimConfig cfg;
  cfg.n_types = 5;
  cfg.n_sentences = 1200;
  cfg.scores_per_sentence = 4;
  cfg.seed = seed;
  cfg.plan.repeat_pool_size = 100;
  return cfg;
}

std::map<std::string, std::vector<const qc::AnnotationRecord*>> by_annotator(
    const std::vector<qc::AnnotationRecord>& r) {
  std::map<std::string, std::vector<const qc::AnnotationRecord*>> out;
  for (const auto& x : r) out[x.annotator_id].push_back(&x);
  return out;
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("all-clean corpus has a flat latent score") {
  auto cfg = base(1);
  cfg.clean_fraction = 1.0;
  cfg.true_intercept = 0.7;
  const auto sc = generate_corpus(cfg);
  CHECK(sc.corpus.size() == 1200);
  for (const auto& s : sc.corpus) CHECK(s.edits.empty());
  for (double l : sc.truth.latent) CHECK(l == 0.7);
}

TEST_CASE("zero weights give a constant latent score") {
  auto cfg = base(2);
  cfg.true_weights = std::vector<double>(5, 0.0);
  const auto sc = generate_corpus(cfg);
  for (double l : sc.truth.latent) CHECK(l == 0.0);
}

TEST_CASE("latent score is intercept plus weighted counts") {
  auto cfg = base(3);
  cfg.max_edits_per_sentence = 3;
  cfg.true_intercept = -0.25;
  const auto sc = generate_corpus(cfg);
  REQUIRE(sc.features.size() == sc.corpus.size());
  std::size_t clean = 0;
  for (std::size_t i = 0; i < sc.corpus.size(); ++i) {
    double want = cfg.true_intercept;
    for (const auto& [cat, n] : sc.features[i].counts) {
      CHECK(n <= 3);
      want += sc.truth.weights.at(cat) * n;
    }
    CHECK(std::fabs(sc.truth.latent[i] - want) < 1e-12);
    CHECK(sc.features[i].total_edits == static_cast<int>(sc.corpus[i].edits.size()));
    clean += sc.corpus[i].edits.empty() ? 1 : 0;
  }
  CHECK(static_cast<double>(clean) / 1200 == doctest::Approx(0.18).epsilon(0.02));
}

TEST_CASE("default weights are a shuffled positive ladder") {
  const auto sc = generate_corpus(base(4));
  std::vector<double> w;
  for (const auto& [k, v] : sc.truth.weights) w.push_back(v);
  CHECK(w.size() == 5);
  CHECK(!std::is_sorted(w.begin(), w.end()));
  std::sort(w.begin(), w.end());
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(w[i] == doctest::Approx(1.5 * (i + 1) / 5));
}

TEST_CASE("generation is deterministic") {
  const auto cfg = base(3);
  const auto a = generate_corpus(cfg);
  const auto b = generate_corpus(cfg);
  CHECK(corpus::to_m2_string(a.corpus) == corpus::to_m2_string(b.corpus));
  const auto ra = generate_annotations(a.corpus, a.truth, cfg).records;
  const auto rb = generate_annotations(b.corpus, b.truth, cfg).records;
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].annotator_id == rb[i].annotator_id);
    CHECK(ra[i].sentence_id == rb[i].sentence_id);
    CHECK(ra[i].raw_score == rb[i].raw_score);
    CHECK(ra[i].batch_seconds == rb[i].batch_seconds);
  }
  auto other = cfg;
  other.seed = 4;
  CHECK(corpus::to_m2_string(generate_corpus(other).corpus) != corpus::to_m2_string(a.corpus));
}

TEST_CASE("simulated sentences pass the corpus filters") {
  const auto sc = generate_corpus(base(5));
  const auto r = corpus::filter_sentences(sc.corpus, {});
  CHECK(r.rejected.empty());
  const auto back = corpus::parse_m2_string(corpus::to_m2_string(sc.corpus));
  CHECK(back == sc.corpus);
}

TEST_CASE("noiseless honest scores are an affine image of the latent score") {
  auto cfg = base(6);
  cfg.n_types = 3;
  cfg.true_weights = {1.0, 2.0, 3.0};
  cfg.noise_sd = 0.0;
  cfg.gain_min = cfg.gain_max = 5.0;
  cfg.offset_min = cfg.offset_max = 10.0;
  const auto sc = generate_corpus(cfg);
  const auto ann = generate_annotations(sc.corpus, sc.truth, cfg);
  CHECK(ann.saturation_fraction == 0.0);
  const auto z = qc::z_normalize(ann.records);
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> pairs;
  for (const auto& zr : z.records) {
    pairs[zr.record.annotator_id].first.push_back(zr.z);
    pairs[zr.record.annotator_id].second.push_back(sc.truth.latent[zr.record.sentence_id]);
  }
  CHECK(!pairs.empty());
  for (const auto& [id, p] : pairs) CHECK(stats::pearson(p.first, p.second) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("annotator archetypes") {
  auto cfg = base(7);
  cfg.annotator_mix = {0.4, 0.2, 0.2, 0.2};
  const auto sc = generate_corpus(cfg);
  const auto ann = generate_annotations(sc.corpus, sc.truth, cfg);
  const auto groups = by_annotator(ann.records);
  CHECK(groups.size() == ann.kinds.size());
  for (const auto& [id, recs] : groups) {
    const AnnotatorKind kind = ann.kinds.at(id);
    std::map<int, double> seconds;
    std::map<int, int> items;
    std::set<int> scores;
    for (const auto* r : recs) {
      CHECK(r->raw_score >= 1);
      CHECK(r->raw_score <= 100);
      seconds[r->batch_id] = r->batch_seconds;
      ++items[r->batch_id];
      scores.insert(r->raw_score);
    }
    for (const auto& [b, s] : seconds) {
      const double threshold = 350.0 * items[b] / 100.0;
      if (kind == AnnotatorKind::kSpeeder) {
        CHECK(s < threshold);
      } else {
        CHECK(s >= threshold);
      }
    }
    if (kind == AnnotatorKind::kConstant) {
      CHECK(scores.size() == 1);
    } else {
      CHECK(scores.size() > 1);
    }
  }
}

TEST_CASE("filter soundness on planted populations") {
  std::size_t anti_total = 0, anti_removed = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto cfg = base(seed);
    cfg.annotator_mix = {0.7, 0.1, 0.1, 0.1};
    const auto sc = generate_corpus(cfg);
    const auto ann = generate_annotations(sc.corpus, sc.truth, cfg);
    const auto result = qc::run_qc(ann.records, {});
    std::size_t honest = 0, honest_kept = 0;
    for (const auto& [id, kind] : ann.kinds) {
      const auto& p = result.profiles.at(id);
      switch (kind) {
        case AnnotatorKind::kSpeeder:
          CHECK(p.removal_stage == qc::Stage::kTime);
          break;
        case AnnotatorKind::kConstant:
          CHECK(p.removal_stage == qc::Stage::kDegenerate);
          break;
        case AnnotatorKind::kAnti:
          ++anti_total;
          anti_removed += p.kept ? 0 : 1;
          break;
        case AnnotatorKind::kHonest:
          ++honest;
          honest_kept += p.kept ? 1 : 0;
          break;
      }
    }
    CHECK(static_cast<double>(honest_kept) >= 0.95 * static_cast<double>(honest));
  }
  CHECK(anti_total > 0);
  CHECK(anti_removed == anti_total);
}

TEST_CASE("noiseless honest data recovers the true order") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto cfg = base(seed);
    cfg.noise_sd = 0.0;
    const auto sc = generate_corpus(cfg);
    const auto ann = generate_annotations(sc.corpus, sc.truth, cfg);
    CHECK(ann.saturation_fraction == 0.0);
    const auto result = qc::run_qc(ann.records, {});
    typology::Typology t;
    t.name = "sim";
    t.categories = sc.truth.categories;
    for (const auto& k : t.categories) t.mapping[k] = k;
    const auto fit = importance::fit_ols(importance::build_design(result.surviving, sc.features, t));
    const auto ranks = importance::rank_types(fit);
    std::vector<std::pair<double, std::string>> truth;
    for (const auto& [k, w] : sc.truth.weights) truth.emplace_back(-w, k);
    std::sort(truth.begin(), truth.end());
    for (std::size_t i = 0; i < truth.size(); ++i) CHECK(ranks.order[i] == truth[i].second);
  }
}

TEST_CASE("saturation is reported") {
  auto cfg = base(8);
  cfg.true_weights = std::vector<double>(5, 40.0);
  const auto sc = generate_corpus(cfg);
  CHECK(generate_annotations(sc.corpus, sc.truth, cfg).saturation_fraction > 0.0);
}

TEST_CASE("config validation") {
  auto cfg = base(1);
  cfg.annotator_mix = {0.5, 0.1, 0.1, 0.1};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = base(1);
  cfg.n_types = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = base(1);
  cfg.true_weights = {1.0};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

}
