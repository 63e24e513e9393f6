#include <doctest.h>

#include <sstream>

#include "bother/corpus.hpp"
#include "bother/error.hpp"
#include "bother/typology.hpp"
#include "oracles.hpp"

using namespace bother;
using namespace bother::typology;

namespace {

corpus::Sentence with_labels(int id, const std::vector<std::string>& labels) {
  corpus::Sentence s;
  s.id = id;
  s.tokens = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
  int pos = 0;
  for (const auto& l : labels) {
    s.edits.push_back({.start = pos, .end = pos + 1, .label = l, .replacement = "x"});
    ++pos;
  }
  return s;
}

Typology verb_det() {
  std::istringstream in("raw_label,category\nVt,VERB\nVform,VERB\nArtOrDet,DET\n");
  return load_typology(in, "grouped");
}

}  // namespace

TEST_SUITE("typology") {

TEST_CASE("load_typology") {
  std::istringstream in("Vt,VERB\nVform,VERB\n");
  const auto t = load_typology(in, "verbs");
  CHECK(t.name == "verbs");
  CHECK(t.categories == std::vector<std::string>{"VERB"});
  CHECK(t.category_of("Vt") == "VERB");
  CHECK(t.category_of("Nn") == "OTHER");

  std::istringstream bad("Vt,VERB\nVt,NOUN\n");
  CHECK_THROWS_AS(load_typology(bad, "x"), ParseError);
  std::istringstream dup("Vt,VERB\nVt,VERB\n");
  CHECK_NOTHROW(load_typology(dup, "x"));
}

TEST_CASE("identity typology has one category per label") {
  corpus::Corpus c = {with_labels(0, {"Vt", "Nn"}), with_labels(1, {"Vt", "ArtOrDet"}),
                      with_labels(2, {})};
  const auto t = identity_typology(c, "nucle");
  CHECK(t.categories == std::vector<std::string>{"ArtOrDet", "Nn", "Vt"});
  CHECK(t.category_of("Vt") == "Vt");
}

TEST_CASE("coarsen_errant") {
  CHECK(coarsen_errant("R:NOUN") == "NOUN");
  CHECK(coarsen_errant("U:DET") == "DET");
  CHECK(coarsen_errant("M:PUNCT") == "PUNCT");
  CHECK(coarsen_errant("ORTH") == "ORTH");
  CHECK(coarsen_errant("R:VERB:SVA") == "VERB:SVA");
  corpus::Corpus c = {with_labels(0, {"R:NOUN", "U:NOUN", "M:DET"})};
  const auto t = coarse_errant_typology(c);
  CHECK(t.categories == std::vector<std::string>{"DET", "NOUN"});
  CHECK(featurize(c[0], t).count("NOUN") == 2);
}

TEST_CASE("apply_min_support") {
  corpus::Corpus c;
  for (int i = 0; i < 500; ++i) c.push_back(with_labels(i, {"A"}));
  for (int i = 0; i < 50; ++i) c.push_back(with_labels(500 + i, {"B"}));
  c.push_back(with_labels(550, {"C", "C", "C"}));
  auto t = identity_typology(c, "id");
  const auto counts = category_counts(c, t);
  CHECK(counts.at("A") == 500);
  CHECK(counts.at("C") == 3);

  const auto merged = apply_min_support(t, counts);
  CHECK(merged.categories == std::vector<std::string>{"A", "OTHER"});
  CHECK(merged.category_of("B") == "OTHER");
  CHECK(merged.category_of("C") == "OTHER");
  CHECK(merged.categories.size() <= t.categories.size());

  t.min_support = 0;
  const auto same = apply_min_support(t, counts);
  CHECK(same.categories == t.categories);

  t.min_support = 1000;
  CHECK_THROWS_AS(apply_min_support(t, counts), ConfigError);

  // total_edits is untouched by merging.
  for (const auto& s : c) CHECK(featurize(s, merged).total_edits == featurize(s, t).total_edits);
}

TEST_CASE("featurize examples") {
  const auto id = identity_typology({with_labels(0, {"Vt"})}, "id");
  CHECK(featurize(with_labels(3, {}), id).counts.empty());
  CHECK(featurize(with_labels(3, {}), id).total_edits == 0);
  const auto two = featurize(with_labels(4, {"Vt", "Vt"}), id);
  CHECK(two.counts == std::map<std::string, int>{{"Vt", 2}});
  CHECK(two.sentence_id == 4);

  const auto grouped = featurize(with_labels(5, {"Vt", "ArtOrDet"}), verb_det());
  CHECK(grouped.counts == std::map<std::string, int>{{"DET", 1}, {"VERB", 1}});
  const auto unmapped = featurize(with_labels(6, {"Wci"}), verb_det());
  CHECK(unmapped.counts == std::map<std::string, int>{{"OTHER", 1}});
}

TEST_CASE("edits are conserved under mapping") {
  const auto c = oracle::fuzz_corpus(400, 21);
  for (const auto& t : {identity_typology(c, "id"), coarse_errant_typology(c), verb_det()}) {
    std::map<std::string, long> by_feature;
    for (const auto& s : c) {
      const auto f = featurize(s, t);
      int sum = 0;
      for (const auto& [cat, n] : f.counts) {
        CHECK(n > 0);
        sum += n;
        by_feature[cat] += n;
      }
      CHECK(sum == f.total_edits);
      CHECK(f.total_edits == static_cast<int>(s.edits.size()));
    }
    std::map<std::string, long> by_label;
    for (const auto& s : c) {
      for (const auto& e : s.edits) ++by_label[t.category_of(e.label)];
    }
    CHECK(by_feature == by_label);
    CHECK(by_feature == category_counts(c, t));
  }
}

TEST_CASE("featurization is equivariant under label renaming") {
  const auto c = oracle::fuzz_corpus(200, 8);
  const auto t = identity_typology(c, "id");
  std::ostringstream mapping;
  for (const auto& cat : t.categories) mapping << cat << ",renamed_" << cat << "\n";
  std::istringstream in(mapping.str());
  const auto renamed = load_typology(in, "renamed");
  for (const auto& s : c) {
    const auto a = featurize(s, t);
    const auto b = featurize(s, renamed);
    std::map<std::string, int> mapped;
    for (const auto& [cat, n] : a.counts) mapped["renamed_" + cat] = n;
    CHECK(mapped == b.counts);
  }
}

TEST_CASE("feature csv") {
  const auto t = verb_det();
  std::vector<FeatureVector> f = {featurize(with_labels(0, {"Vt", "Vt", "ArtOrDet"}), t),
                                  featurize(with_labels(1, {}), t)};
  std::ostringstream out;
  write_feature_csv(out, f, t.categories);
  CHECK(out.str() == "sentence_id,DET,VERB\n0,1,2\n1,0,0\n");
}

}
