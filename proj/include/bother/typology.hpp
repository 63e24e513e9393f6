#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bother/corpus.hpp"

namespace bother::typology {

inline constexpr std::string_view kOther = "OTHER";

// Maps raw edit labels onto analysis categories. Labels without a mapping
// fall into OTHER.
struct Typology {
  std::string name;
  std::vector<std::string> categories;  // sorted, unique; may include OTHER
  std::map<std::string, std::string> mapping;
  int min_support = 100;
  // Strip R:/M:/U: before lookup.
  bool coarsen = false;

  std::string category_of(std::string_view raw_label) const;
};

// CSV rows raw_label,category; an optional header "raw_label,category".
Typology load_typology(std::istream& in, std::string name);

// One category per distinct raw label seen in the corpus.
Typology identity_typology(const corpus::Corpus& corpus, std::string name);

// ERRANT labels with the operation prefix removed.
Typology coarse_errant_typology(const corpus::Corpus& corpus);

std::string coarsen_errant(std::string_view label);

// Corpus-wide edit count per mapped category.
std::map<std::string, long> category_counts(const corpus::Corpus& corpus,
                                            const Typology& typology);

Typology apply_min_support(const Typology& typology,
                           const std::map<std::string, long>& counts);

struct FeatureVector {
  int sentence_id = 0;
  std::map<std::string, int> counts;  // nonzero entries only
  int total_edits = 0;

  int count(const std::string& category) const {
    auto it = counts.find(category);
    return it == counts.end() ? 0 : it->second;
  }
};

FeatureVector featurize(const corpus::Sentence& sentence, const Typology& typology);
std::vector<FeatureVector> featurize(const corpus::Corpus& corpus,
                                     const Typology& typology);

// CSV with header sentence_id,<category...>.
void write_feature_csv(std::ostream& out, const std::vector<FeatureVector>& features,
                       const std::vector<std::string>& categories);

}  // namespace bother::typology
