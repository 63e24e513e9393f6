#include "bother/typology.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>

#include "bother/error.hpp"
#include "bother/csv.hpp"

namespace bother::typology {

namespace {

std::vector<std::string> sorted_targets(const std::map<std::string, std::string>& m) {
  std::set<std::string> cats;
  for (const auto& [raw, cat] : m) cats.insert(cat);
  return {cats.begin(), cats.end()};
}

}  // namespace

std::string Typology::category_of(std::string_view raw_label) const {
  const std::string key = coarsen ? coarsen_errant(raw_label) : std::string(raw_label);
  auto it = mapping.find(key);
  return it == mapping.end() ? std::string(kOther) : it->second;
}

std::string coarsen_errant(std::string_view label) {
  if (label.size() > 2 && label[1] == ':' &&
      (label[0] == 'R' || label[0] == 'M' || label[0] == 'U')) {
    return std::string(label.substr(2));
  }
  return std::string(label);
}

Typology load_typology(std::istream& in, std::string name) {
  Typology t;
  t.name = std::move(name);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line == "raw_label,category") continue;
    auto fields = io::split_csv_line(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw ParseError(lineno, "expected raw_label,category");
    }
    auto [it, inserted] = t.mapping.emplace(fields[0], fields[1]);
    if (!inserted && it->second != fields[1]) {
      throw ParseError(lineno, "label '" + fields[0] + "' mapped to both '" +
                                   it->second + "' and '" + fields[1] + "'");
    }
  }
  if (t.mapping.empty()) throw ParseError(lineno, "empty typology mapping");
  t.categories = sorted_targets(t.mapping);
  return t;
}

Typology identity_typology(const corpus::Corpus& corpus, std::string name) {
  Typology t;
  t.name = std::move(name);
  for (const auto& s : corpus) {
    for (const auto& e : s.edits) t.mapping.emplace(e.label, e.label);
  }
  t.categories = sorted_targets(t.mapping);
  return t;
}

Typology coarse_errant_typology(const corpus::Corpus& corpus) {
  Typology t;
  t.name = "errant-coarse";
  t.coarsen = true;
  for (const auto& s : corpus) {
    for (const auto& e : s.edits) {
      auto c = coarsen_errant(e.label);
      t.mapping.emplace(c, c);
    }
  }
  t.categories = sorted_targets(t.mapping);
  return t;
}

std::map<std::string, long> category_counts(const corpus::Corpus& corpus,
                                            const Typology& typology) {
  std::map<std::string, long> counts;
  for (const auto& s : corpus) {
    for (const auto& e : s.edits) ++counts[typology.category_of(e.label)];
  }
  return counts;
}

Typology apply_min_support(const Typology& typology,
                           const std::map<std::string, long>& counts) {
  if (typology.min_support < 0) throw ConfigError("min_support must be >= 0");
  std::set<std::string> merged;
  bool survivor = false;
  for (const auto& c : typology.categories) {
    if (c == kOther) continue;
    auto it = counts.find(c);
    const long n = it == counts.end() ? 0 : it->second;
    if (n < typology.min_support) {
      merged.insert(c);
    } else {
      survivor = true;
    }
  }
  if (!survivor) {
    throw ConfigError("no category of typology '" + typology.name + "' reaches min_support " +
                      std::to_string(typology.min_support));
  }
  if (merged.empty()) return typology;

  Typology out = typology;
  for (auto& [raw, cat] : out.mapping) {
    if (merged.contains(cat)) cat = std::string(kOther);
  }
  out.categories.clear();
  for (const auto& c : typology.categories) {
    if (!merged.contains(c)) out.categories.push_back(c);
  }
  if (std::find(out.categories.begin(), out.categories.end(), kOther) ==
      out.categories.end()) {
    out.categories.emplace_back(kOther);
    std::sort(out.categories.begin(), out.categories.end());
  }
  return out;
}

FeatureVector featurize(const corpus::Sentence& sentence, const Typology& typology) {
  FeatureVector f;
  f.sentence_id = sentence.id;
  for (const auto& e : sentence.edits) {
    ++f.counts[typology.category_of(e.label)];
    ++f.total_edits;
  }
  return f;
}

std::vector<FeatureVector> featurize(const corpus::Corpus& corpus,
                                     const Typology& typology) {
  std::vector<FeatureVector> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(featurize(s, typology));
  return out;
}

void write_feature_csv(std::ostream& out, const std::vector<FeatureVector>& features,
                       const std::vector<std::string>& categories) {
  out << "sentence_id";
  for (const auto& c : categories) out << ',' << io::csv_escape(c);
  out << '\n';
  for (const auto& f : features) {
    out << f.sentence_id;
    for (const auto& c : categories) out << ',' << f.count(c);
    out << '\n';
  }
}

}  // namespace bother::typology
