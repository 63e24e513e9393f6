#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bother::corpus {

// A typed correction. start == end is an insertion; an empty replacement
// is a deletion.
struct Edit {
  int start = 0;
  int end = 0;
  std::string label;
  std::string replacement;
  int annotator_id = 0;
  std::string required = "REQUIRED";
  std::string comment = "-NONE-";

  bool operator==(const Edit&) const = default;
};

struct Sentence {
  int id = 0;
  std::vector<std::string> tokens;
  std::vector<Edit> edits;  // sorted by (start, end)
  std::string display_text;

  bool operator==(const Sentence&) const = default;
};

using Corpus = std::vector<Sentence>;

enum class SpaceMode {
  kConventional,   // drop spaces after "(" and before ")!%.$/,"
  kVerbatimPaper,  // drop spaces after ")" and before "(!%.$/,"
};

SpaceMode parse_space_mode(std::string_view name);
std::string_view to_string(SpaceMode mode);

std::string normalize_spaces(std::string_view raw, SpaceMode mode);

// Joins tokens with single spaces and normalizes.
std::string detokenize(std::span<const std::string> tokens, SpaceMode mode);

// Reads an M2 stream. Throws ParseError naming the offending line.
Corpus parse_m2(std::istream& in, SpaceMode mode = SpaceMode::kConventional);
Corpus parse_m2_string(std::string_view text,
                       SpaceMode mode = SpaceMode::kConventional);

// Writes M2 such that parse_m2(write_m2(c)) == c.
void write_m2(std::ostream& out, const Corpus& corpus);
std::string to_m2_string(const Corpus& corpus);

struct FilterRuleSet {
  int min_words = 7;
  std::vector<std::string> forbidden_substrings = {"http", "&", "[", "]",
                                                   "*",    "\"", ";"};
};

struct Rejection {
  int sentence_id = 0;
  std::string reason;  // "min_words" or forbidden:"<substring>"

  bool operator==(const Rejection&) const = default;
};

struct FilterResult {
  Corpus kept;
  std::vector<Rejection> rejected;
};

FilterResult filter_sentences(const Corpus& corpus, const FilterRuleSet& rules);

struct SplitResult {
  Corpus errorful;
  Corpus clean;
};

SplitResult split_by_errors(const Corpus& corpus);

struct BatchPlan {
  int batch_size = 100;
  int n_clean = 15;
  int n_errorful = 70;
  int n_repeat = 15;
  int repeat_pool_size = 400;
  std::uint64_t seed = 0;
  // 0 composes as many batches as the unique sentences allow.
  int n_batches = 0;

  void validate() const;
};

enum class Role { kClean, kErrorful, kRepeat };

Role parse_role(std::string_view name);  // case-insensitive
std::string_view to_string(Role role);

struct BatchItem {
  int sentence_id = 0;
  Role role = Role::kErrorful;
  std::string text;
};

struct Batch {
  int batch_id = 0;
  std::uint64_t seed = 0;
  std::vector<BatchItem> items;
};

struct BatchSet {
  std::vector<Batch> batches;
  std::vector<int> repeat_pool;  // sentence ids, sampling order
  // Pool sentences that were also served as unique errorful items.
  int pool_overlap = 0;
};

// Largest number of batches the unique clean/errorful streams can fill.
std::size_t max_batches(std::size_t n_errorful, std::size_t n_clean,
                        const BatchPlan& plan);

// Samples the repeat pool from the errorful set, seeded by plan.seed.
std::vector<int> sample_repeat_pool(const Corpus& errorful,
                                    const BatchPlan& plan);

BatchSet compose_batches(const Corpus& errorful, const Corpus& clean,
                         const BatchPlan& plan);

// Variant with a caller-supplied pool, shared across several runs.
BatchSet compose_batches(const Corpus& errorful, const Corpus& clean,
                         const BatchPlan& plan, std::span<const int> pool);

}  // namespace bother::corpus
