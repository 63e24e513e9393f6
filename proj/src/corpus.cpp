#include "bother/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "bother/error.hpp"
#include "bother/random.hpp"

namespace bother::corpus {

namespace {

constexpr std::string_view kFieldSep = "|||";
constexpr std::string_view kNone = "-NONE-";

std::vector<std::string> split_fields(std::string_view s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = s.find(kFieldSep, pos);
    if (next == std::string_view::npos) {
      out.emplace_back(s.substr(pos));
      return out;
    }
    out.emplace_back(s.substr(pos, next - pos));
    pos = next + kFieldSep.size();
  }
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_int(std::string_view s, int& value) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

bool overlaps(const Edit& a, const Edit& b) {
  if (a.start == b.start && a.end == b.end) return true;
  return a.start < b.end && b.start < a.end;
}

struct PendingSentence {
  Sentence sentence;
  std::vector<std::pair<int, std::size_t>> noops;  // annotator, line
  std::vector<std::size_t> edit_lines;
};

void finish(PendingSentence& p, SpaceMode mode, Corpus& out) {
  Sentence& s = p.sentence;
  for (const auto& [annotator, line] : p.noops) {
    for (const Edit& e : s.edits) {
      if (e.annotator_id == annotator) {
        throw ParseError(line, "noop annotation mixed with edits of annotator " +
                                   std::to_string(annotator));
      }
    }
  }
  for (std::size_t i = 0; i < s.edits.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (s.edits[i].annotator_id == s.edits[j].annotator_id &&
          overlaps(s.edits[i], s.edits[j])) {
        throw ParseError(p.edit_lines[i], "overlapping edits from annotator " +
                                              std::to_string(s.edits[i].annotator_id));
      }
    }
  }
  std::stable_sort(s.edits.begin(), s.edits.end(),
                   [](const Edit& a, const Edit& b) {
                     return std::tie(a.start, a.end) < std::tie(b.start, b.end);
                   });
  s.id = static_cast<int>(out.size());
  s.display_text = detokenize(s.tokens, mode);
  out.push_back(std::move(s));
}

}  // namespace

SpaceMode parse_space_mode(std::string_view name) {
  if (name == "conventional") return SpaceMode::kConventional;
  if (name == "verbatim_paper" || name == "verbatim") {
    return SpaceMode::kVerbatimPaper;
  }
  throw ConfigError("unknown space mode '" + std::string(name) + "'");
}

std::string_view to_string(SpaceMode mode) {
  return mode == SpaceMode::kConventional ? "conventional" : "verbatim_paper";
}

std::string normalize_spaces(std::string_view raw, SpaceMode mode) {
  const std::string_view drop_after =
      mode == SpaceMode::kConventional ? "(" : ")";
  const std::string_view drop_before =
      mode == SpaceMode::kConventional ? ")!%.$/," : "(!%.$/,";

  std::string out;
  out.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    if (raw[i] != ' ') {
      out.push_back(raw[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < raw.size() && raw[j] == ' ') ++j;
    // Runs are maximal, so out.back() is the non-space left neighbour.
    const bool after = !out.empty() && drop_after.find(out.back()) != std::string_view::npos;
    const bool before = j < raw.size() && drop_before.find(raw[j]) != std::string_view::npos;
    if (!after && !before) out.append(raw.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string detokenize(std::span<const std::string> tokens, SpaceMode mode) {
  std::string joined;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) joined.push_back(' ');
    joined += tokens[i];
  }
  return normalize_spaces(joined, mode);
}

Corpus parse_m2(std::istream& in, SpaceMode mode) {
  Corpus out;
  std::optional<PendingSentence> pending;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (pending) {
        finish(*pending, mode, out);
        pending.reset();
      }
      continue;
    }
    if (line == "S" || line.starts_with("S ")) {
      if (pending) finish(*pending, mode, out);
      pending.emplace();
      pending->sentence.tokens =
          split_ws(std::string_view(line).substr(std::min<std::size_t>(2, line.size())));
      continue;
    }
    if (!line.starts_with("A ")) {
      throw ParseError(lineno, "expected 'S ' or 'A ' line");
    }
    if (!pending) throw ParseError(lineno, "'A' line before any 'S' line");

    auto fields = split_fields(std::string_view(line).substr(2));
    if (fields.size() != 6) {
      throw ParseError(lineno, "expected 6 '|||'-separated fields, got " +
                                   std::to_string(fields.size()));
    }
    auto span = split_ws(fields[0]);
    Edit e;
    if (span.size() != 2 || !parse_int(span[0], e.start) ||
        !parse_int(span[1], e.end)) {
      throw ParseError(lineno, "malformed span '" + fields[0] + "'");
    }
    auto annotator = split_ws(fields[5]);
    if (annotator.size() != 1 || !parse_int(annotator[0], e.annotator_id)) {
      throw ParseError(lineno, "malformed annotator id '" + fields[5] + "'");
    }
    const bool noop = fields[1] == "noop" || (e.start == -1 && e.end == -1);
    if (noop) {
      pending->noops.emplace_back(e.annotator_id, lineno);
      continue;
    }
    const int n_tokens = static_cast<int>(pending->sentence.tokens.size());
    if (e.start < 0 || e.start > e.end) {
      throw ParseError(lineno, "malformed span '" + fields[0] + "'");
    }
    if (e.end > n_tokens) {
      throw ParseError(lineno, "span '" + fields[0] + "' beyond sentence of " +
                                   std::to_string(n_tokens) + " tokens");
    }
    e.label = fields[1];
    e.replacement = fields[2] == kNone ? std::string() : fields[2];
    e.required = fields[3];
    e.comment = fields[4];
    pending->sentence.edits.push_back(std::move(e));
    pending->edit_lines.push_back(lineno);
  }
  if (pending) finish(*pending, mode, out);
  return out;
}

Corpus parse_m2_string(std::string_view text, SpaceMode mode) {
  std::istringstream in{std::string(text)};
  return parse_m2(in, mode);
}

void write_m2(std::ostream& out, const Corpus& corpus) {
  for (const Sentence& s : corpus) {
    out << 'S';
    for (const auto& t : s.tokens) out << ' ' << t;
    out << '\n';
    for (const Edit& e : s.edits) {
      out << "A " << e.start << ' ' << e.end << kFieldSep << e.label << kFieldSep
          << (e.replacement.empty() ? std::string(kNone) : e.replacement)
          << kFieldSep << e.required << kFieldSep << e.comment << kFieldSep
          << e.annotator_id << '\n';
    }
    out << '\n';
  }
}

std::string to_m2_string(const Corpus& corpus) {
  std::ostringstream out;
  write_m2(out, corpus);
  return out.str();
}

FilterResult filter_sentences(const Corpus& corpus, const FilterRuleSet& rules) {
  if (rules.min_words < 1) throw ConfigError("min_words must be >= 1");
  FilterResult result;
  for (const Sentence& s : corpus) {
    if (static_cast<int>(s.tokens.size()) < rules.min_words) {
      result.rejected.push_back({s.id, "min_words"});
      continue;
    }
    auto hit = std::find_if(rules.forbidden_substrings.begin(),
                            rules.forbidden_substrings.end(),
                            [&](const std::string& f) {
                              return s.display_text.find(f) != std::string::npos;
                            });
    if (hit != rules.forbidden_substrings.end()) {
      result.rejected.push_back({s.id, "forbidden:\"" + *hit + "\""});
      continue;
    }
    result.kept.push_back(s);
  }
  return result;
}

SplitResult split_by_errors(const Corpus& corpus) {
  SplitResult result;
  for (const Sentence& s : corpus) {
    (s.edits.empty() ? result.clean : result.errorful).push_back(s);
  }
  return result;
}

void BatchPlan::validate() const {
  if (n_clean < 0 || n_errorful < 0 || n_repeat < 0 || batch_size <= 0) {
    throw ConfigError("batch plan sizes must be non-negative");
  }
  if (n_clean + n_errorful + n_repeat != batch_size) {
    throw ConfigError("n_clean + n_errorful + n_repeat must equal batch_size");
  }
  if (repeat_pool_size < n_repeat) {
    throw ConfigError("repeat_pool_size must be >= n_repeat");
  }
  if (n_batches < 0) throw ConfigError("n_batches must be >= 0");
}

Role parse_role(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "clean") return Role::kClean;
  if (lower == "errorful") return Role::kErrorful;
  if (lower == "repeat") return Role::kRepeat;
  throw ConfigError("unknown role '" + std::string(name) + "'");
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kClean:
      return "clean";
    case Role::kErrorful:
      return "errorful";
    case Role::kRepeat:
      return "repeat";
  }
  return "errorful";
}

std::size_t max_batches(std::size_t n_errorful, std::size_t n_clean,
                        const BatchPlan& plan) {
  std::size_t limit = std::numeric_limits<std::size_t>::max();
  if (plan.n_clean > 0) limit = std::min(limit, n_clean / plan.n_clean);
  if (plan.n_errorful > 0) limit = std::min(limit, n_errorful / plan.n_errorful);
  if (plan.n_repeat > 0 && n_errorful < static_cast<std::size_t>(plan.repeat_pool_size)) {
    limit = 0;
  }
  return limit;
}

std::vector<int> sample_repeat_pool(const Corpus& errorful, const BatchPlan& plan) {
  plan.validate();
  if (plan.n_repeat == 0) return {};
  if (errorful.size() < static_cast<std::size_t>(plan.repeat_pool_size)) {
    throw CapacityError(0, "repeat pool needs " + std::to_string(plan.repeat_pool_size) +
                               " errorful sentences, have " +
                               std::to_string(errorful.size()));
  }
  std::vector<int> ids;
  ids.reserve(errorful.size());
  for (const Sentence& s : errorful) ids.push_back(s.id);
  Engine rng = substream(plan.seed, "repeat-pool");
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(static_cast<std::size_t>(plan.repeat_pool_size));
  return ids;
}

BatchSet compose_batches(const Corpus& errorful, const Corpus& clean,
                         const BatchPlan& plan) {
  const auto pool = sample_repeat_pool(errorful, plan);
  return compose_batches(errorful, clean, plan, pool);
}

BatchSet compose_batches(const Corpus& errorful, const Corpus& clean,
                         const BatchPlan& plan, std::span<const int> pool) {
  plan.validate();
  if (plan.n_repeat > 0 && pool.size() < static_cast<std::size_t>(plan.n_repeat)) {
    throw ConfigError("repeat pool smaller than n_repeat");
  }
  std::size_t limit = plan.n_clean > 0 || plan.n_errorful > 0
                          ? std::numeric_limits<std::size_t>::max()
                          : 0;
  if (plan.n_clean > 0) limit = std::min(limit, clean.size() / plan.n_clean);
  if (plan.n_errorful > 0) limit = std::min(limit, errorful.size() / plan.n_errorful);
  const std::size_t wanted =
      plan.n_batches == 0 ? limit : static_cast<std::size_t>(plan.n_batches);
  if (limit == 0 || wanted > limit) {
    throw CapacityError(limit, "insufficient sentences: " +
                                   std::to_string(errorful.size()) + " errorful and " +
                                   std::to_string(clean.size()) +
                                   " clean allow at most " + std::to_string(limit) +
                                   " batch(es)");
  }

  std::unordered_map<int, const Sentence*> by_id;
  for (const Sentence& s : errorful) by_id.emplace(s.id, &s);
  for (const Sentence& s : clean) by_id.emplace(s.id, &s);
  for (int id : pool) {
    if (!by_id.contains(id)) {
      throw ConfigError("repeat pool id " + std::to_string(id) + " not in corpus");
    }
  }

  std::vector<int> clean_ids, errorful_ids;
  for (const Sentence& s : clean) clean_ids.push_back(s.id);
  for (const Sentence& s : errorful) errorful_ids.push_back(s.id);
  Engine unique_rng = substream(plan.seed, "unique-order");
  std::shuffle(clean_ids.begin(), clean_ids.end(), unique_rng);
  std::shuffle(errorful_ids.begin(), errorful_ids.end(), unique_rng);

  BatchSet result;
  result.repeat_pool.assign(pool.begin(), pool.end());
  std::unordered_set<int> pool_set(pool.begin(), pool.end());
  std::unordered_set<int> overlap;

  for (std::size_t k = 0; k < wanted; ++k) {
    Batch batch;
    batch.batch_id = static_cast<int>(k);
    batch.seed = plan.seed;
    auto add = [&](int id, Role role) {
      batch.items.push_back({id, role, by_id.at(id)->display_text});
    };
    for (int i = 0; i < plan.n_clean; ++i) {
      add(clean_ids[k * plan.n_clean + i], Role::kClean);
    }
    for (int i = 0; i < plan.n_errorful; ++i) {
      int id = errorful_ids[k * plan.n_errorful + i];
      if (pool_set.contains(id)) overlap.insert(id);
      add(id, Role::kErrorful);
    }
    if (plan.n_repeat > 0) {
      std::vector<int> draw(pool.begin(), pool.end());
      Engine rng = substream(plan.seed, "repeat-draw", k);
      for (int i = 0; i < plan.n_repeat; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, draw.size() - 1);
        std::swap(draw[i], draw[pick(rng)]);
        add(draw[i], Role::kRepeat);
      }
    }
    Engine order_rng = substream(plan.seed, "presentation-order", k);
    std::shuffle(batch.items.begin(), batch.items.end(), order_rng);
    result.batches.push_back(std::move(batch));
  }
  result.pool_overlap = static_cast<int>(overlap.size());
  return result;
}

}  // namespace bother::corpus
