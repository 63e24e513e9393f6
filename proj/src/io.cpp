#include "bother/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "bother/error.hpp"

namespace bother::io {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back().push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  return fields;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

json to_json(const corpus::Batch& batch) {
  json items = json::array();
  for (const auto& it : batch.items) {
    items.push_back({{"sentence_id", it.sentence_id},
                     {"role", corpus::to_string(it.role)},
                     {"text", it.text}});
  }
  return {{"batch_id", batch.batch_id}, {"seed", batch.seed}, {"items", items}};
}

json to_json(const corpus::BatchSet& set) {
  json batches = json::array();
  for (const auto& b : set.batches) batches.push_back(to_json(b));
  return {{"batches", batches},
          {"repeat_pool", set.repeat_pool},
          {"pool_overlap", set.pool_overlap}};
}

json to_json(const qc::Profiles& profiles) {
  auto opt = [](const std::optional<double>& v) -> json {
    return v ? json(*v) : json(nullptr);
  };
  json out = json::array();
  for (const auto& [id, p] : profiles) {
    out.push_back({{"annotator_id", id},
                   {"verdict", p.kept ? "kept" : "removed"},
                   {"removal_stage", qc::to_string(p.removal_stage)},
                   {"t", opt(p.t)},
                   {"df", opt(p.df)},
                   {"p", opt(p.p)},
                   {"repeat_corr", opt(p.repeat_corr)},
                   {"repeat_pairs", p.repeat_pairs},
                   {"n_records", p.n_records}});
  }
  return out;
}

json to_json(const qc::QcSummary& s) {
  json stages = json::object();
  for (const auto& c : s.stages) {
    stages[std::string(qc::to_string(c.stage))] = {{"removed", c.removed},
                                                   {"fraction", c.fraction}};
  }
  return {{"n_annotators", s.n_annotators},   {"n_kept", s.n_kept},
          {"n_records_in", s.n_records_in},   {"n_records_kept", s.n_records_kept},
          {"removed_fraction", s.removed_fraction}, {"stages", stages}};
}

namespace {

constexpr std::string_view kAnnotationHeader =
    "annotator_id,batch_id,sentence_id,role,raw_score,batch_seconds";

void write_record(std::ostream& out, const qc::AnnotationRecord& r) {
  out << csv_escape(r.annotator_id) << ',' << r.batch_id << ',' << r.sentence_id << ','
      << corpus::to_string(r.role) << ',' << r.raw_score << ','
      << format_double(r.batch_seconds);
}

template <typename T>
T parse_field(const std::string& s, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(line, "bad numeric field '" + s + "'");
  }
  return value;
}

}  // namespace

void write_annotations_csv(std::ostream& out,
                           const std::vector<qc::AnnotationRecord>& records) {
  out << kAnnotationHeader << '\n';
  for (const auto& r : records) {
    write_record(out, r);
    out << '\n';
  }
}

void write_zscored_csv(std::ostream& out, const std::vector<qc::ZScoredRecord>& records) {
  out << kAnnotationHeader << ",z\n";
  for (const auto& zr : records) {
    write_record(out, zr.record);
    out << ',' << format_double(zr.z) << '\n';
  }
}

std::vector<qc::ZScoredRecord> read_zscored_csv(std::istream& in) {
  std::vector<qc::ZScoredRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != std::string(kAnnotationHeader) + ",z") {
        throw ParseError(lineno, "expected z-scored annotation header");
      }
      continue;
    }
    auto f = split_csv_line(line);
    if (f.size() != 7) throw ParseError(lineno, "expected 7 fields");
    qc::ZScoredRecord zr;
    zr.record.annotator_id = f[0];
    zr.record.batch_id = parse_field<int>(f[1], lineno);
    zr.record.sentence_id = parse_field<int>(f[2], lineno);
    try {
      zr.record.role = corpus::parse_role(f[3]);
    } catch (const ConfigError& e) {
      throw ParseError(lineno, e.what());
    }
    zr.record.raw_score = parse_field<int>(f[4], lineno);
    zr.record.batch_seconds = parse_field<double>(f[5], lineno);
    zr.z = parse_field<double>(f[6], lineno);
    out.push_back(std::move(zr));
  }
  return out;
}

json to_json(const importance::FitResult& fit) {
  return {{"weights", fit.weights},
          {"intercept", fit.intercept},
          {"dropped_columns", fit.dropped_columns},
          {"n_rows", fit.n_rows},
          {"residual_sse", fit.residual_sse}};
}

importance::FitResult fit_from_json(const json& j) {
  importance::FitResult fit;
  fit.weights = j.at("weights").get<std::map<std::string, double>>();
  fit.intercept = j.at("intercept").get<double>();
  fit.dropped_columns = j.at("dropped_columns").get<std::vector<std::string>>();
  fit.n_rows = j.at("n_rows").get<std::size_t>();
  fit.residual_sse = j.at("residual_sse").get<double>();
  return fit;
}

json to_json(const typology::Typology& t) {
  return {{"name", t.name},
          {"categories", t.categories},
          {"mapping", t.mapping},
          {"min_support", t.min_support},
          {"coarsen", t.coarsen}};
}

typology::Typology typology_from_json(const json& j) {
  typology::Typology t;
  t.name = j.at("name").get<std::string>();
  t.categories = j.at("categories").get<std::vector<std::string>>();
  t.mapping = j.at("mapping").get<std::map<std::string, std::string>>();
  t.min_support = j.at("min_support").get<int>();
  t.coarsen = j.at("coarsen").get<bool>();
  return t;
}

json to_json(const importance::RankReport& report) {
  json entries = json::array();
  for (const auto& e : report.entries) {
    entries.push_back({{"category", e.category},
                       {"mean_rank", e.mean_rank},
                       {"rank_std", e.rank_std},
                       {"mean_weight", e.mean_weight},
                       {"weight_std", e.weight_std},
                       {"support", e.support},
                       {"full_fit_weight", e.full_weight},
                       {"dropped_resamples", e.dropped_resamples}});
  }
  return {{"method", importance::kUncertaintyMethod},
          {"rank_orientation", "1 = most bothersome"},
          {"weight_caveat", importance::kWeightCaveat},
          {"b_resamples", report.b_resamples},
          {"failed_resamples", report.failed_resamples},
          {"seed", report.seed},
          {"entries", entries}};
}

std::string rank_report_csv(const importance::RankReport& report) {
  std::ostringstream out;
  out << "category,mean_rank,rank_std,mean_weight,weight_std,support\n";
  for (const auto& e : report.entries) {
    out << csv_escape(e.category) << ',' << format_double(e.mean_rank) << ','
        << format_double(e.rank_std) << ',' << format_double(e.mean_weight) << ','
        << format_double(e.weight_std) << ',' << e.support << '\n';
  }
  return out.str();
}

std::string token_weights_jsonl(const importance::TokenWeightExport& weights) {
  std::string out;
  for (const auto& s : weights.sentences) {
    json line = {{"sentence_id", s.sentence_id}, {"weights", s.weights}};
    out += line.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace bother::io
