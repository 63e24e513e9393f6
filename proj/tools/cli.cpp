#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bother/corpus.hpp"
#include "bother/error.hpp"
#include "bother/importance.hpp"
#include "bother/io.hpp"
#include "bother/qc.hpp"
#include "bother/random.hpp"
#include "bother/report.hpp"
#include "bother/simulator.hpp"
#include "bother/typology.hpp"

namespace bother::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised for conditions that map directly onto an exit code.
struct Exit {
  int code;
  std::string message;
};

struct RunConfig {
  std::string corpus;
  std::string annotations;
  std::string typology = "identity";
  std::string out;
  std::string fit;
  qc::QcConfig qc;
  int min_support = 100;
  std::size_t b = 1000;
  std::uint64_t seed = 0;
  double w_max = 2.0;
  std::string space_mode = "conventional";
  bool per_sentence_mean = false;
  bool strict = false;
  unsigned threads = 0;

  int min_words = 7;
  bool write_batches = false;
  int n_batches = 0;
  int pool_size = 400;

  simulator::SimConfig sim;
  std::vector<double> mix = {1.0, 0.0, 0.0, 0.0};
};

fs::path out_dir(const RunConfig& cfg) {
  std::string dir = cfg.out;
  if (dir.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    dir = env && *env ? env : "bother_out";
  }
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw Exit{kInputError, std::string("missing --") + what};
  if (!fs::is_regular_file(path)) {
    throw Exit{kInputError, std::string(what) + " file not found: " + path};
  }
}

corpus::Corpus load_corpus(const RunConfig& cfg) {
  require_file(cfg.corpus, "corpus");
  std::ifstream in(cfg.corpus);
  return corpus::parse_m2(in, corpus::parse_space_mode(cfg.space_mode));
}

void write(const fs::path& path, std::string_view content) {
  io::write_file_atomic(path, content);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// --- prepare ---------------------------------------------------------------

int cmd_prepare(const RunConfig& cfg, std::ostream& out) {
  const auto parsed = load_corpus(cfg);
  const fs::path dir = out_dir(cfg);
  corpus::FilterRuleSet rules;
  rules.min_words = cfg.min_words;
  const auto filtered = corpus::filter_sentences(parsed, rules);
  const auto split = corpus::split_by_errors(filtered.kept);

  std::ostringstream kept;
  kept << "sentence_id,n_tokens,n_edits,text\n";
  for (const auto& s : filtered.kept) {
    kept << s.id << ',' << s.tokens.size() << ',' << s.edits.size() << ','
         << io::csv_escape(s.display_text) << '\n';
  }
  write(dir / "kept.csv", kept.str());

  std::ostringstream rejected;
  rejected << "sentence_id,reason\n";
  std::map<std::string, std::size_t> by_reason;
  for (const auto& r : filtered.rejected) {
    rejected << r.sentence_id << ',' << io::csv_escape(r.reason) << '\n';
    ++by_reason[r.reason];
  }
  write(dir / "rejected.csv", rejected.str());

  json summary = {{"n_input", parsed.size()},
                  {"n_kept", filtered.kept.size()},
                  {"n_rejected", filtered.rejected.size()},
                  {"n_clean", split.clean.size()},
                  {"n_errorful", split.errorful.size()},
                  {"rejections_by_reason", by_reason},
                  {"space_mode", corpus::to_string(corpus::parse_space_mode(cfg.space_mode))}};

  if (cfg.write_batches) {
    corpus::BatchPlan plan;
    plan.seed = derive_seed(cfg.seed, "batching");
    plan.n_batches = cfg.n_batches;
    plan.repeat_pool_size = cfg.pool_size;
    const auto set = corpus::compose_batches(split.errorful, split.clean, plan);
    const fs::path bdir = dir / "batches";
    fs::create_directories(bdir);
    for (const auto& b : set.batches) {
      std::ostringstream name;
      name << "batch_" << std::setw(5) << std::setfill('0') << b.batch_id << ".json";
      write(bdir / name.str(), dump(io::to_json(b)));
    }
    write(dir / "repeat_pool.json",
          dump({{"repeat_pool", set.repeat_pool}, {"pool_overlap", set.pool_overlap}}));
    summary["n_batches"] = set.batches.size();
    summary["pool_overlap"] = set.pool_overlap;
  }
  write(dir / "prepare_summary.json", dump(summary));

  out << "sentences: " << parsed.size() << "\n"
      << "kept: " << filtered.kept.size() << " (clean " << split.clean.size()
      << ", errorful " << split.errorful.size() << ")\n"
      << "rejected: " << filtered.rejected.size() << "\n";
  for (const auto& [reason, n] : by_reason) out << "  " << reason << ": " << n << "\n";
  if (summary.contains("n_batches")) {
    out << "batches: " << summary["n_batches"].get<std::size_t>() << " (pool overlap "
        << summary["pool_overlap"].get<int>() << ")\n";
  }
  return kOk;
}

// --- qc --------------------------------------------------------------------

qc::QcResult run_quality_control(const RunConfig& cfg, const fs::path& dir,
                                 std::ostream& out) {
  require_file(cfg.annotations, "annotations");
  std::ifstream in(cfg.annotations);
  auto ingested = qc::ingest_annotations(in, cfg.strict);
  if (!ingested.errors.empty()) {
    std::ostringstream errs;
    errs << "line,message\n";
    for (const auto& e : ingested.errors) errs << e.line << ',' << io::csv_escape(e.message) << '\n';
    write(dir / "ingest_errors.csv", errs.str());
    out << "skipped rows: " << ingested.errors.size() << " (see ingest_errors.csv)\n";
  }
  if (ingested.records.empty()) throw Exit{kEmptyData, "no annotation records"};
  return qc::run_qc(ingested.records, cfg.qc);
}

int cmd_qc(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir = out_dir(cfg);
  const auto result = run_quality_control(cfg, dir, out);
  write(dir / "profiles.json", dump(io::to_json(result.profiles)));
  write(dir / "qc_summary.json", dump(io::to_json(result.summary)));
  std::ostringstream surviving;
  io::write_zscored_csv(surviving, result.surviving);
  write(dir / "surviving.csv", surviving.str());

  const auto& s = result.summary;
  out << "annotators: " << s.n_annotators << ", kept " << s.n_kept << "\n";
  for (const auto& st : s.stages) {
    out << "  removed at " << qc::to_string(st.stage) << ": " << st.removed << " ("
        << fixed(100.0 * st.fraction, 1) << "%)\n";
  }
  out << "removed total: " << fixed(100.0 * s.removed_fraction, 1) << "%\n"
      << "records kept: " << s.n_records_kept << " of " << s.n_records_in << "\n";
  return kOk;
}

// --- fit -------------------------------------------------------------------

typology::Typology resolve_typology(const RunConfig& cfg, const corpus::Corpus& c) {
  typology::Typology t;
  if (cfg.typology == "identity") {
    t = typology::identity_typology(c, "identity");
  } else if (cfg.typology == "errant-coarse") {
    t = typology::coarse_errant_typology(c);
  } else {
    require_file(cfg.typology, "typology");
    std::ifstream in(cfg.typology);
    t = typology::load_typology(in, fs::path(cfg.typology).stem().string());
  }
  t.min_support = cfg.min_support;
  return typology::apply_min_support(t, typology::category_counts(c, t));
}

std::vector<qc::ZScoredRecord> load_scored(const RunConfig& cfg, const fs::path& dir,
                                           std::ostream& out) {
  require_file(cfg.annotations, "annotations");
  std::string header;
  {
    std::ifstream in(cfg.annotations);
    std::getline(in, header);
  }
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header.ends_with(",z")) {
    std::ifstream in(cfg.annotations);
    return io::read_zscored_csv(in);
  }
  return run_quality_control(cfg, dir, out).surviving;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
  if (cfg.b < 2) throw Exit{kInputError, "--b must be >= 2"};
  const auto c = load_corpus(cfg);
  const fs::path dir = out_dir(cfg);
  const auto scored = load_scored(cfg, dir, out);
  if (scored.empty()) throw Exit{kEmptyData, "no surviving annotations to fit"};

  const auto typ = resolve_typology(cfg, c);
  const auto features = typology::featurize(c, typ);
  const auto design = importance::build_design(scored, features, typ,
                                               {.per_sentence_mean = cfg.per_sentence_mean});
  const auto fit = importance::fit_ols(design);
  const auto ranks = importance::rank_types(fit);
  const auto report = importance::bootstrap_importance(
      design, cfg.b, derive_seed(cfg.seed, "bootstrap"), cfg.threads);

  json fit_json = io::to_json(fit);
  fit_json["ranks"] = ranks.ranks;
  fit_json["rank_tie"] = ranks.tie;
  fit_json["typology"] = io::to_json(typ);
  fit_json["target"] = cfg.per_sentence_mean ? "per-sentence mean z" : "per-annotation z";
  write(dir / "fit.json", dump(fit_json));

  std::ostringstream fcsv;
  typology::write_feature_csv(fcsv, features, design.column_labels);
  write(dir / "features.csv", fcsv.str());
  write(dir / "ranks.csv", io::rank_report_csv(report));
  write(dir / "ranks.json", dump(io::to_json(report)));
  write(dir / "ranks.svg",
        report::rank_chart_svg(report, "Importance ranks (" + typ.name + "), std error bars"));
  write(dir / "weights.svg",
        report::weight_chart_svg(report, "Importance weights (" + typ.name + "), std error bars"));

  out << "rows: " << design.rows << ", categories: " << design.column_labels.size() << "\n";
  if (!fit.dropped_columns.empty()) {
    out << "dropped (collinear):";
    for (const auto& d : fit.dropped_columns) out << ' ' << d;
    out << "\n";
  }
  out << "uncertainty: " << importance::kUncertaintyMethod << ", b=" << report.b_resamples
      << "\n"
      << report::rank_table(report) << importance::kWeightCaveat << "\n";
  return kOk;
}

// --- simulate --------------------------------------------------------------

int cmd_simulate(RunConfig cfg, std::ostream& out) {
  if (cfg.mix.size() != 4) {
    throw Exit{kInputError, "--mix needs four fractions: honest,speeder,constant,anti"};
  }
  auto& sim = cfg.sim;
  sim.annotator_mix = {cfg.mix[0], cfg.mix[1], cfg.mix[2], cfg.mix[3]};
  sim.seed = derive_seed(cfg.seed, "simulation");
  sim.plan.repeat_pool_size = cfg.pool_size;
  sim.validate();

  const auto generated = simulator::generate_corpus(sim);
  const auto annotations =
      simulator::generate_annotations(generated.corpus, generated.truth, sim);
  const fs::path dir = out_dir(cfg);

  write(dir / "corpus.m2", corpus::to_m2_string(generated.corpus));
  std::ostringstream acsv;
  io::write_annotations_csv(acsv, annotations.records);
  write(dir / "annotations.csv", acsv.str());
  std::ostringstream fcsv;
  typology::write_feature_csv(fcsv, generated.features, generated.truth.categories);
  write(dir / "features.csv", fcsv.str());

  std::map<std::string, std::string> kinds;
  for (const auto& [id, k] : annotations.kinds) kinds[id] = std::string(simulator::to_string(k));
  json truth = {{"categories", generated.truth.categories},
                {"true_weights", generated.truth.weights},
                {"true_intercept", generated.truth.intercept},
                {"noise_sd", sim.noise_sd},
                {"annotator_mix",
                 {{"honest", sim.annotator_mix.honest},
                  {"speeder", sim.annotator_mix.speeder},
                  {"constant", sim.annotator_mix.constant},
                  {"anti", sim.annotator_mix.anti}}},
                {"annotator_kinds", kinds},
                {"saturation_fraction", annotations.saturation_fraction},
                {"n_sentences", generated.corpus.size()},
                {"n_annotations", annotations.records.size()}};
  write(dir / "ground_truth.json", dump(truth));

  out << "sentences: " << generated.corpus.size() << "\n"
      << "annotations: " << annotations.records.size() << "\n"
      << "annotators: " << annotations.kinds.size() << "\n"
      << "saturated scores: " << fixed(100.0 * annotations.saturation_fraction, 2) << "%\n";
  return kOk;
}

// --- export-weights --------------------------------------------------------

int cmd_export_weights(const RunConfig& cfg, std::ostream& out) {
  if (!(cfg.w_max > 1.0)) throw Exit{kInputError, "--w-max must be > 1"};
  const fs::path dir = out_dir(cfg);
  const fs::path fit_path = cfg.fit.empty() ? dir / "fit.json" : fs::path(cfg.fit);
  if (!fs::is_regular_file(fit_path)) {
    throw Exit{kNumericalFailure, "fit result not found: " + fit_path.string()};
  }
  const auto c = load_corpus(cfg);
  const json fit_json = json::parse(io::read_file(fit_path));
  const auto fit = io::fit_from_json(fit_json);
  const auto typ = io::typology_from_json(fit_json.at("typology"));
  const auto weights = importance::export_token_weights(c, fit, typ, cfg.w_max);
  write(dir / "token_weights.jsonl", io::token_weights_jsonl(weights));

  const double denom = weights.n_tokens ? static_cast<double>(weights.n_tokens) : 1.0;
  out << "tokens: " << weights.n_tokens << "\n"
      << "edit-covered tokens: " << weights.n_covered << " ("
      << fixed(100.0 * static_cast<double>(weights.n_covered) / denom, 2) << "%)\n"
      << "tokens weighted above 1: " << weights.n_weighted << " ("
      << fixed(100.0 * static_cast<double>(weights.n_weighted) / denom, 2) << "%)\n";
  return kOk;
}

// --- wiring ----------------------------------------------------------------

void add_out(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--out", cfg.out, std::string("Output directory (default $") + kOutDirEnv +
                                        " or ./bother_out)");
}

void add_seed(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--seed", cfg.seed, "Run seed; every random stream derives from it");
}

void add_space_mode(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--space-mode", cfg.space_mode, "conventional | verbatim_paper")
      ->check(CLI::IsMember({"conventional", "verbatim_paper"}));
}

void add_qc(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--min-seconds", cfg.qc.min_batch_seconds,
                  "Minimum working seconds per 100-sentence batch");
  sub->add_option("--alpha", cfg.qc.alpha, "t-test significance level");
  sub->add_option("--corr-threshold", cfg.qc.corr_threshold,
                  "Remove annotators whose repeat correlation is below this");
  sub->add_option("--min-responses", cfg.qc.min_responses_per_repeat,
                  "Responses a repeat sentence needs to enter the correlation");
  sub->add_option("--min-pairs", cfg.qc.min_corr_pairs,
                  "Repeat pairs an annotator needs for the correlation filter");
  sub->add_flag("--flip-scores", cfg.qc.flip_scores,
                "Treat high raw scores as less bothersome");
  sub->add_flag("--strict", cfg.strict, "Abort on the first malformed annotation row");
}

// Appends config-file values for options not given on the command line.
std::vector<std::string> merge_config(const CLI::App& app, std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
    } else if (args[i].starts_with("--config=")) {
      config_path = args[i].substr(9);
    }
  }
  if (config_path.empty()) return args;
  if (!fs::is_regular_file(config_path)) {
    throw Exit{kInputError, "config file not found: " + config_path};
  }
  json cfg;
  try {
    cfg = json::parse(io::read_file(config_path));
  } catch (const json::exception& e) {
    throw Exit{kInputError, std::string("bad config file: ") + e.what()};
  }
  if (!cfg.is_object()) throw Exit{kInputError, "config file must hold a JSON object"};

  const CLI::App* sub = nullptr;
  for (const auto& a : args) {
    for (const auto* s : app.get_subcommands({})) {
      if (s->get_name() == a) sub = s;
    }
    if (sub) break;
  }
  if (!sub) return args;

  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    if (key == "config" || !sub->get_option_no_throw(flag)) continue;
    bool given = false;
    for (const auto& a : args) {
      if (a == flag || a.starts_with(flag + "=")) given = true;
    }
    if (given) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      args.push_back(flag);
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty()) joined += ",";
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      args.push_back(joined);
    } else {
      args.push_back(flag);
      args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
  }
  return args;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Estimate how much each grammatical error type bothers readers"};
  app.require_subcommand(1);
  std::string config_path;

  auto* prepare = app.add_subcommand("prepare", "Filter an M2 corpus and compose batches");
  prepare->add_option("--corpus", cfg.corpus, "M2 corpus")->required();
  prepare->add_option("--min-words", cfg.min_words, "Minimum tokens per sentence");
  prepare->add_flag("--batches", cfg.write_batches, "Write annotation batch files");
  prepare->add_option("--n-batches", cfg.n_batches, "Batches to compose (0 = maximum)");
  prepare->add_option("--pool-size", cfg.pool_size, "Repeat pool size");
  add_space_mode(prepare, cfg);
  add_seed(prepare, cfg);
  add_out(prepare, cfg);

  auto* qc_cmd = app.add_subcommand("qc", "Normalize and filter annotators");
  qc_cmd->add_option("--annotations", cfg.annotations, "Annotation CSV")->required();
  add_qc(qc_cmd, cfg);
  add_out(qc_cmd, cfg);

  auto* fit_cmd = app.add_subcommand("fit", "Fit error-type importance with bootstrap ranks");
  fit_cmd->add_option("--corpus", cfg.corpus, "M2 corpus")->required();
  fit_cmd->add_option("--annotations", cfg.annotations,
                      "Raw annotation CSV, or surviving.csv from qc")
      ->required();
  fit_cmd->add_option("--typology", cfg.typology,
                      "identity | errant-coarse | mapping CSV (raw_label,category)");
  fit_cmd->add_option("--min-support", cfg.min_support,
                      "Categories with fewer corpus edits merge into OTHER");
  fit_cmd->add_option("--b", cfg.b, "Bootstrap resamples (>= 2)");
  fit_cmd->add_option("--threads", cfg.threads, "Bootstrap worker threads (0 = all cores)");
  fit_cmd->add_flag("--per-sentence-mean", cfg.per_sentence_mean,
                    "Regress per-sentence mean z instead of per-annotation z");
  add_qc(fit_cmd, cfg);
  add_space_mode(fit_cmd, cfg);
  add_seed(fit_cmd, cfg);
  add_out(fit_cmd, cfg);

  auto* sim_cmd = app.add_subcommand("simulate", "Write a synthetic dataset with known truth");
  sim_cmd->add_option("--n-types", cfg.sim.n_types, "Error types");
  sim_cmd->add_option("--n-sentences", cfg.sim.n_sentences, "Sentences");
  sim_cmd->add_option("--max-edits", cfg.sim.max_edits_per_sentence,
                      "Maximum edits per type per sentence");
  sim_cmd->add_option("--clean-fraction", cfg.sim.clean_fraction, "Fraction of clean sentences");
  sim_cmd->add_option("--noise-sd", cfg.sim.noise_sd, "Annotator noise sd (latent units)");
  sim_cmd->add_option("--scores-per-sentence", cfg.sim.scores_per_sentence,
                      "Annotation passes over the corpus");
  sim_cmd->add_option("--intercept", cfg.sim.true_intercept, "True intercept");
  sim_cmd->add_option("--weights", cfg.sim.true_weights, "True weights, one per type")
      ->delimiter(',');
  sim_cmd->add_option("--mix", cfg.mix, "honest,speeder,constant,anti fractions")
      ->delimiter(',');
  sim_cmd->add_option("--pool-size", cfg.pool_size, "Repeat pool size");
  add_seed(sim_cmd, cfg);
  add_out(sim_cmd, cfg);

  auto* export_cmd = app.add_subcommand("export-weights", "Write per-token loss weights");
  export_cmd->add_option("--corpus", cfg.corpus, "M2 corpus")->required();
  export_cmd->add_option("--fit", cfg.fit, "fit.json from the fit command (default <out>/fit.json)");
  export_cmd->add_option("--w-max", cfg.w_max, "Weight of the most bothersome error type");
  add_space_mode(export_cmd, cfg);
  add_out(export_cmd, cfg);

  for (auto* sub : {prepare, qc_cmd, fit_cmd, sim_cmd, export_cmd}) {
    sub->add_option("--config", config_path, "JSON file mirroring the flags");
  }

  try {
    auto merged = merge_config(app, args);
    std::vector<std::string> reversed(merged.rbegin(), merged.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kOk;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n";
      return kInputError;
    }

    if (*prepare) return cmd_prepare(cfg, out);
    if (*qc_cmd) return cmd_qc(cfg, out);
    if (*fit_cmd) return cmd_fit(cfg, out);
    if (*sim_cmd) return cmd_simulate(cfg, out);
    if (*export_cmd) return cmd_export_weights(cfg, out);
  } catch (const Exit& e) {
    err << "error: " << e.message << "\n";
    return e.code;
  } catch (const EmptyDataError& e) {
    err << "error: " << e.what() << "\n";
    return kEmptyData;
  } catch (const FitError& e) {
    err << "fit failed: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const CapacityError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}

}  // namespace bother::cli
