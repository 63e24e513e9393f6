#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bother/corpus.hpp"
#include "bother/csv.hpp"
#include "bother/importance.hpp"
#include "bother/qc.hpp"
#include "bother/typology.hpp"

namespace bother::io {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Round-trippable shortest decimal form.
std::string format_double(double v);

json to_json(const corpus::Batch& batch);
json to_json(const corpus::BatchSet& set);

json to_json(const qc::Profiles& profiles);
json to_json(const qc::QcSummary& summary);

// Surviving records with their z scores:
// annotator_id,batch_id,sentence_id,role,raw_score,batch_seconds,z
void write_zscored_csv(std::ostream& out, const std::vector<qc::ZScoredRecord>& records);
std::vector<qc::ZScoredRecord> read_zscored_csv(std::istream& in);

void write_annotations_csv(std::ostream& out,
                           const std::vector<qc::AnnotationRecord>& records);

json to_json(const importance::FitResult& fit);
importance::FitResult fit_from_json(const json& j);

json to_json(const typology::Typology& typology);
typology::Typology typology_from_json(const json& j);

json to_json(const importance::RankReport& report);
std::string rank_report_csv(const importance::RankReport& report);

std::string token_weights_jsonl(const importance::TokenWeightExport& weights);

}  // namespace bother::io
