#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wikityper/dataset.h"
#include "wikityper/textcore.h"

namespace wikityper {

enum class Variant { kClean, kNoisy };
std::string_view to_string(Variant variant);

// Percent of positions where pred equals gold. Throws AlignmentError at the
// first index present in only one sequence, ValidationError on empty gold.
double accuracy(const std::vector<std::string>& gold, const std::vector<std::string>& pred);

struct Chunk {
  std::size_t sentence = 0;
  std::string type;
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  auto operator<=>(const Chunk&) const = default;
};

// Chunks of a valid BIO sequence.
std::vector<Chunk> extract_chunks(const std::vector<std::string>& tags, std::size_t sentence = 0);

struct RepairedTags {
  std::vector<std::string> tags;
  std::size_t repairs = 0;
};
// A dangling I-X (after O, after another type, or sentence-initial) becomes B-X.
// Throws ValidationError on a tag that is not O, B-X or I-X.
RepairedTags repair_bio(const std::vector<std::string>& tags);

struct F1Score {
  double precision = 0.0;  // percent
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t gold_count = 0;
  std::size_t pred_count = 0;
  std::size_t matched = 0;
  std::size_t repairs = 0;
};

// Micro entity-level F1 with exact boundary and type match. Gold must be valid
// BIO; predictions are repaired. Sentence or token count mismatches raise
// AlignmentError (index = sentence).
F1Score entity_f1(const std::vector<std::vector<std::string>>& gold,
                  const std::vector<std::vector<std::string>>& pred);
// Per-token variant: a token matches when both sides carry the same entity type.
F1Score token_f1(const std::vector<std::vector<std::string>>& gold,
                 const std::vector<std::vector<std::string>>& pred);

// JSONL {"id": int, "label": str}. Ids must be exactly 0..n-1 in any order;
// returned in id order.
std::vector<std::string> read_label_predictions(std::istream& in);
std::vector<std::string> load_label_predictions(const std::filesystem::path& path);
// CoNLL `token<TAB>predicted_tag`; one tag sequence per sentence.
std::vector<std::vector<std::string>> load_tag_predictions(const std::filesystem::path& path);

struct ScoreCell {
  std::string model;
  TaskKind task = TaskKind::kIc;
  Language language = Language::kEn;
  Variant variant = Variant::kClean;
  double score = 0.0;  // percent
};

struct GapRow {
  std::string model;
  TaskKind task = TaskKind::kIc;
  Language language = Language::kEn;
  double clean = 0.0;
  double noisy = 0.0;
  double gap = 0.0;
};

struct RowAverage {
  std::string model;
  TaskKind task = TaskKind::kIc;
  double clean = 0.0;
  double noisy = 0.0;
  double gap = 0.0;
  std::size_t languages = 0;
};

struct ModelAggregate {
  std::string model;
  std::map<TaskKind, double> task_gap;  // per-task average gap
  double mean_of_task_averages = 0.0;
  double mean_of_cells = 0.0;           // over every (task, language) gap
  double mean_of_language_means = 0.0;  // per-language mean over tasks, then over languages
};

struct GapReport {
  std::vector<std::string> models;  // first-appearance order
  std::vector<GapRow> rows;
  std::vector<RowAverage> row_averages;
  std::vector<ModelAggregate> aggregates;
  std::vector<std::string> warnings;
};

// Rows are ordered by model (first appearance), task (ic, ner, nli) and
// language. A (model, task, language) with only one variant is skipped with a
// warning; a repeated (model, task, language, variant) throws ValidationError.
GapReport build_gap_report(const std::vector<ScoreCell>& cells);

// Half-up at two decimals, for presentation only.
double round2(double value);
std::string format2(double value);

void write_gap_csv(const GapReport& report, std::ostream& out);
void write_gap_markdown(const GapReport& report, std::ostream& out);
void write_aggregates_csv(const GapReport& report, std::ostream& out);

// One scored (model, task, language) pair as stored in a runs directory.
struct RunResult {
  std::string model;
  TaskKind task = TaskKind::kIc;
  Language language = Language::kEn;
  double clean = 0.0;
  double noisy = 0.0;
  std::size_t records = 0;
  std::size_t repairs_clean = 0;
  std::size_t repairs_noisy = 0;
};

std::string run_result_to_json(const RunResult& run);
RunResult parse_run_result(std::string_view json_text);
std::string run_result_filename(const RunResult& run);
// Every *.run.json file in dir, as score cells, in file name order.
std::vector<ScoreCell> load_run_cells(const std::filesystem::path& dir);

}  // namespace wikityper
