#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace wikityper {

enum class TaskKind { kIc, kNli, kNer };

std::string_view to_string(TaskKind task);
// "ic", "nli" or "ner"; throws ValidationError otherwise.
TaskKind parse_task(std::string_view name);

struct IcRecord {
  std::string text;
  std::string intent_label;
  bool operator==(const IcRecord&) const = default;
};

struct NliRecord {
  std::string premise;
  std::string hypothesis;
  std::string label;  // entailment | contradiction | neutral
  bool operator==(const NliRecord&) const = default;
};

struct NerRecord {
  std::vector<std::string> tokens;
  std::vector<std::string> labels;
  bool operator==(const NerRecord&) const = default;
};

using DatasetRecord = std::variant<IcRecord, NliRecord, NerRecord>;

TaskKind task_of(const DatasetRecord& record);

// "O", "B-X" or "I-X" with a non-empty type X.
bool is_bio_tag(std::string_view tag);
// Every tag well formed and no I-X after O, after B-Y/I-Y with Y != X, or at
// the start.
bool is_valid_bio(const std::vector<std::string>& tags);
// Token/label count match plus is_valid_bio. Empty string when valid.
std::string ner_violation(const NerRecord& record);

bool is_nli_label(std::string_view label);

// JSONL for ic/nli, CoNLL `token<TAB>tag` with blank-line separators for ner.
// Readers throw ValidationError naming the line. A CoNLL line without a tag
// column yields a record whose token and label counts differ, so it can be
// rejected downstream instead of aborting the whole file.
std::vector<DatasetRecord> read_dataset(std::istream& in, TaskKind task);
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path, TaskKind task);
void write_dataset(const std::vector<DatasetRecord>& records, std::ostream& out);
void save_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace wikityper
