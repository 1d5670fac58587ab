#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "wikityper/textcore.h"
#include "wikityper/wiki_ingest.h"

namespace wikityper {

// token -> multiplicity
using WordMultiset = std::map<std::string, int>;

struct WordDiff {
  WordMultiset removed;
  WordMultiset added;
};

// (page_id, newer_rev_id) of the edit an entry was mined from.
using TypoSource = std::pair<PageId, RevisionId>;

struct TypoEntry {
  std::string misspelled;
  std::string correct;
  Language language = Language::kEn;
  std::int64_t frequency = 1;
  std::set<TypoSource> sources;
};

// Throws ValidationError unless the entry is a distance-1 pair of distinct
// dictionary-eligible words with positive frequency.
void validate_typo_entry(const TypoEntry& entry);

// Multiplicity differences between the token multisets of two texts.
WordDiff diff_words(std::string_view older_text, std::string_view newer_text);
WordDiff diff_words(const RevisionPair& pair);

struct ExtractOptions {
  bool drop_case_only = false;
};

// Pairs each eligible removed word with the lexicographically smallest
// eligible added word at edit distance 1. One entry per distinct removed word;
// the result is sorted by (misspelled, correct).
std::vector<TypoEntry> extract_pairs(const WordMultiset& removed, const WordMultiset& added,
                                     Language language, const ExtractOptions& options = {});

// Diff + extract for one revision pair, with provenance attached.
std::vector<TypoEntry> mine_revision_pair(const RevisionPair& pair,
                                          const ExtractOptions& options = {});

class TypoDictionary {
 public:
  TypoDictionary() = default;
  explicit TypoDictionary(Language language) : language_(language) {}

  std::optional<Language> language() const { return language_; }
  // correct surface -> entries for that correct word, sorted by misspelling.
  const std::map<std::string, std::vector<TypoEntry>>& entries() const { return entries_; }
  std::size_t total_entries() const { return total_entries_; }
  bool empty() const { return total_entries_ == 0; }

  const std::vector<TypoEntry>* find(const std::string& correct) const;
  // All entries, ordered by (correct, misspelled).
  std::vector<TypoEntry> flatten() const;

  // Aggregates duplicates. Throws ValidationError when the entry's language
  // differs from the dictionary's.
  void add(const TypoEntry& entry);
  // Associative and commutative.
  void merge(const TypoDictionary& other);

  TypoDictionary with_min_frequency(std::int64_t min_frequency) const;

 private:
  std::optional<Language> language_;
  std::map<std::string, std::vector<TypoEntry>> entries_;
  std::size_t total_entries_ = 0;
};

TypoDictionary build_dictionary(const std::vector<TypoEntry>& entries,
                                std::optional<Language> language = std::nullopt);

struct MiningOptions {
  ExtractOptions extract;
  int workers = 1;
  std::int64_t min_frequency = 1;
};

// Mines every pair in parallel shards; identical output for any worker count.
TypoDictionary mine_dictionary(const std::vector<RevisionPair>& pairs, Language language,
                               const MiningOptions& options = {});

// TSV: header "language\tmisspelled\tcorrect\tfrequency", LF, no quoting.
void write_tsv(const TypoDictionary& dict, std::ostream& out);
// JSONL: one object per entry with its sources.
void write_jsonl(const TypoDictionary& dict, std::ostream& out);
void save_dictionary(const TypoDictionary& dict, const std::filesystem::path& path);

// Format picked by extension (.jsonl or TSV otherwise). Every entry is
// re-validated; the first violation raises ValidationError with its line.
TypoDictionary read_tsv(std::istream& in);
TypoDictionary read_jsonl(std::istream& in);
TypoDictionary load_dictionary(const std::filesystem::path& path);

}  // namespace wikityper
