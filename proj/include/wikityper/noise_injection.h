#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "wikityper/dataset.h"
#include "wikityper/keyboard_noise.h"
#include "wikityper/rng.h"
#include "wikityper/textcore.h"
#include "wikityper/typo_mining.h"

namespace wikityper {

enum class NoiseMode { kDictionary, kKeyboard };
enum class MisspellingChoice { kFrequency, kUniform };

std::string_view to_string(NoiseMode mode);
NoiseMode parse_noise_mode(std::string_view name);

struct NoiseConfig {
  double ratio_r = 0.2;
  int max_words_m = 4;
  NoiseMode mode = NoiseMode::kDictionary;
  std::uint64_t seed = 0;
  Language language = Language::kEn;
  MisspellingChoice choice = MisspellingChoice::kFrequency;
  // Dictionary noise on NER data; keyboard mode is required otherwise.
  bool allow_ner_dictionary = false;

  void validate() const;
};

// floor(x + 0.5) with a small tolerance so products such as 0.3 * 5 land on
// the half they denote.
std::int64_t round_half_up(double x);

// min(m, round_half_up(r * n), n)
std::size_t select_replacement_count(std::size_t n_tokens, const NoiseConfig& cfg);

struct SentenceNoise {
  std::vector<std::string> tokens;
  std::vector<std::size_t> replaced_positions;  // ascending
};

// Dictionary lookup: exact match on the correct word, else the lowercased
// token when the original is lowercase-with-capital-initial or all caps; the
// original casing is re-applied to the misspelling. Candidates whose recased
// form is not at distance 1 from the token are dropped.
SentenceNoise inject_sentence(const std::vector<std::string>& tokens, const TypoDictionary& dict,
                              const NoiseConfig& cfg, Rng& rng);

// Eligible: letters only, length >= 2, at least one character on the layout.
SentenceNoise inject_sentence_keyboard(const std::vector<std::string>& tokens,
                                       const KeyboardLayout& layout, const NoiseConfig& cfg,
                                       Rng& rng);

struct RejectedRecord {
  std::size_t index = 0;
  std::string reason;
  bool operator==(const RejectedRecord&) const = default;
};

struct InjectionReport {
  std::int64_t records_processed = 0;
  std::int64_t tokens_total = 0;
  std::int64_t replacements_made = 0;
  double noise_ratio = 0.0;
  // replacements in a record -> number of records
  std::map<std::int64_t, std::int64_t> per_record_replacements;
  std::vector<RejectedRecord> rejected;

  void merge(const InjectionReport& other);
  void finalize();  // recomputes noise_ratio
};

std::string report_to_json(const InjectionReport& report);
InjectionReport parse_report_json(std::string_view text);

struct NoiseSource {
  const TypoDictionary* dictionary = nullptr;
  const KeyboardLayout* layout = nullptr;
};

struct InjectionResult {
  std::vector<DatasetRecord> records;  // input order, rejected records omitted
  InjectionReport report;
};

// Record i draws from Rng(derive_seed(cfg.seed, i)); output does not depend on
// the worker count. NER records with misaligned or invalid labels are dropped
// and listed in report.rejected.
InjectionResult inject_dataset(const std::vector<DatasetRecord>& records, const NoiseConfig& cfg,
                               const NoiseSource& source, int workers = 1);

}  // namespace wikityper
