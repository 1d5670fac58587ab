#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "wikityper/dataset.h"
#include "wikityper/noise_injection.h"
#include "wikityper/textcore.h"

namespace wikityper {

struct CorpusStats {
  std::string dataset;
  Language language = Language::kEn;
  std::int64_t n_records = 0;
  std::int64_t n_tokens = 0;
  std::int64_t avg_tokens_per_record = 0;  // half-up
  std::int64_t n_noise = 0;
  std::int64_t noise_ratio_cents = 0;      // noise ratio x 100, half-up
  double noise_ratio_raw = 0.0;

  double noise_ratio() const { return static_cast<double>(noise_ratio_cents) / 100.0; }
};

// round_half_up(100 * numerator / denominator) in integer arithmetic; 0 when
// the denominator is 0.
std::int64_t ratio_cents(std::int64_t numerator, std::int64_t denominator);
// "0.14" style rendering of a value given in hundredths.
std::string format_cents(std::int64_t cents);

// Whitespace tokens of the text fields (premise + hypothesis for NLI), or the
// token column for NER.
std::int64_t count_tokens(const DatasetRecord& record);

CorpusStats stats_from_counts(std::string dataset, Language language, std::int64_t n_records,
                              std::int64_t n_tokens, std::int64_t n_noise);
CorpusStats compute_stats(const std::vector<DatasetRecord>& clean, const InjectionReport& report,
                          std::string dataset, Language language);

// Columns: dataset,language,tokens,avg_tokens,noise,noise_ratio,noise_ratio_raw
void write_stats_csv(const std::vector<CorpusStats>& rows, std::ostream& out);
std::string stats_to_json(const std::vector<CorpusStats>& rows);

// Tags used in the PoS breakdown; anything else is counted under "Other".
const std::vector<std::string>& universal_pos_tags();

struct PosHistogram {
  std::map<std::string, std::int64_t> counts;
  std::int64_t malformed_lines = 0;
};

// Two-column TSV `token<TAB>tag`. Blank lines are ignored; lines without
// exactly two non-empty fields are skipped and counted as malformed.
PosHistogram pos_histogram(std::istream& in);
// Rows in universal tag order, then Other; only tags that occurred.
void write_pos_csv(const PosHistogram& histogram, std::ostream& out);

}  // namespace wikityper
