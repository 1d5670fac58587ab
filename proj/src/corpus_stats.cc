#include "wikityper/corpus_stats.h"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "wikityper/errors.h"
#include "wikityper/log.h"

namespace wikityper {
namespace {

constexpr std::string_view kOther = "Other";

std::int64_t tokens_in(const std::string& text) {
  return static_cast<std::int64_t>(token_spans(text).size());
}

std::string format_raw(double value) {
  std::ostringstream out;
  out.precision(6);
  out << std::fixed << value;
  return out.str();
}

}  // namespace

std::int64_t ratio_cents(std::int64_t numerator, std::int64_t denominator) {
  if (denominator <= 0) return 0;
  return (200 * numerator + denominator) / (2 * denominator);
}

std::string format_cents(std::int64_t cents) {
  const std::string sign = cents < 0 ? "-" : "";
  const std::int64_t a = cents < 0 ? -cents : cents;
  const std::int64_t frac = a % 100;
  return sign + std::to_string(a / 100) + "." + (frac < 10 ? "0" : "") + std::to_string(frac);
}

std::int64_t count_tokens(const DatasetRecord& record) {
  if (const auto* ic = std::get_if<IcRecord>(&record)) return tokens_in(ic->text);
  if (const auto* nli = std::get_if<NliRecord>(&record)) {
    return tokens_in(nli->premise) + tokens_in(nli->hypothesis);
  }
  return static_cast<std::int64_t>(std::get<NerRecord>(record).tokens.size());
}

CorpusStats stats_from_counts(std::string dataset, Language language, std::int64_t n_records,
                              std::int64_t n_tokens, std::int64_t n_noise) {
  if (n_records < 0 || n_tokens < 0 || n_noise < 0) {
    throw ValidationError("corpus counts must be non-negative");
  }
  CorpusStats s;
  s.dataset = std::move(dataset);
  s.language = language;
  s.n_records = n_records;
  s.n_tokens = n_tokens;
  s.n_noise = n_noise;
  s.avg_tokens_per_record = n_records == 0 ? 0 : (2 * n_tokens + n_records) / (2 * n_records);
  s.noise_ratio_cents = ratio_cents(n_noise, n_tokens);
  s.noise_ratio_raw =
      n_tokens == 0 ? 0.0 : static_cast<double>(n_noise) / static_cast<double>(n_tokens);
  return s;
}

CorpusStats compute_stats(const std::vector<DatasetRecord>& clean, const InjectionReport& report,
                          std::string dataset, Language language) {
  std::int64_t tokens = 0;
  for (const auto& r : clean) tokens += count_tokens(r);
  if (report.tokens_total != tokens) {
    log_warning("report counts " + std::to_string(report.tokens_total) +
                " tokens, clean data has " + std::to_string(tokens));
  }
  return stats_from_counts(std::move(dataset), language, static_cast<std::int64_t>(clean.size()),
                           tokens, report.replacements_made);
}

void write_stats_csv(const std::vector<CorpusStats>& rows, std::ostream& out) {
  out << "dataset,language,tokens,avg_tokens,noise,noise_ratio,noise_ratio_raw\n";
  for (const auto& s : rows) {
    out << s.dataset << ',' << to_string(s.language) << ',' << s.n_tokens << ','
        << s.avg_tokens_per_record << ',' << s.n_noise << ',' << format_cents(s.noise_ratio_cents)
        << ',' << format_raw(s.noise_ratio_raw) << '\n';
  }
}

std::string stats_to_json(const std::vector<CorpusStats>& rows) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& s : rows) {
    nlohmann::ordered_json row;
    row["dataset"] = s.dataset;
    row["language"] = to_string(s.language);
    row["records"] = s.n_records;
    row["tokens"] = s.n_tokens;
    row["avg_tokens"] = s.avg_tokens_per_record;
    row["noise"] = s.n_noise;
    row["noise_ratio"] = format_cents(s.noise_ratio_cents);
    row["noise_ratio_raw"] = s.noise_ratio_raw;
    doc.push_back(row);
  }
  return doc.dump(2) + "\n";
}

const std::vector<std::string>& universal_pos_tags() {
  static const std::vector<std::string> tags = {"ADJ",   "ADP",  "ADV",  "AUX",   "CCONJ", "DET",
                                                "INTJ",  "NOUN", "NUM",  "PART",  "PRON",  "PROPN",
                                                "PUNCT", "SCONJ", "SYM", "VERB"};
  return tags;
}

PosHistogram pos_histogram(std::istream& in) {
  const auto& tags = universal_pos_tags();
  PosHistogram h;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == 0 || tab == std::string::npos || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string::npos) {
      ++h.malformed_lines;
      continue;
    }
    const std::string tag = line.substr(tab + 1);
    const bool known = std::find(tags.begin(), tags.end(), tag) != tags.end();
    ++h.counts[known ? tag : std::string(kOther)];
  }
  return h;
}

void write_pos_csv(const PosHistogram& histogram, std::ostream& out) {
  out << "pos,count\n";
  auto emit = [&](const std::string& tag) {
    auto it = histogram.counts.find(tag);
    if (it != histogram.counts.end()) out << tag << ',' << it->second << '\n';
  };
  for (const auto& tag : universal_pos_tags()) emit(tag);
  emit(std::string(kOther));
}

}  // namespace wikityper
