#include "wikityper/typo_mining.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "wikityper/errors.h"

namespace wikityper {
namespace {

using json = nlohmann::json;

constexpr std::string_view kTsvHeader = "language\tmisspelled\tcorrect\tfrequency";

WordMultiset count_tokens(std::string_view text) {
  WordMultiset counts;
  for (auto& token : tokenize(text).tokens) ++counts[std::move(token)];
  return counts;
}

struct Candidate {
  const std::string* surface;
  std::u32string code_points;
};

std::vector<Candidate> eligible_candidates(const WordMultiset& words) {
  std::vector<Candidate> out;
  for (const auto& [word, count] : words) {
    if (count > 0 && is_dictionary_eligible(word)) out.push_back({&word, nfc_code_points(word)});
  }
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

void validate_typo_entry(const TypoEntry& e) {
  if (!is_dictionary_eligible(e.misspelled)) {
    throw ValidationError("misspelling '" + e.misspelled + "' is not dictionary-eligible");
  }
  if (!is_dictionary_eligible(e.correct)) {
    throw ValidationError("correction '" + e.correct + "' is not dictionary-eligible");
  }
  if (levenshtein(e.misspelled, e.correct) != 1) {
    throw ValidationError("pair '" + e.misspelled + "' -> '" + e.correct +
                          "' is not at edit distance 1");
  }
  if (e.frequency < 1) throw ValidationError("frequency must be positive");
}

WordDiff diff_words(std::string_view older_text, std::string_view newer_text) {
  const WordMultiset before = count_tokens(older_text);
  const WordMultiset after = count_tokens(newer_text);
  WordDiff diff;
  for (const auto& [word, n] : before) {
    auto it = after.find(word);
    const int m = it == after.end() ? 0 : it->second;
    if (n > m) diff.removed[word] = n - m;
  }
  for (const auto& [word, m] : after) {
    auto it = before.find(word);
    const int n = it == before.end() ? 0 : it->second;
    if (m > n) diff.added[word] = m - n;
  }
  return diff;
}

WordDiff diff_words(const RevisionPair& pair) {
  return diff_words(pair.older_text, pair.newer_text);
}

std::vector<TypoEntry> extract_pairs(const WordMultiset& removed, const WordMultiset& added,
                                     Language language, const ExtractOptions& options) {
  const auto removed_words = eligible_candidates(removed);
  const auto added_words = eligible_candidates(added);  // already in lexicographic order
  std::vector<TypoEntry> out;
  for (const auto& r : removed_words) {
    for (const auto& a : added_words) {
      const auto len_gap = r.code_points.size() > a.code_points.size()
                               ? r.code_points.size() - a.code_points.size()
                               : a.code_points.size() - r.code_points.size();
      if (len_gap > 1) continue;
      if (levenshtein(r.code_points, a.code_points) != 1) continue;
      if (options.drop_case_only &&
          lower_case(*r.surface, language) == lower_case(*a.surface, language)) {
        continue;
      }
      out.push_back({*r.surface, *a.surface, language, 1, {}});
      break;
    }
  }
  return out;
}

std::vector<TypoEntry> mine_revision_pair(const RevisionPair& pair,
                                          const ExtractOptions& options) {
  const WordDiff diff = diff_words(pair);
  auto entries = extract_pairs(diff.removed, diff.added, pair.language, options);
  for (auto& e : entries) e.sources.insert({pair.page_id, pair.newer_rev_id});
  return entries;
}

const std::vector<TypoEntry>* TypoDictionary::find(const std::string& correct) const {
  auto it = entries_.find(correct);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<TypoEntry> TypoDictionary::flatten() const {
  std::vector<TypoEntry> out;
  out.reserve(total_entries_);
  for (const auto& [correct, list] : entries_) out.insert(out.end(), list.begin(), list.end());
  return out;
}

void TypoDictionary::add(const TypoEntry& entry) {
  if (language_ && *language_ != entry.language) {
    throw ValidationError("cannot mix languages in one dictionary: " +
                          std::string(to_string(*language_)) + " vs " +
                          std::string(to_string(entry.language)));
  }
  language_ = entry.language;
  auto& list = entries_[entry.correct];
  auto it = std::lower_bound(list.begin(), list.end(), entry.misspelled,
                             [](const TypoEntry& e, const std::string& m) {
                               return e.misspelled < m;
                             });
  if (it != list.end() && it->misspelled == entry.misspelled) {
    it->frequency += entry.frequency;
    it->sources.insert(entry.sources.begin(), entry.sources.end());
    return;
  }
  list.insert(it, entry);
  ++total_entries_;
}

void TypoDictionary::merge(const TypoDictionary& other) {
  if (language_ && other.language_ && *language_ != *other.language_) {
    throw ValidationError("cannot merge dictionaries of different languages");
  }
  if (!language_) language_ = other.language_;
  for (const auto& [correct, list] : other.entries_) {
    for (const auto& entry : list) add(entry);
  }
}

TypoDictionary TypoDictionary::with_min_frequency(std::int64_t min_frequency) const {
  TypoDictionary out;
  out.language_ = language_;
  for (const auto& [correct, list] : entries_) {
    for (const auto& entry : list) {
      if (entry.frequency >= min_frequency) out.add(entry);
    }
  }
  return out;
}

TypoDictionary build_dictionary(const std::vector<TypoEntry>& entries,
                                std::optional<Language> language) {
  TypoDictionary dict = language ? TypoDictionary(*language) : TypoDictionary();
  for (const auto& e : entries) dict.add(e);
  return dict;
}

TypoDictionary mine_dictionary(const std::vector<RevisionPair>& pairs, Language language,
                               const MiningOptions& options) {
  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.workers, 1)), 1,
                              std::max<std::size_t>(pairs.size(), 1));
  std::vector<TypoDictionary> shards(workers, TypoDictionary(language));
  std::vector<std::exception_ptr> errors(workers);
  auto run_shard = [&](std::size_t w) {
    try {
      for (std::size_t i = w; i < pairs.size(); i += workers) {
        if (pairs[i].language != language) {
          throw ValidationError("revision pair for page " + std::to_string(pairs[i].page_id) +
                                " is not in language " + std::string(to_string(language)));
        }
        for (const auto& entry : mine_revision_pair(pairs[i], options.extract)) {
          shards[w].add(entry);
        }
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(run_shard, w);
  run_shard(0);
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  TypoDictionary merged(language);
  for (const auto& shard : shards) merged.merge(shard);
  return options.min_frequency > 1 ? merged.with_min_frequency(options.min_frequency) : merged;
}

void write_tsv(const TypoDictionary& dict, std::ostream& out) {
  out << kTsvHeader << '\n';
  const std::string lang = dict.language() ? std::string(to_string(*dict.language())) : "";
  for (const auto& e : dict.flatten()) {
    out << lang << '\t' << e.misspelled << '\t' << e.correct << '\t' << e.frequency << '\n';
  }
}

void write_jsonl(const TypoDictionary& dict, std::ostream& out) {
  for (const auto& e : dict.flatten()) {
    json sources = json::array();
    for (const auto& [page, rev] : e.sources) sources.push_back({page, rev});
    json row = {{"language", to_string(e.language)},
                {"misspelled", e.misspelled},
                {"correct", e.correct},
                {"frequency", e.frequency},
                {"sources", sources}};
    out << row.dump() << '\n';
  }
}

void save_dictionary(const TypoDictionary& dict, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write dictionary " + path.string());
  if (path.extension() == ".jsonl") {
    write_jsonl(dict, out);
  } else {
    write_tsv(dict, out);
  }
  if (!out) throw IoError("short write to " + path.string());
}

TypoDictionary read_tsv(std::istream& in) {
  TypoDictionary dict;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kTsvHeader) throw ValidationError("dictionary TSV header mismatch on line 1");
      continue;
    }
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 4) {
      throw ValidationError("line " + std::to_string(line_no) + ": expected 4 tab-separated fields");
    }
    TypoEntry e;
    try {
      e.language = language_from_code(fields[0]);
      e.misspelled = fields[1];
      e.correct = fields[2];
      std::size_t used = 0;
      e.frequency = std::stoll(fields[3], &used);
      if (used != fields[3].size()) throw ValidationError("bad frequency '" + fields[3] + "'");
      validate_typo_entry(e);
      dict.add(e);
    } catch (const std::logic_error&) {
      throw ValidationError("line " + std::to_string(line_no) + ": bad frequency");
    } catch (const ValidationError& err) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + err.what());
    }
  }
  if (line_no == 0) throw ValidationError("dictionary TSV is empty (missing header)");
  return dict;
}

TypoDictionary read_jsonl(std::istream& in) {
  TypoDictionary dict;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json row = json::parse(line);
      TypoEntry e;
      e.language = language_from_code(row.at("language").get<std::string>());
      e.misspelled = row.at("misspelled").get<std::string>();
      e.correct = row.at("correct").get<std::string>();
      e.frequency = row.at("frequency").get<std::int64_t>();
      for (const auto& src : row.value("sources", json::array())) {
        e.sources.insert({src.at(0).get<PageId>(), src.at(1).get<RevisionId>()});
      }
      validate_typo_entry(e);
      dict.add(e);
    } catch (const json::exception& err) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + err.what());
    } catch (const ValidationError& err) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + err.what());
    }
  }
  return dict;
}

TypoDictionary load_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dictionary " + path.string());
  return path.extension() == ".jsonl" ? read_jsonl(in) : read_tsv(in);
}

}  // namespace wikityper
