#include "wikityper/noise_injection.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <thread>

#include <json.hpp>

#include "wikityper/errors.h"

namespace wikityper {
namespace {

using ordered_json = nlohmann::ordered_json;

enum class Casing { kAsIs, kTitle, kUpper };

std::string apply_casing(const std::string& word, Casing casing, Language lang) {
  if (casing == Casing::kAsIs) return word;
  std::u32string cps = decode_utf8(word);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (i == 0 || casing == Casing::kUpper) cps[i] = simple_upper(cps[i], lang);
  }
  return encode_utf8(cps);
}

struct Option {
  std::string surface;
  std::int64_t weight;
};

std::vector<Option> dictionary_options(const std::string& token, const TypoDictionary& dict,
                                       const NoiseConfig& cfg) {
  const std::vector<TypoEntry>* entries = dict.find(token);
  Casing casing = Casing::kAsIs;
  if (entries == nullptr) {
    const std::string lower = lower_case(token, cfg.language);
    if (lower == token) return {};
    if (apply_casing(lower, Casing::kTitle, cfg.language) == token) {
      casing = Casing::kTitle;
    } else if (apply_casing(lower, Casing::kUpper, cfg.language) == token) {
      casing = Casing::kUpper;
    } else {
      return {};
    }
    entries = dict.find(lower);
    if (entries == nullptr) return {};
  }
  std::vector<Option> out;
  for (const auto& e : *entries) {
    std::string surface = apply_casing(e.misspelled, casing, cfg.language);
    if (casing != Casing::kAsIs && levenshtein(surface, token) != 1) continue;
    const std::int64_t weight = cfg.choice == MisspellingChoice::kUniform ? 1 : e.frequency;
    out.push_back({std::move(surface), weight});
  }
  return out;
}

// Partial Fisher-Yates: k positions drawn uniformly without replacement.
std::vector<std::size_t> choose_positions(std::vector<std::size_t> eligible, std::size_t k,
                                          Rng& rng) {
  k = std::min(k, eligible.size());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(eligible.size() - i));
    std::swap(eligible[i], eligible[j]);
  }
  eligible.resize(k);
  std::sort(eligible.begin(), eligible.end());
  return eligible;
}

const std::string& weighted_pick(const std::vector<Option>& options, Rng& rng) {
  std::int64_t total = 0;
  for (const auto& o : options) total += o.weight;
  auto draw = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(total)));
  for (const auto& o : options) {
    if (draw < o.weight) return o.surface;
    draw -= o.weight;
  }
  return options.back().surface;
}

SentenceNoise noise_tokens(const std::vector<std::string>& tokens, const NoiseConfig& cfg,
                           const NoiseSource& source, Rng& rng) {
  if (cfg.mode == NoiseMode::kDictionary) {
    return inject_sentence(tokens, *source.dictionary, cfg, rng);
  }
  return inject_sentence_keyboard(tokens, *source.layout, cfg, rng);
}

struct TextNoise {
  std::string text;
  std::size_t tokens = 0;
  std::size_t replaced = 0;
};

// Noised tokens are spliced into the original text so whitespace survives.
TextNoise noise_text(const std::string& text, const NoiseConfig& cfg, const NoiseSource& source,
                     Rng& rng) {
  const auto spans = token_spans(text);
  std::vector<std::string> tokens;
  tokens.reserve(spans.size());
  for (const auto& s : spans) tokens.push_back(text.substr(s.offset, s.length));
  const SentenceNoise noise = noise_tokens(tokens, cfg, source, rng);
  TextNoise out{"", spans.size(), noise.replaced_positions.size()};
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    out.text.append(text, cursor, spans[i].offset - cursor);
    out.text += noise.tokens[i];
    cursor = spans[i].offset + spans[i].length;
  }
  out.text.append(text, cursor, std::string::npos);
  return out;
}

struct Outcome {
  std::optional<DatasetRecord> record;
  std::size_t tokens = 0;
  std::size_t replaced = 0;
  std::string rejection;
};

Outcome process(const DatasetRecord& input, std::size_t index, const NoiseConfig& cfg,
                const NoiseSource& source) {
  Rng rng(derive_seed(cfg.seed, index));
  Outcome out;
  if (const auto* ic = std::get_if<IcRecord>(&input)) {
    auto noised = noise_text(ic->text, cfg, source, rng);
    out.record = IcRecord{std::move(noised.text), ic->intent_label};
    out.tokens = noised.tokens;
    out.replaced = noised.replaced;
  } else if (const auto* nli = std::get_if<NliRecord>(&input)) {
    auto premise = noise_text(nli->premise, cfg, source, rng);
    auto hypothesis = noise_text(nli->hypothesis, cfg, source, rng);
    out.record = NliRecord{std::move(premise.text), std::move(hypothesis.text), nli->label};
    out.tokens = premise.tokens + hypothesis.tokens;
    out.replaced = premise.replaced + hypothesis.replaced;
  } else {
    const auto& ner = std::get<NerRecord>(input);
    out.rejection = ner_violation(ner);
    if (!out.rejection.empty()) return out;
    auto noised = noise_tokens(ner.tokens, cfg, source, rng);
    out.record = NerRecord{std::move(noised.tokens), ner.labels};
    out.tokens = ner.tokens.size();
    out.replaced = noised.replaced_positions.size();
  }
  return out;
}

}  // namespace

std::string_view to_string(NoiseMode mode) {
  return mode == NoiseMode::kDictionary ? "dictionary" : "keyboard";
}

NoiseMode parse_noise_mode(std::string_view name) {
  if (name == "dictionary") return NoiseMode::kDictionary;
  if (name == "keyboard") return NoiseMode::kKeyboard;
  throw ValidationError("unknown noise mode '" + std::string(name) +
                        "' (expected dictionary or keyboard)");
}

void NoiseConfig::validate() const {
  if (!(ratio_r >= 0.0 && ratio_r <= 1.0)) throw ValidationError("ratio must be in [0,1]");
  if (max_words_m < 1) throw ValidationError("max words must be at least 1");
}

std::int64_t round_half_up(double x) {
  return static_cast<std::int64_t>(std::floor(x + 0.5 + 1e-9));
}

std::size_t select_replacement_count(std::size_t n_tokens, const NoiseConfig& cfg) {
  const auto target = round_half_up(cfg.ratio_r * static_cast<double>(n_tokens));
  const auto capped = std::min<std::int64_t>(target, cfg.max_words_m);
  return std::min(static_cast<std::size_t>(std::max<std::int64_t>(capped, 0)), n_tokens);
}

SentenceNoise inject_sentence(const std::vector<std::string>& tokens, const TypoDictionary& dict,
                              const NoiseConfig& cfg, Rng& rng) {
  std::vector<std::vector<Option>> options(tokens.size());
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    options[i] = dictionary_options(tokens[i], dict, cfg);
    if (!options[i].empty()) eligible.push_back(i);
  }
  SentenceNoise out{tokens, {}};
  out.replaced_positions =
      choose_positions(std::move(eligible), select_replacement_count(tokens.size(), cfg), rng);
  for (std::size_t pos : out.replaced_positions) out.tokens[pos] = weighted_pick(options[pos], rng);
  return out;
}

SentenceNoise inject_sentence_keyboard(const std::vector<std::string>& tokens,
                                       const KeyboardLayout& layout, const NoiseConfig& cfg,
                                       Rng& rng) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!is_dictionary_eligible(tokens[i])) continue;
    const auto cps = nfc_code_points(tokens[i]);
    if (std::any_of(cps.begin(), cps.end(), [&](char32_t c) { return layout.substitutable(c); })) {
      eligible.push_back(i);
    }
  }
  SentenceNoise out{tokens, {}};
  out.replaced_positions =
      choose_positions(std::move(eligible), select_replacement_count(tokens.size(), cfg), rng);
  for (std::size_t pos : out.replaced_positions) {
    out.tokens[pos] = keyboard_perturb(tokens[pos], layout, rng);
  }
  return out;
}

void InjectionReport::merge(const InjectionReport& other) {
  records_processed += other.records_processed;
  tokens_total += other.tokens_total;
  replacements_made += other.replacements_made;
  for (const auto& [k, v] : other.per_record_replacements) per_record_replacements[k] += v;
  rejected.insert(rejected.end(), other.rejected.begin(), other.rejected.end());
  std::sort(rejected.begin(), rejected.end(),
            [](const RejectedRecord& a, const RejectedRecord& b) { return a.index < b.index; });
  finalize();
}

void InjectionReport::finalize() {
  noise_ratio = tokens_total == 0 ? 0.0
                                  : static_cast<double>(replacements_made) /
                                        static_cast<double>(tokens_total);
}

std::string report_to_json(const InjectionReport& report) {
  ordered_json doc;
  doc["records_processed"] = report.records_processed;
  doc["records_rejected"] = report.rejected.size();
  doc["tokens_total"] = report.tokens_total;
  doc["replacements_made"] = report.replacements_made;
  doc["noise_ratio"] = report.noise_ratio;
  ordered_json histogram = ordered_json::object();
  for (const auto& [k, v] : report.per_record_replacements) histogram[std::to_string(k)] = v;
  doc["per_record_replacements"] = histogram;
  ordered_json rejected = ordered_json::array();
  for (const auto& r : report.rejected) rejected.push_back({{"index", r.index}, {"reason", r.reason}});
  doc["rejected"] = rejected;
  return doc.dump(2) + "\n";
}

InjectionReport parse_report_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    InjectionReport report;
    report.records_processed = doc.at("records_processed").get<std::int64_t>();
    report.tokens_total = doc.at("tokens_total").get<std::int64_t>();
    report.replacements_made = doc.at("replacements_made").get<std::int64_t>();
    const auto histogram = doc.value("per_record_replacements", nlohmann::json::object());
    for (const auto& [k, v] : histogram.items()) {
      report.per_record_replacements[std::stoll(k)] = v.get<std::int64_t>();
    }
    const auto rejected = doc.value("rejected", nlohmann::json::array());
    for (const auto& r : rejected) {
      report.rejected.push_back({r.at("index").get<std::size_t>(), r.value("reason", "")});
    }
    if (report.tokens_total < 0 || report.replacements_made < 0 ||
        report.replacements_made > report.tokens_total) {
      throw ValidationError("report counts are inconsistent");
    }
    report.finalize();
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed injection report: ") + e.what());
  } catch (const std::logic_error& e) {
    throw ValidationError(std::string("malformed injection report: ") + e.what());
  }
}

InjectionResult inject_dataset(const std::vector<DatasetRecord>& records, const NoiseConfig& cfg,
                               const NoiseSource& source, int workers) {
  cfg.validate();
  InjectionResult result;
  if (records.empty()) return result;
  const TaskKind task = task_of(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (task_of(records[i]) != task) {
      throw ValidationError("record " + std::to_string(i) + " is not a " +
                            std::string(to_string(task)) + " record; kinds must not be mixed");
    }
  }
  if (cfg.mode == NoiseMode::kDictionary) {
    if (source.dictionary == nullptr) throw ValidationError("dictionary mode needs a dictionary");
    if (task == TaskKind::kNer && !cfg.allow_ner_dictionary) {
      throw ValidationError("ner data uses keyboard mode unless dictionary noise is allowed explicitly");
    }
  } else if (source.layout == nullptr) {
    throw ValidationError("keyboard mode needs a layout");
  }

  std::vector<Outcome> outcomes(records.size());
  const std::size_t n_workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, records.size());
  std::vector<std::exception_ptr> errors(n_workers);
  auto run = [&](std::size_t w) {
    try {
      for (std::size_t i = w; i < records.size(); i += n_workers) {
        outcomes[i] = process(records[i], i, cfg, source);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < n_workers; ++w) threads.emplace_back(run, w);
  run(0);
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  auto& report = result.report;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    auto& o = outcomes[i];
    if (!o.record) {
      report.rejected.push_back({i, o.rejection});
      continue;
    }
    ++report.records_processed;
    report.tokens_total += static_cast<std::int64_t>(o.tokens);
    report.replacements_made += static_cast<std::int64_t>(o.replaced);
    ++report.per_record_replacements[static_cast<std::int64_t>(o.replaced)];
    result.records.push_back(std::move(*o.record));
  }
  report.finalize();
  return result;
}

}  // namespace wikityper
