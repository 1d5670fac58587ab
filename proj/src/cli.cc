#include "wikityper/cli.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "wikityper/corpus_stats.h"
#include "wikityper/dataset.h"
#include "wikityper/errors.h"
#include "wikityper/eval_gap.h"
#include "wikityper/keyboard_noise.h"
#include "wikityper/log.h"
#include "wikityper/noise_injection.h"
#include "wikityper/typo_mining.h"
#include "wikityper/wiki_ingest.h"

#ifndef WIKITYPER_VERSION
#define WIKITYPER_VERSION "0.0.0"
#endif

namespace wikityper::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr std::size_t kMineBatch = 4096;
constexpr const char* kManifestName = "run_manifest.json";

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Shortest decimal form that reads back as the same double.
std::string format_double(double v) {
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

// Resolved parameters in flag order. They become both the manifest's config
// snapshot and the argument list a rerun replays.
class Resolved {
 public:
  void value(const std::string& flag, const std::string& v) { items_.push_back({flag, v}); }
  void value(const std::string& flag, std::int64_t v) { items_.push_back({flag, v}); }
  void value(const std::string& flag, std::uint64_t v) { items_.push_back({flag, v}); }
  void value(const std::string& flag, double v) { items_.push_back({flag, v}); }
  void flag(const std::string& flag, bool on) { items_.push_back({flag, on}); }
  void list(const std::string& flag, const std::vector<std::string>& vs) {
    items_.push_back({flag, vs});
  }

  ordered_json snapshot() const {
    ordered_json doc = ordered_json::object();
    for (const auto& [flag, v] : items_) doc[flag.substr(2)] = v;
    return doc;
  }

  std::vector<std::string> arguments(const std::vector<std::string>& command) const {
    std::vector<std::string> args = command;
    for (const auto& [flag, v] : items_) {
      if (v.is_boolean()) {
        if (v.get<bool>()) args.push_back(flag);
      } else if (v.is_array()) {
        for (const auto& item : v) {
          args.push_back(flag);
          args.push_back(item.get<std::string>());
        }
      } else if (v.is_number_float()) {
        args.push_back(flag);
        args.push_back(format_double(v.get<double>()));
      } else if (v.is_number()) {
        args.push_back(flag);
        args.push_back(v.dump());
      } else if (!v.get<std::string>().empty()) {
        args.push_back(flag);
        args.push_back(v.get<std::string>());
      }
    }
    return args;
  }

 private:
  std::vector<std::pair<std::string, ordered_json>> items_;
};

struct Manifest {
  std::vector<std::string> command;
  Resolved resolved;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  ordered_json summary = ordered_json::object();
  std::string started_at = utc_now();
};

fs::path output_dir_of(const std::string& out) {
  const fs::path parent = fs::path(out).parent_path();
  return parent.empty() ? fs::path(".") : parent;
}

void write_manifest(const fs::path& dir, const Manifest& m) {
  ordered_json doc;
  std::string command;
  for (const auto& part : m.command) command += (command.empty() ? "" : " ") + part;
  doc["command"] = command;
  doc["arguments"] = m.resolved.arguments(m.command);
  doc["config_snapshot"] = m.resolved.snapshot();
  doc["seed"] = m.seed;
  ordered_json hashes = ordered_json::object();
  for (const auto& input : m.inputs) hashes[input] = "sha256:" + sha256_file(input);
  doc["input_hashes"] = hashes;
  doc["tool_version"] = WIKITYPER_VERSION;
  doc["started_at"] = m.started_at;
  doc["finished_at"] = utc_now();
  doc["summary"] = m.summary;
  write_file_atomic(dir / kManifestName, doc.dump(2) + "\n");
}

void ensure_distinct(const std::string& input, const std::string& output, const char* what) {
  if (input.empty() || output.empty()) return;
  std::error_code ec;
  const bool same = fs::weakly_canonical(input, ec) == fs::weakly_canonical(output, ec) ||
                    (fs::exists(output, ec) && fs::equivalent(input, output, ec));
  if (same) {
    throw ValidationError(std::string(what) + " " + output + " would overwrite input " + input);
  }
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw ValidationError(std::string(flag) + " is required");
}

std::string with_suffix(const std::string& path, const std::string& suffix) { return path + suffix; }

KeyboardLayout resolve_layout(const std::string& name_or_path) {
  if (name_or_path.ends_with(".json") && fs::exists(name_or_path)) {
    return load_layout_file(name_or_path);
  }
  return load_layout(name_or_path);
}

// ---- mine ------------------------------------------------------------------

struct MineOptions {
  std::string lang = "en";
  std::int64_t pages = 1000;
  int revs_per_page = 10;
  std::string source = "api";
  std::string dump_path;
  std::string cache_dir;
  double rate_limit = 5.0;
  std::uint64_t seed = 0;
  std::vector<PageId> page_ids;
  std::string out;
  std::int64_t min_frequency = 1;
  bool drop_case_only = false;
  int workers = 1;
  int max_retries = 4;
};

void add_mine(CLI::App& app, MineOptions& o) {
  if (const char* env = std::getenv("WIKITYPER_CACHE_DIR"); env != nullptr) o.cache_dir = env;
  auto* cmd = app.add_subcommand("mine", "Mine a typo dictionary from Wikipedia revision history");
  cmd->add_option("--lang", o.lang, "Language edition (en, de, es, fr, hi, tr)")->capture_default_str();
  cmd->add_option("--pages", o.pages, "Number of random pages to inspect")->capture_default_str();
  cmd->add_option("--revs-per-page", o.revs_per_page, "Most recent revisions per page")
      ->capture_default_str();
  cmd->add_option("--source", o.source, "api or dump")->capture_default_str();
  cmd->add_option("--dump-path", o.dump_path, "MediaWiki XML export (.xml or .xml.bz2)");
  cmd->add_option("--cache-dir", o.cache_dir, "Revision cache directory (API source)");
  cmd->add_option("--rate-limit", o.rate_limit, "API requests per second")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Seed for dump page sampling")->capture_default_str();
  cmd->add_option("--page-ids", o.page_ids, "Explicit page ids instead of random sampling")
      ->delimiter(',');
  cmd->add_option("--out", o.out, "Dictionary output (.tsv or .jsonl)");
  cmd->add_option("--min-frequency", o.min_frequency, "Drop pairs seen fewer times")
      ->capture_default_str();
  cmd->add_flag("--drop-case-only", o.drop_case_only, "Drop pairs that differ only by case");
  cmd->add_option("--workers", o.workers, "Parallel fetch and mining workers")->capture_default_str();
  cmd->add_option("--max-retries", o.max_retries, "Retries per API request")->capture_default_str();
}

int run_mine(const MineOptions& o) {
  require(o.out, "--out");
  IngestConfig cfg;
  cfg.language = language_from_code(o.lang);
  cfg.page_budget = o.pages;
  cfg.revisions_per_page = o.revs_per_page;
  if (o.source == "api") {
    cfg.source = IngestSource::kApi;
  } else if (o.source == "dump") {
    cfg.source = IngestSource::kDump;
  } else {
    throw ValidationError("--source must be api or dump");
  }
  cfg.dump_path = o.dump_path;
  cfg.cache_dir = o.cache_dir;
  cfg.rate_limit = o.rate_limit;
  cfg.seed = o.seed;
  cfg.page_ids = o.page_ids;
  cfg.workers = o.workers;
  cfg.max_retries = o.max_retries;
  cfg.validate();
  if (o.min_frequency < 1) throw ValidationError("--min-frequency must be at least 1");
  if (cfg.source == IngestSource::kDump) ensure_distinct(o.dump_path, o.out, "--out");

  Manifest manifest;
  manifest.command = {"mine"};
  auto& r = manifest.resolved;
  r.value("--lang", o.lang);
  r.value("--pages", o.pages);
  r.value("--revs-per-page", static_cast<std::int64_t>(o.revs_per_page));
  r.value("--source", o.source);
  r.value("--dump-path", o.dump_path);
  r.value("--cache-dir", o.cache_dir);
  r.value("--rate-limit", o.rate_limit);
  r.value("--seed", static_cast<std::uint64_t>(o.seed));
  std::vector<std::string> ids;
  for (PageId id : o.page_ids) ids.push_back(std::to_string(id));
  r.list("--page-ids", ids);
  r.value("--out", o.out);
  r.value("--min-frequency", o.min_frequency);
  r.flag("--drop-case-only", o.drop_case_only);
  r.value("--workers", static_cast<std::int64_t>(o.workers));
  r.value("--max-retries", static_cast<std::int64_t>(o.max_retries));
  manifest.seed = o.seed;
  if (cfg.source == IngestSource::kDump) manifest.inputs.push_back(o.dump_path);

  MiningOptions mining;
  mining.extract.drop_case_only = o.drop_case_only;
  mining.workers = o.workers;
  TypoDictionary dict(cfg.language);
  std::vector<RevisionPair> batch;
  auto flush = [&] {
    if (batch.empty()) return;
    dict.merge(mine_dictionary(batch, cfg.language, mining));
    batch.clear();
  };
  IngestSummary summary;
  fetch_random_pages(
      cfg,
      [&](RevisionPair&& pair) {
        batch.push_back(std::move(pair));
        if (batch.size() >= kMineBatch) flush();
      },
      &summary);
  flush();
  if (o.min_frequency > 1) dict = dict.with_min_frequency(o.min_frequency);

  std::ostringstream text;
  if (fs::path(o.out).extension() == ".jsonl") {
    write_jsonl(dict, text);
  } else {
    write_tsv(dict, text);
  }
  write_file_atomic(o.out, text.str());

  manifest.summary = {{"pages_requested", summary.pages_requested},
                      {"pages_processed", summary.pages_processed},
                      {"pages_skipped", summary.pages_skipped},
                      {"parse_errors", summary.parse_errors},
                      {"network_failures", summary.network_failures},
                      {"network_requests", summary.network_requests},
                      {"cache_hits", summary.cache_hits},
                      {"pairs_emitted", summary.pairs_emitted},
                      {"dictionary_entries", dict.total_entries()}};
  log_info("mine: " + std::to_string(summary.pages_processed) + " pages, " +
           std::to_string(summary.pages_skipped) + " skipped, " +
           std::to_string(summary.parse_errors) + " parse errors, " +
           std::to_string(summary.network_requests) + " requests, " +
           std::to_string(summary.pairs_emitted) + " revision pairs, " +
           std::to_string(dict.total_entries()) + " dictionary entries");
  write_manifest(output_dir_of(o.out), manifest);
  return 0;
}

// ---- inject ----------------------------------------------------------------

struct InjectOptions {
  std::string task;
  std::string mode;
  std::string dict;
  std::string layout;
  std::string lang;
  double ratio = 0.2;
  int max_words = 4;
  std::uint64_t seed = 0;
  std::string in;
  std::string out;
  std::string report;
  bool uniform_choice = false;
  bool allow_ner_dictionary = false;
  int workers = 1;
};

void add_inject(CLI::App& app, InjectOptions& o) {
  auto* cmd = app.add_subcommand("inject", "Inject typo noise into a test set");
  cmd->add_option("--task", o.task, "ic, nli or ner");
  cmd->add_option("--mode", o.mode, "dictionary or keyboard (default: keyboard for ner)");
  cmd->add_option("--dict", o.dict, "Typo dictionary (.tsv or .jsonl)");
  cmd->add_option("--layout", o.layout, "Layout name or .json path (default: per language)");
  cmd->add_option("--lang", o.lang, "Language (default: the dictionary's or layout's)");
  cmd->add_option("--ratio", o.ratio, "Share of a sentence's tokens to replace")
      ->capture_default_str();
  cmd->add_option("--max-words", o.max_words, "Replacement cap per sentence")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  cmd->add_option("--in", o.in, "Clean input");
  cmd->add_option("--out", o.out, "Noisy output");
  cmd->add_option("--report", o.report, "Injection report (default: <out>.report.json)");
  cmd->add_flag("--uniform-choice", o.uniform_choice,
                "Pick among a word's misspellings uniformly instead of by frequency");
  cmd->add_flag("--allow-ner-dictionary", o.allow_ner_dictionary,
                "Allow dictionary noise on ner data");
  cmd->add_option("--workers", o.workers, "Parallel workers")->capture_default_str();
}

int run_inject(const InjectOptions& o) {
  NoiseConfig cfg;
  cfg.ratio_r = o.ratio;
  cfg.max_words_m = o.max_words;
  cfg.seed = o.seed;
  cfg.choice = o.uniform_choice ? MisspellingChoice::kUniform : MisspellingChoice::kFrequency;
  cfg.allow_ner_dictionary = o.allow_ner_dictionary;
  cfg.validate();
  require(o.task, "--task");
  require(o.in, "--in");
  require(o.out, "--out");
  const TaskKind task = parse_task(o.task);
  cfg.mode = o.mode.empty() ? (task == TaskKind::kNer ? NoiseMode::kKeyboard : NoiseMode::kDictionary)
                            : parse_noise_mode(o.mode);
  const std::string report_path = o.report.empty() ? with_suffix(o.out, ".report.json") : o.report;
  ensure_distinct(o.in, o.out, "--out");
  ensure_distinct(o.in, report_path, "--report");
  ensure_distinct(o.out, report_path, "--report");

  std::optional<TypoDictionary> dict;
  std::optional<KeyboardLayout> layout;
  std::string layout_name;
  std::vector<std::string> inputs = {o.in};
  if (cfg.mode == NoiseMode::kDictionary) {
    require(o.dict, "--dict");
    dict = load_dictionary(o.dict);
    inputs.push_back(o.dict);
    if (!o.lang.empty()) {
      cfg.language = language_from_code(o.lang);
      if (dict->language() && *dict->language() != cfg.language) {
        throw ValidationError("--lang " + o.lang + " does not match the dictionary language " +
                              std::string(to_string(*dict->language())));
      }
    } else {
      cfg.language = dict->language().value_or(Language::kEn);
    }
  } else {
    const std::optional<Language> lang =
        o.lang.empty() ? std::nullopt : std::optional<Language>(language_from_code(o.lang));
    layout_name = o.layout.empty() ? default_layout_for(lang.value_or(Language::kEn)) : o.layout;
    layout = resolve_layout(layout_name);
    cfg.language = lang.value_or(layout->language());
    if (layout_name.ends_with(".json")) inputs.push_back(layout_name);
  }

  const auto records = load_dataset(o.in, task);
  NoiseSource source{dict ? &*dict : nullptr, layout ? &*layout : nullptr};
  const auto result = inject_dataset(records, cfg, source, o.workers);
  save_dataset(result.records, o.out);

  ordered_json report = ordered_json::parse(report_to_json(result.report));
  report["task"] = to_string(task);
  report["language"] = to_string(cfg.language);
  report["mode"] = to_string(cfg.mode);
  write_file_atomic(report_path, report.dump(2) + "\n");
  for (const auto& rej : result.report.rejected) {
    log_warning("record " + std::to_string(rej.index) + " rejected: " + rej.reason);
  }
  log_info("inject: " + std::to_string(result.report.records_processed) + " records, " +
           std::to_string(result.report.tokens_total) + " tokens, " +
           std::to_string(result.report.replacements_made) + " replacements, ratio " +
           format_double(result.report.noise_ratio) + ", " +
           std::to_string(result.report.rejected.size()) + " rejected");

  Manifest manifest;
  manifest.command = {"inject"};
  auto& r = manifest.resolved;
  r.value("--task", std::string(to_string(task)));
  r.value("--mode", std::string(to_string(cfg.mode)));
  r.value("--dict", o.dict);
  r.value("--layout", layout_name);
  r.value("--lang", std::string(to_string(cfg.language)));
  r.value("--ratio", cfg.ratio_r);
  r.value("--max-words", static_cast<std::int64_t>(cfg.max_words_m));
  r.value("--seed", cfg.seed);
  r.value("--in", o.in);
  r.value("--out", o.out);
  r.value("--report", report_path);
  r.flag("--uniform-choice", o.uniform_choice);
  r.flag("--allow-ner-dictionary", o.allow_ner_dictionary);
  r.value("--workers", static_cast<std::int64_t>(o.workers));
  manifest.seed = cfg.seed;
  manifest.inputs = inputs;
  manifest.summary = {{"records_processed", result.report.records_processed},
                      {"records_rejected", result.report.rejected.size()},
                      {"tokens_total", result.report.tokens_total},
                      {"replacements_made", result.report.replacements_made},
                      {"noise_ratio", result.report.noise_ratio}};
  write_manifest(output_dir_of(o.out), manifest);
  return 0;
}

// ---- stats -----------------------------------------------------------------

struct StatsOptions {
  std::vector<std::string> in;
  std::vector<std::string> report;
  std::vector<std::string> dataset;
  std::vector<std::string> lang;
  std::string task;
  std::string out;
  std::string pos_in;
  std::string pos_out;
  CLI::App* pos = nullptr;
};

void add_stats(CLI::App& app, StatsOptions& o) {
  auto* cmd = app.add_subcommand("stats", "Token and noise statistics per dataset");
  cmd->add_option("--in", o.in, "Clean dataset (repeatable)");
  cmd->add_option("--report", o.report, "Injection report for each --in (repeatable)");
  cmd->add_option("--dataset", o.dataset, "Dataset name per --in (default: file stem)");
  cmd->add_option("--lang", o.lang, "Language per --in (default: from the report)");
  cmd->add_option("--task", o.task, "ic, nli or ner (default: from the report)");
  cmd->add_option("--out", o.out, "Output .csv or .json");
  o.pos = cmd->add_subcommand("pos", "Part-of-speech histogram of tagged noise tokens");
  o.pos->add_option("--in", o.pos_in, "Two-column TSV token<TAB>tag")->required();
  o.pos->add_option("--out", o.pos_out, "Output CSV")->required();
}

int run_pos(const StatsOptions& o) {
  ensure_distinct(o.pos_in, o.pos_out, "--out");
  std::ifstream in(o.pos_in, std::ios::binary);
  if (!in) throw IoError("cannot open " + o.pos_in);
  const PosHistogram histogram = pos_histogram(in);
  std::ostringstream text;
  write_pos_csv(histogram, text);
  write_file_atomic(o.pos_out, text.str());
  if (histogram.malformed_lines > 0) {
    log_warning("stats pos: skipped " + std::to_string(histogram.malformed_lines) +
                " malformed lines");
  }
  Manifest manifest;
  manifest.command = {"stats", "pos"};
  manifest.resolved.value("--in", o.pos_in);
  manifest.resolved.value("--out", o.pos_out);
  manifest.inputs = {o.pos_in};
  std::int64_t total = 0;
  for (const auto& [tag, n] : histogram.counts) total += n;
  manifest.summary = {{"tokens", total}, {"malformed_lines", histogram.malformed_lines}};
  write_manifest(output_dir_of(o.pos_out), manifest);
  return 0;
}

int run_stats(const StatsOptions& o) {
  if (o.pos->parsed()) return run_pos(o);
  if (o.in.empty()) throw ValidationError("--in is required");
  require(o.out, "--out");
  if (o.report.size() != o.in.size()) {
    throw ValidationError("give one --report per --in");
  }
  if (!o.dataset.empty() && o.dataset.size() != o.in.size()) {
    throw ValidationError("give one --dataset per --in");
  }
  if (o.lang.size() > 1 && o.lang.size() != o.in.size()) {
    throw ValidationError("give one --lang, or one per --in");
  }
  std::vector<CorpusStats> rows;
  std::vector<std::string> resolved_tasks, resolved_langs, names;
  for (std::size_t i = 0; i < o.in.size(); ++i) {
    ensure_distinct(o.in[i], o.out, "--out");
    ensure_distinct(o.report[i], o.out, "--out");
    const std::string report_text = read_file(o.report[i]);
    const InjectionReport report = parse_report_json(report_text);
    const auto doc = nlohmann::json::parse(report_text);
    std::string task_name = o.task.empty() ? doc.value("task", "") : o.task;
    if (task_name.empty()) throw ValidationError(o.report[i] + " does not name its task; pass --task");
    std::string lang_name = o.lang.empty()        ? doc.value("language", "")
                            : o.lang.size() == 1 ? o.lang[0]
                                                 : o.lang[i];
    if (lang_name.empty()) throw ValidationError(o.report[i] + " does not name its language; pass --lang");
    const std::string name = o.dataset.empty() ? fs::path(o.in[i]).stem().string() : o.dataset[i];
    const auto records = load_dataset(o.in[i], parse_task(task_name));
    rows.push_back(compute_stats(records, report, name, language_from_code(lang_name)));
    resolved_tasks.push_back(task_name);
    resolved_langs.push_back(lang_name);
    names.push_back(name);
  }
  std::ostringstream text;
  if (fs::path(o.out).extension() == ".json") {
    text << stats_to_json(rows);
  } else {
    write_stats_csv(rows, text);
  }
  write_file_atomic(o.out, text.str());

  Manifest manifest;
  manifest.command = {"stats"};
  manifest.resolved.list("--in", o.in);
  manifest.resolved.list("--report", o.report);
  manifest.resolved.list("--dataset", names);
  manifest.resolved.list("--lang", resolved_langs);
  if (!o.task.empty()) manifest.resolved.value("--task", o.task);
  manifest.resolved.value("--out", o.out);
  manifest.inputs = o.in;
  manifest.inputs.insert(manifest.inputs.end(), o.report.begin(), o.report.end());
  manifest.summary = {{"rows", rows.size()}};
  write_manifest(output_dir_of(o.out), manifest);
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalOptions {
  std::string task;
  std::string gold;
  std::string clean_pred;
  std::string noisy_pred;
  std::string model;
  std::string lang;
  std::string runs_dir = "runs";
  bool token_f1 = false;
  std::string report_runs;
  std::string report_out;
  CLI::App* report = nullptr;
};

void add_eval(CLI::App& app, EvalOptions& o) {
  auto* cmd = app.add_subcommand("eval", "Score clean and noisy predictions against gold labels");
  cmd->add_option("--task", o.task, "ic, nli or ner");
  cmd->add_option("--gold", o.gold, "Gold dataset");
  cmd->add_option("--clean-pred", o.clean_pred, "Predictions on the clean test set");
  cmd->add_option("--noisy-pred", o.noisy_pred, "Predictions on the noisy test set");
  cmd->add_option("--model", o.model, "Model name");
  cmd->add_option("--lang", o.lang, "Language");
  cmd->add_option("--runs-dir", o.runs_dir, "Where the scored run is stored")->capture_default_str();
  cmd->add_flag("--token-f1", o.token_f1, "Token-level instead of entity-level F1 for ner");
  o.report = cmd->add_subcommand("report", "Gap tables and aggregates over stored runs");
  o.report->add_option("--runs", o.report_runs, "Runs directory")->required();
  o.report->add_option("--out", o.report_out, "Output directory (default: the runs directory)");
}

std::vector<std::string> gold_labels(const std::vector<DatasetRecord>& records) {
  std::vector<std::string> labels;
  for (const auto& r : records) {
    if (const auto* ic = std::get_if<IcRecord>(&r)) {
      labels.push_back(ic->intent_label);
    } else {
      labels.push_back(std::get<NliRecord>(r).label);
    }
  }
  return labels;
}

int run_eval_report(const EvalOptions& o, std::ostream& out) {
  const fs::path out_dir = o.report_out.empty() ? fs::path(o.report_runs) : fs::path(o.report_out);
  const auto cells = load_run_cells(o.report_runs);
  if (cells.empty()) throw ValidationError("no *.run.json files in " + o.report_runs);
  const GapReport report = build_gap_report(cells);
  std::ostringstream csv, md, agg;
  write_gap_csv(report, csv);
  write_gap_markdown(report, md);
  write_aggregates_csv(report, agg);
  write_file_atomic(out_dir / "gap_report.csv", csv.str());
  write_file_atomic(out_dir / "gap_report.md", md.str());
  write_file_atomic(out_dir / "aggregates.csv", agg.str());
  out << md.str();

  Manifest manifest;
  manifest.command = {"eval", "report"};
  manifest.resolved.value("--runs", o.report_runs);
  manifest.resolved.value("--out", o.report_out);
  for (const auto& entry : fs::directory_iterator(o.report_runs)) {
    if (entry.path().filename().string().ends_with(".run.json")) {
      manifest.inputs.push_back(entry.path().string());
    }
  }
  std::sort(manifest.inputs.begin(), manifest.inputs.end());
  manifest.summary = {{"rows", report.rows.size()}, {"warnings", report.warnings}};
  write_manifest(out_dir, manifest);
  return 0;
}

int run_eval(const EvalOptions& o, std::ostream& out) {
  if (o.report->parsed()) return run_eval_report(o, out);
  for (const auto& [value, flag] : {std::pair{&o.task, "--task"}, {&o.gold, "--gold"},
                                    {&o.clean_pred, "--clean-pred"}, {&o.noisy_pred, "--noisy-pred"},
                                    {&o.model, "--model"}, {&o.lang, "--lang"}}) {
    require(*value, flag);
  }
  RunResult run;
  run.model = o.model;
  run.task = parse_task(o.task);
  run.language = language_from_code(o.lang);
  const auto gold = load_dataset(o.gold, run.task);
  run.records = gold.size();
  if (run.task == TaskKind::kNer) {
    std::vector<std::vector<std::string>> gold_tags;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const auto& ner = std::get<NerRecord>(gold[i]);
      if (const auto problem = ner_violation(ner); !problem.empty()) {
        throw ValidationError("gold sentence " + std::to_string(i) + ": " + problem);
      }
      gold_tags.push_back(ner.labels);
    }
    auto score = [&](const std::string& path) {
      const auto pred = load_tag_predictions(path);
      return o.token_f1 ? token_f1(gold_tags, pred) : entity_f1(gold_tags, pred);
    };
    const F1Score clean = score(o.clean_pred);
    const F1Score noisy = score(o.noisy_pred);
    run.clean = clean.f1;
    run.noisy = noisy.f1;
    run.repairs_clean = clean.repairs;
    run.repairs_noisy = noisy.repairs;
    if (clean.repairs + noisy.repairs > 0) {
      log_warning("eval: repaired " + std::to_string(clean.repairs) + " clean and " +
                  std::to_string(noisy.repairs) + " noisy dangling I- tags");
    }
  } else {
    const auto labels = gold_labels(gold);
    run.clean = accuracy(labels, load_label_predictions(o.clean_pred));
    run.noisy = accuracy(labels, load_label_predictions(o.noisy_pred));
  }
  const fs::path file = fs::path(o.runs_dir) / run_result_filename(run);
  write_file_atomic(file, run_result_to_json(run));
  out << run.model << '\t' << to_string(run.task) << '\t' << to_string(run.language) << '\t'
      << format2(run.clean) << '\t' << format2(run.noisy) << '\t' << format2(run.clean - run.noisy)
      << '\n';

  Manifest manifest;
  manifest.command = {"eval"};
  auto& r = manifest.resolved;
  r.value("--task", o.task);
  r.value("--gold", o.gold);
  r.value("--clean-pred", o.clean_pred);
  r.value("--noisy-pred", o.noisy_pred);
  r.value("--model", o.model);
  r.value("--lang", o.lang);
  r.value("--runs-dir", o.runs_dir);
  r.flag("--token-f1", o.token_f1);
  manifest.inputs = {o.gold, o.clean_pred, o.noisy_pred};
  manifest.summary = {{"run_file", file.string()}, {"clean", run.clean}, {"noisy", run.noisy}};
  write_manifest(o.runs_dir, manifest);
  return 0;
}

// ---- layouts ---------------------------------------------------------------

struct LayoutsOptions {
  std::string dir;
  std::string show;
};

void add_layouts(CLI::App& app, LayoutsOptions& o) {
  auto* cmd = app.add_subcommand("layouts", "List or inspect keyboard layouts");
  cmd->add_option("--dir", o.dir, "Layout directory (default: WIKITYPER_LAYOUT_DIR or shipped)");
  cmd->add_option("--show", o.show, "Print the adjacency table of one layout");
}

int run_layouts(const LayoutsOptions& o, std::ostream& out) {
  const fs::path dir = o.dir.empty() ? layout_directory() : fs::path(o.dir);
  if (!o.show.empty()) {
    const KeyboardLayout layout = load_layout(o.show, dir);
    for (const auto& [key, neighbours] : layout.adjacency()) {
      out << encode_utf8(std::u32string(1, key)) << '\t';
      for (char32_t n : neighbours) out << encode_utf8(std::u32string(1, n));
      out << '\n';
    }
    return 0;
  }
  int status = 0;
  for (const auto& name : available_layouts(dir)) {
    try {
      const KeyboardLayout layout = load_layout(name, dir);
      out << name << '\t' << to_string(layout.language()) << '\t' << layout.adjacency().size()
          << " keys\n";
    } catch (const ValidationError& e) {
      log(LogLevel::kError, e.what());
      status = 1;
    }
  }
  return status;
}

// ---- rerun -----------------------------------------------------------------

int run_rerun(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(manifest_path + " is not valid JSON: " + e.what());
  }
  if (!doc.contains("arguments") || !doc["arguments"].is_array()) {
    throw ValidationError(manifest_path + " has no argument list");
  }
  const auto hashes = doc.value("input_hashes", ordered_json::object());
  for (const auto& [path, hash] : hashes.items()) {
    if ("sha256:" + sha256_file(path) != hash.get<std::string>()) {
      throw ValidationError("input " + path + " changed since " + manifest_path + " was written");
    }
  }
  std::vector<std::string> args;
  for (const auto& a : doc["arguments"]) args.push_back(a.get<std::string>());
  if (!args.empty() && args.front() == "rerun") throw ValidationError("manifest replays rerun");
  return run(args, out, err);
}

std::string log_level_name(LogLevel level) {
  switch (level) {
    case LogLevel::kDebug: return "debug";
    case LogLevel::kInfo: return "info";
    case LogLevel::kWarning: return "warning";
    case LogLevel::kError: return "error";
    case LogLevel::kQuiet: return "quiet";
  }
  return "info";
}

LogLevel parse_log_level(const std::string& name) {
  if (name == "debug") return LogLevel::kDebug;
  if (name == "info") return LogLevel::kInfo;
  if (name == "warning") return LogLevel::kWarning;
  if (name == "error") return LogLevel::kError;
  return LogLevel::kQuiet;
}

}  // namespace

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  static const char* kHex = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 15]);
  }
  return hex;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wikipedia typo mining and noisy-evaluation toolkit", "wikityper"};
  app.set_version_flag("--version", WIKITYPER_VERSION);
  app.set_config("--config", "", "TOML config file; flags override it");
  std::string log_level = log_level_name(wikityper::log_level());
  app.add_option("--log-level", log_level, "debug, info, warning, error or quiet")
      ->check(CLI::IsMember({"debug", "info", "warning", "error", "quiet"}))
      ->capture_default_str();
  app.require_subcommand(1);
  app.fallthrough();

  MineOptions mine;
  InjectOptions inject;
  StatsOptions stats;
  EvalOptions eval;
  LayoutsOptions layouts;
  std::string manifest_path;
  add_mine(app, mine);
  add_inject(app, inject);
  add_stats(app, stats);
  add_eval(app, eval);
  add_layouts(app, layouts);
  app.add_subcommand("rerun", "Replay a run from its manifest")
      ->add_option("--manifest", manifest_path, "run_manifest.json")
      ->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    const CLI::App* failing = &app;
    while (!failing->get_subcommands().empty()) failing = failing->get_subcommands().front();
    err << "error: " << e.what() << "\n\n" << failing->help();
    return 1;
  }
  set_log_level(parse_log_level(log_level));

  try {
    const CLI::App* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "mine") return run_mine(mine);
    if (name == "inject") return run_inject(inject);
    if (name == "stats") return run_stats(stats);
    if (name == "eval") return run_eval(eval, out);
    if (name == "layouts") return run_layouts(layouts, out);
    return run_rerun(manifest_path, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  set_log_level(LogLevel::kInfo);
  return run(args, std::cout, std::cerr);
}

}  // namespace wikityper::cli
