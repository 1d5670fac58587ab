#include "wikityper/eval_gap.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include <json.hpp>

#include "wikityper/errors.h"
#include "wikityper/log.h"

namespace wikityper {
namespace {

using ordered_json = nlohmann::ordered_json;

double percent(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

F1Score make_score(std::size_t matched, std::size_t gold, std::size_t pred) {
  F1Score s;
  s.matched = matched;
  s.gold_count = gold;
  s.pred_count = pred;
  s.precision = percent(matched, pred);
  s.recall = percent(matched, gold);
  s.f1 = s.precision + s.recall == 0.0 ? 0.0
                                       : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

void check_alignment(const std::vector<std::vector<std::string>>& gold,
                     const std::vector<std::vector<std::string>>& pred) {
  if (gold.size() != pred.size()) {
    throw AlignmentError("gold has " + std::to_string(gold.size()) + " sentences, predictions " +
                             std::to_string(pred.size()),
                         std::min(gold.size(), pred.size()));
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != pred[i].size()) {
      throw AlignmentError("sentence " + std::to_string(i) + ": gold has " +
                               std::to_string(gold[i].size()) + " tags, prediction " +
                               std::to_string(pred[i].size()),
                           i);
    }
    if (!is_valid_bio(gold[i])) {
      throw ValidationError("gold sentence " + std::to_string(i) + " is not a valid BIO sequence");
    }
  }
}

std::string entity_type(const std::string& tag) { return tag == "O" ? "" : tag.substr(2); }

int task_rank(TaskKind task) {
  switch (task) {
    case TaskKind::kIc: return 0;
    case TaskKind::kNer: return 1;
    case TaskKind::kNli: return 2;
  }
  return 3;
}

std::string task_title(TaskKind task) {
  switch (task) {
    case TaskKind::kIc: return "Intent classification (accuracy %)";
    case TaskKind::kNer: return "Named entity recognition (F1)";
    case TaskKind::kNli: return "Natural language inference (accuracy %)";
  }
  return "";
}

double mean(const std::vector<double>& xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
}

}  // namespace

std::string_view to_string(Variant variant) {
  return variant == Variant::kClean ? "clean" : "noisy";
}

double accuracy(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
  if (gold.empty()) throw ValidationError("gold labels are empty");
  if (gold.size() != pred.size()) {
    throw AlignmentError("gold has " + std::to_string(gold.size()) + " labels, predictions " +
                             std::to_string(pred.size()) + "; first unmatched index " +
                             std::to_string(std::min(gold.size(), pred.size())),
                         std::min(gold.size(), pred.size()));
  }
  std::size_t matches = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) matches += gold[i] == pred[i] ? 1 : 0;
  return percent(matches, gold.size());
}

std::vector<Chunk> extract_chunks(const std::vector<std::string>& tags, std::size_t sentence) {
  std::vector<Chunk> chunks;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].empty() || tags[i][0] != 'B') continue;
    Chunk c{sentence, entity_type(tags[i]), i, i};
    while (c.end + 1 < tags.size() && tags[c.end + 1][0] == 'I' &&
           entity_type(tags[c.end + 1]) == c.type) {
      ++c.end;
    }
    chunks.push_back(std::move(c));
  }
  return chunks;
}

RepairedTags repair_bio(const std::vector<std::string>& tags) {
  RepairedTags out{tags, 0};
  std::string open;
  for (auto& tag : out.tags) {
    if (!is_bio_tag(tag)) throw ValidationError("'" + tag + "' is not a BIO tag");
    if (tag == "O") {
      open.clear();
      continue;
    }
    const std::string type = entity_type(tag);
    if (tag[0] == 'I' && open != type) {
      tag = "B-" + type;
      ++out.repairs;
    }
    open = type;
  }
  return out;
}

F1Score entity_f1(const std::vector<std::vector<std::string>>& gold,
                  const std::vector<std::vector<std::string>>& pred) {
  check_alignment(gold, pred);
  std::set<Chunk> gold_chunks;
  std::set<Chunk> pred_chunks;
  std::size_t repairs = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (auto& c : extract_chunks(gold[i], i)) gold_chunks.insert(std::move(c));
    const auto repaired = repair_bio(pred[i]);
    repairs += repaired.repairs;
    for (auto& c : extract_chunks(repaired.tags, i)) pred_chunks.insert(std::move(c));
  }
  std::size_t matched = 0;
  for (const auto& c : pred_chunks) matched += gold_chunks.count(c);
  F1Score s = make_score(matched, gold_chunks.size(), pred_chunks.size());
  s.repairs = repairs;
  return s;
}

F1Score token_f1(const std::vector<std::vector<std::string>>& gold,
                 const std::vector<std::vector<std::string>>& pred) {
  check_alignment(gold, pred);
  std::size_t matched = 0, gold_count = 0, pred_count = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    for (std::size_t j = 0; j < gold[i].size(); ++j) {
      if (!is_bio_tag(pred[i][j])) throw ValidationError("'" + pred[i][j] + "' is not a BIO tag");
      const std::string g = entity_type(gold[i][j]);
      const std::string p = entity_type(pred[i][j]);
      gold_count += g.empty() ? 0 : 1;
      pred_count += p.empty() ? 0 : 1;
      matched += !g.empty() && g == p ? 1 : 0;
    }
  }
  return make_score(matched, gold_count, pred_count);
}

std::vector<std::string> read_label_predictions(std::istream& in) {
  std::map<std::int64_t, std::string> by_id;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto row = nlohmann::json::parse(line);
      const auto id = row.at("id").get<std::int64_t>();
      if (!by_id.emplace(id, row.at("label").get<std::string>()).second) {
        throw ValidationError("duplicate prediction id " + std::to_string(id));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::vector<std::string> labels;
  labels.reserve(by_id.size());
  for (auto& [id, label] : by_id) {
    if (id != static_cast<std::int64_t>(labels.size())) {
      throw AlignmentError("prediction ids skip index " + std::to_string(labels.size()),
                           labels.size());
    }
    labels.push_back(std::move(label));
  }
  return labels;
}

std::vector<std::string> load_label_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open predictions " + path.string());
  try {
    return read_label_predictions(in);
  } catch (const AlignmentError& e) {
    throw AlignmentError(path.string() + ": " + e.what(), e.index());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::vector<std::vector<std::string>> load_tag_predictions(const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> out;
  for (auto& record : load_dataset(path, TaskKind::kNer)) {
    auto& ner = std::get<NerRecord>(record);
    if (ner.labels.size() != ner.tokens.size()) {
      throw AlignmentError(path.string() + ": sentence " + std::to_string(out.size()) +
                               " has a token without a predicted tag",
                           out.size());
    }
    out.push_back(std::move(ner.labels));
  }
  return out;
}

GapReport build_gap_report(const std::vector<ScoreCell>& cells) {
  using Key = std::tuple<std::string, TaskKind, Language>;
  GapReport report;
  std::map<Key, std::map<Variant, double>> scores;
  for (const auto& c : cells) {
    if (std::find(report.models.begin(), report.models.end(), c.model) == report.models.end()) {
      report.models.push_back(c.model);
    }
    auto& variants = scores[{c.model, c.task, c.language}];
    if (!variants.emplace(c.variant, c.score).second) {
      throw ValidationError("duplicate score for " + c.model + "/" +
                            std::string(to_string(c.task)) + "/" +
                            std::string(to_string(c.language)) + "/" +
                            std::string(to_string(c.variant)));
    }
  }
  auto model_rank = [&](const std::string& m) {
    return std::find(report.models.begin(), report.models.end(), m) - report.models.begin();
  };
  for (const auto& [key, variants] : scores) {
    const auto& [model, task, lang] = key;
    if (variants.size() != 2) {
      const std::string missing = variants.count(Variant::kClean) ? "noisy" : "clean";
      report.warnings.push_back("skipping " + model + "/" + std::string(to_string(task)) + "/" +
                                std::string(to_string(lang)) + ": no " + missing + " score");
      log_warning(report.warnings.back());
      continue;
    }
    const double clean = variants.at(Variant::kClean);
    const double noisy = variants.at(Variant::kNoisy);
    report.rows.push_back({model, task, lang, clean, noisy, clean - noisy});
  }
  std::sort(report.rows.begin(), report.rows.end(), [&](const GapRow& a, const GapRow& b) {
    return std::make_tuple(model_rank(a.model), task_rank(a.task), a.language) <
           std::make_tuple(model_rank(b.model), task_rank(b.task), b.language);
  });

  for (std::size_t i = 0; i < report.rows.size();) {
    std::size_t j = i;
    std::vector<double> clean, noisy, gap;
    while (j < report.rows.size() && report.rows[j].model == report.rows[i].model &&
           report.rows[j].task == report.rows[i].task) {
      clean.push_back(report.rows[j].clean);
      noisy.push_back(report.rows[j].noisy);
      gap.push_back(report.rows[j].gap);
      ++j;
    }
    report.row_averages.push_back(
        {report.rows[i].model, report.rows[i].task, mean(clean), mean(noisy), mean(gap), j - i});
    i = j;
  }

  for (const auto& model : report.models) {
    ModelAggregate agg;
    agg.model = model;
    std::vector<double> task_means, all_cells;
    std::map<Language, std::vector<double>> by_language;
    for (const auto& avg : report.row_averages) {
      if (avg.model != model) continue;
      agg.task_gap[avg.task] = avg.gap;
      task_means.push_back(avg.gap);
    }
    for (const auto& row : report.rows) {
      if (row.model != model) continue;
      all_cells.push_back(row.gap);
      by_language[row.language].push_back(row.gap);
    }
    if (task_means.empty()) continue;
    std::vector<double> language_means;
    for (const auto& [lang, gaps] : by_language) language_means.push_back(mean(gaps));
    agg.mean_of_task_averages = mean(task_means);
    agg.mean_of_cells = mean(all_cells);
    agg.mean_of_language_means = mean(language_means);
    report.aggregates.push_back(std::move(agg));
  }
  return report;
}

double round2(double value) {
  // The tolerance keeps decimal ties (x.xx5 computed in binary) rounding up.
  const double scaled = std::abs(value) * 100.0;
  const double rounded = std::floor(scaled + 0.5 + 1e-6) / 100.0;
  return value < 0 ? -rounded : rounded;
}

std::string format2(double value) {
  const double r = round2(value);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", r == 0.0 ? 0.0 : r);
  return buf;
}

void write_gap_csv(const GapReport& report, std::ostream& out) {
  out << "model,task,language,clean,noisy,gap\n";
  for (const auto& row : report.rows) {
    out << row.model << ',' << to_string(row.task) << ',' << to_string(row.language) << ','
        << format2(row.clean) << ',' << format2(row.noisy) << ',' << format2(row.gap) << '\n';
  }
  for (const auto& avg : report.row_averages) {
    out << avg.model << ',' << to_string(avg.task) << ",avg," << format2(avg.clean) << ','
        << format2(avg.noisy) << ',' << format2(avg.gap) << '\n';
  }
}

void write_gap_markdown(const GapReport& report, std::ostream& out) {
  bool first = true;
  for (TaskKind task : {TaskKind::kNli, TaskKind::kIc, TaskKind::kNer}) {
    std::set<Language> langs;
    for (const auto& row : report.rows) {
      if (row.task == task) langs.insert(row.language);
    }
    if (langs.empty()) continue;
    if (!first) out << '\n';
    first = false;
    out << "## " << task_title(task) << "\n\n| Model | |";
    for (Language l : langs) out << ' ' << to_string(l) << " |";
    out << " Average |\n|---|---|";
    for (std::size_t i = 0; i < langs.size(); ++i) out << "---|";
    out << "---|\n";
    for (const auto& avg : report.row_averages) {
      if (avg.task != task) continue;
      auto line = [&](std::string_view label, double GapRow::*field, double avg_value) {
        out << "| " << (label == "Clean" ? avg.model : "") << " | " << label << " |";
        for (Language l : langs) {
          auto it = std::find_if(report.rows.begin(), report.rows.end(), [&](const GapRow& r) {
            return r.model == avg.model && r.task == task && r.language == l;
          });
          out << ' ' << (it == report.rows.end() ? "-" : format2((*it).*field)) << " |";
        }
        out << ' ' << format2(avg_value) << " |\n";
      };
      line("Clean", &GapRow::clean, avg.clean);
      line("Noisy", &GapRow::noisy, avg.noisy);
      line("C-N", &GapRow::gap, avg.gap);
    }
  }
}

void write_aggregates_csv(const GapReport& report, std::ostream& out) {
  out << "model,gap_ic,gap_ner,gap_nli,mean_of_task_averages,mean_of_cells,"
         "mean_of_language_means\n";
  for (const auto& agg : report.aggregates) {
    out << agg.model;
    for (TaskKind task : {TaskKind::kIc, TaskKind::kNer, TaskKind::kNli}) {
      auto it = agg.task_gap.find(task);
      out << ',' << (it == agg.task_gap.end() ? "" : format2(it->second));
    }
    out << ',' << format2(agg.mean_of_task_averages) << ',' << format2(agg.mean_of_cells) << ','
        << format2(agg.mean_of_language_means) << '\n';
  }
}

std::string run_result_to_json(const RunResult& run) {
  ordered_json doc;
  doc["model"] = run.model;
  doc["task"] = to_string(run.task);
  doc["language"] = to_string(run.language);
  doc["clean_score"] = run.clean;
  doc["noisy_score"] = run.noisy;
  doc["records"] = run.records;
  doc["bio_repairs_clean"] = run.repairs_clean;
  doc["bio_repairs_noisy"] = run.repairs_noisy;
  return doc.dump(2) + "\n";
}

RunResult parse_run_result(std::string_view json_text) {
  try {
    const auto doc = nlohmann::json::parse(json_text);
    RunResult run;
    run.model = doc.at("model").get<std::string>();
    run.task = parse_task(doc.at("task").get<std::string>());
    run.language = language_from_code(doc.at("language").get<std::string>());
    run.clean = doc.at("clean_score").get<double>();
    run.noisy = doc.at("noisy_score").get<double>();
    run.records = doc.value("records", std::size_t{0});
    run.repairs_clean = doc.value("bio_repairs_clean", std::size_t{0});
    run.repairs_noisy = doc.value("bio_repairs_noisy", std::size_t{0});
    if (run.model.empty()) throw ValidationError("empty model name");
    return run;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed run result: ") + e.what());
  }
}

std::string run_result_filename(const RunResult& run) {
  std::string safe;
  for (char c : run.model) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    safe.push_back(ok ? c : '_');
  }
  return safe + "." + std::string(to_string(run.task)) + "." +
         std::string(to_string(run.language)) + ".run.json";
}

std::vector<ScoreCell> load_run_cells(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw IoError("runs directory " + dir.string() + " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 9 && name.ends_with(".run.json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ScoreCell> cells;
  for (const auto& file : files) {
    RunResult run;
    try {
      run = parse_run_result(read_file(file));
    } catch (const ValidationError& e) {
      throw ValidationError(file.string() + ": " + e.what());
    }
    cells.push_back({run.model, run.task, run.language, Variant::kClean, run.clean});
    cells.push_back({run.model, run.task, run.language, Variant::kNoisy, run.noisy});
  }
  return cells;
}

}  // namespace wikityper
