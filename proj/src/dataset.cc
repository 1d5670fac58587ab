#include "wikityper/dataset.h"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wikityper/errors.h"

namespace wikityper {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string line_error(std::size_t line_no, const std::string& what) {
  return "line " + std::to_string(line_no) + ": " + what;
}

std::string type_of(std::string_view tag) { return std::string(tag.substr(2)); }

}  // namespace

std::string_view to_string(TaskKind task) {
  switch (task) {
    case TaskKind::kIc: return "ic";
    case TaskKind::kNli: return "nli";
    case TaskKind::kNer: return "ner";
  }
  return "?";
}

TaskKind parse_task(std::string_view name) {
  if (name == "ic") return TaskKind::kIc;
  if (name == "nli") return TaskKind::kNli;
  if (name == "ner") return TaskKind::kNer;
  throw ValidationError("unknown task '" + std::string(name) + "' (expected ic, nli or ner)");
}

TaskKind task_of(const DatasetRecord& record) {
  return static_cast<TaskKind>(record.index());
}

bool is_bio_tag(std::string_view tag) {
  if (tag == "O") return true;
  return tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-';
}

bool is_valid_bio(const std::vector<std::string>& tags) {
  std::string open;  // type of the chunk the previous tag belongs to
  for (const auto& tag : tags) {
    if (!is_bio_tag(tag)) return false;
    if (tag == "O") {
      open.clear();
    } else if (tag[0] == 'B') {
      open = type_of(tag);
    } else if (open != type_of(tag)) {
      return false;
    }
  }
  return true;
}

std::string ner_violation(const NerRecord& record) {
  if (record.tokens.size() != record.labels.size()) {
    return std::to_string(record.tokens.size()) + " tokens but " +
           std::to_string(record.labels.size()) + " labels";
  }
  if (!is_valid_bio(record.labels)) return "invalid BIO sequence";
  return {};
}

bool is_nli_label(std::string_view label) {
  return label == "entailment" || label == "contradiction" || label == "neutral";
}

std::vector<DatasetRecord> read_dataset(std::istream& in, TaskKind task) {
  std::vector<DatasetRecord> records;
  std::string line;
  std::size_t line_no = 0;
  if (task == TaskKind::kNer) {
    NerRecord current;
    bool open = false;
    auto close = [&] {
      if (open) records.emplace_back(std::move(current));
      current = NerRecord{};
      open = false;
    };
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) {
        close();
        continue;
      }
      open = true;
      const auto first_tab = line.find('\t');
      if (first_tab == std::string::npos) {
        current.tokens.push_back(line);
        continue;
      }
      current.tokens.push_back(line.substr(0, first_tab));
      current.labels.push_back(line.substr(line.rfind('\t') + 1));
    }
    close();
    return records;
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      const auto row = nlohmann::json::parse(line);
      if (task == TaskKind::kIc) {
        records.emplace_back(
            IcRecord{row.at("text").get<std::string>(), row.at("label").get<std::string>()});
      } else {
        NliRecord r{row.at("premise").get<std::string>(), row.at("hypothesis").get<std::string>(),
                    row.at("label").get<std::string>()};
        if (!is_nli_label(r.label)) {
          throw ValidationError("NLI label '" + r.label +
                                "' is not entailment, contradiction or neutral");
        }
        records.emplace_back(std::move(r));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(line_error(line_no, e.what()));
    } catch (const ValidationError& e) {
      throw ValidationError(line_error(line_no, e.what()));
    }
  }
  return records;
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path, TaskKind task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset " + path.string());
  try {
    return read_dataset(in, task);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_dataset(const std::vector<DatasetRecord>& records, std::ostream& out) {
  bool first_sentence = true;
  for (const auto& record : records) {
    if (const auto* ic = std::get_if<IcRecord>(&record)) {
      ordered_json row;
      row["text"] = ic->text;
      row["label"] = ic->intent_label;
      out << row.dump() << '\n';
    } else if (const auto* nli = std::get_if<NliRecord>(&record)) {
      ordered_json row;
      row["premise"] = nli->premise;
      row["hypothesis"] = nli->hypothesis;
      row["label"] = nli->label;
      out << row.dump() << '\n';
    } else {
      const auto& ner = std::get<NerRecord>(record);
      if (!first_sentence) out << '\n';
      first_sentence = false;
      for (std::size_t i = 0; i < ner.tokens.size(); ++i) {
        out << ner.tokens[i];
        if (i < ner.labels.size()) out << '\t' << ner.labels[i];
        out << '\n';
      }
    }
  }
}

void save_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& path) {
  std::ostringstream buffer;
  write_dataset(records, buffer);
  write_file_atomic(path, buffer.str());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

}  // namespace wikityper
