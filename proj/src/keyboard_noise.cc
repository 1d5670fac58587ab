#include "wikityper/keyboard_noise.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wikityper/errors.h"

#ifndef WIKITYPER_DATA_DIR
#define WIKITYPER_DATA_DIR "data"
#endif

namespace wikityper {
namespace {

using json = nlohmann::json;

// Centres closer than this in an adjacent row count as neighbours.
constexpr double kAdjacentRowReach = 1.5;

std::string describe(char32_t c) { return "'" + encode_utf8(std::u32string(1, c)) + "'"; }

char32_t single_key(const std::string& key) {
  const std::u32string cps = nfc_code_points(key);
  if (cps.size() != 1) throw ValidationError("layout key '" + key + "' is not one character");
  return cps.front();
}

// Replacement for position `c`, or nothing when no neighbour yields a change.
std::vector<char32_t> replacements(char32_t c, const KeyboardLayout& layout) {
  std::vector<char32_t> out;
  if (layout.contains(c)) {
    out.assign(layout.neighbours(c).begin(), layout.neighbours(c).end());
    return out;
  }
  const char32_t lower = simple_lower(c, layout.language());
  if (lower == c || !layout.contains(lower)) return out;
  for (char32_t n : layout.neighbours(lower)) {
    const char32_t recased = simple_upper(n, layout.language());
    if (recased != c) out.push_back(recased);
  }
  return out;
}

}  // namespace

KeyboardLayout::KeyboardLayout(std::string name, Language language, Adjacency adjacency)
    : name_(std::move(name)), language_(language), adjacency_(std::move(adjacency)) {
  for (const auto& [key, neighbours] : adjacency_) {
    if (neighbours.count(key)) {
      throw ValidationError("layout " + name_ + ": key " + describe(key) +
                            " is adjacent to itself");
    }
    for (char32_t other : neighbours) {
      auto back = adjacency_.find(other);
      if (back == adjacency_.end() || !back->second.count(key)) {
        throw ValidationError("layout " + name_ + ": asymmetric adjacency " + describe(key) +
                              " -> " + describe(other) + " without " + describe(other) +
                              " -> " + describe(key));
      }
    }
  }
}

std::vector<double> default_row_offsets(std::size_t row_count) {
  static const std::vector<double> kStagger = {0.0, 0.5, 0.75, 1.25};
  std::vector<double> out;
  for (std::size_t i = 0; i < row_count; ++i) {
    out.push_back(i < kStagger.size() ? kStagger[i] : kStagger.back() + 0.5 * (i - 3));
  }
  return out;
}

KeyboardLayout KeyboardLayout::from_rows(std::string name, Language language,
                                         const std::vector<std::vector<std::string>>& rows,
                                         const std::vector<double>& row_offsets) {
  if (rows.empty()) throw ValidationError("layout " + name + " has no rows");
  if (row_offsets.size() != rows.size()) {
    throw ValidationError("layout " + name + ": row_offsets must have one entry per row");
  }
  std::vector<std::vector<char32_t>> keys(rows.size());
  std::set<char32_t> seen;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& key : rows[r]) {
      const char32_t c = single_key(key);
      if (!seen.insert(c).second) {
        throw ValidationError("layout " + name + ": key " + describe(c) + " appears twice");
      }
      keys[r].push_back(c);
    }
  }
  Adjacency adjacency;
  for (std::size_t r = 0; r < keys.size(); ++r) {
    for (std::size_t i = 0; i < keys[r].size(); ++i) {
      auto& set = adjacency[keys[r][i]];
      if (i > 0) set.insert(keys[r][i - 1]);
      if (i + 1 < keys[r].size()) set.insert(keys[r][i + 1]);
      const double x = row_offsets[r] + static_cast<double>(i);
      for (std::size_t other : {r - 1, r + 1}) {
        if (other >= keys.size()) continue;  // wraps for r == 0
        for (std::size_t j = 0; j < keys[other].size(); ++j) {
          const double ox = row_offsets[other] + static_cast<double>(j);
          if (std::abs(ox - x) < kAdjacentRowReach) set.insert(keys[other][j]);
        }
      }
    }
  }
  return KeyboardLayout(std::move(name), language, std::move(adjacency));
}

const std::set<char32_t>& KeyboardLayout::neighbours(char32_t key) const {
  static const std::set<char32_t> kNone;
  auto it = adjacency_.find(key);
  return it == adjacency_.end() ? kNone : it->second;
}

bool KeyboardLayout::substitutable(char32_t c) const { return !replacements(c, *this).empty(); }

KeyboardLayout parse_layout_json(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("layout file is not valid JSON: ") + e.what());
  }
  try {
    std::string name = doc.at("name").get<std::string>();
    const Language language = language_from_code(doc.at("language").get<std::string>());
    if (doc.contains("adjacency")) {
      KeyboardLayout::Adjacency adjacency;
      for (const auto& [key, list] : doc["adjacency"].items()) {
        auto& set = adjacency[single_key(key)];
        for (const auto& n : list) set.insert(single_key(n.get<std::string>()));
      }
      return KeyboardLayout(std::move(name), language, std::move(adjacency));
    }
    const auto rows = doc.at("rows").get<std::vector<std::vector<std::string>>>();
    const auto offsets = doc.contains("row_offsets")
                             ? doc["row_offsets"].get<std::vector<double>>()
                             : default_row_offsets(rows.size());
    return KeyboardLayout::from_rows(std::move(name), language, rows, offsets);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("layout schema violation: ") + e.what());
  }
}

KeyboardLayout load_layout_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open layout file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_layout_json(text.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path.filename().string() + ": " + e.what());
  }
}

std::filesystem::path layout_directory() {
  if (const char* env = std::getenv("WIKITYPER_LAYOUT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return std::filesystem::path(WIKITYPER_DATA_DIR) / "layouts";
}

std::vector<std::string> available_layouts(const std::filesystem::path& dir) {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.path().extension() == ".json") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

KeyboardLayout load_layout(std::string_view name, const std::filesystem::path& dir) {
  const auto names = available_layouts(dir);
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw ValidationError("unknown layout '" + std::string(name) + "'; available: " +
                          (list.empty() ? "(none in " + dir.string() + ")" : list));
  }
  return load_layout_file(dir / (std::string(name) + ".json"));
}

std::string default_layout_for(Language language) {
  switch (language) {
    case Language::kEn: return "qwerty-en";
    case Language::kDe: return "qwertz-de";
    case Language::kEs: return "qwerty-es";
    case Language::kFr: return "azerty-fr";
    case Language::kTr: return "qwerty-tr";
    case Language::kHi: return "inscript-hi";
  }
  return "qwerty-en";
}

std::string keyboard_perturb(std::string_view word, const KeyboardLayout& layout, Rng& rng) {
  std::u32string cps = nfc_code_points(word);
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    if (layout.substitutable(cps[i])) positions.push_back(i);
  }
  if (positions.empty()) return std::string(word);
  const std::size_t pos = positions[rng.below(positions.size())];
  const auto options = replacements(cps[pos], layout);
  cps[pos] = options[rng.below(options.size())];
  return encode_utf8(cps);
}

}  // namespace wikityper
