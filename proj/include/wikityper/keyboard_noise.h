#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "wikityper/rng.h"
#include "wikityper/textcore.h"

namespace wikityper {

// Immutable key-proximity table. Adjacency is symmetric and irreflexive.
class KeyboardLayout {
 public:
  using Adjacency = std::map<char32_t, std::set<char32_t>>;

  // Throws ValidationError naming the first offending pair.
  KeyboardLayout(std::string name, Language language, Adjacency adjacency);

  // Keys in each row are laid out one unit apart, shifted right by the row's
  // offset. Same-row left/right neighbours are adjacent, as are keys in the
  // rows directly above/below whose centres lie less than 1.5 units away (the
  // three nearest keys for a staggered row).
  static KeyboardLayout from_rows(std::string name, Language language,
                                  const std::vector<std::vector<std::string>>& rows,
                                  const std::vector<double>& row_offsets);

  const std::string& name() const { return name_; }
  Language language() const { return language_; }
  const Adjacency& adjacency() const { return adjacency_; }

  bool contains(char32_t key) const { return adjacency_.count(key) > 0; }
  // Neighbours of a lowercase key; empty when the key is not on the layout.
  const std::set<char32_t>& neighbours(char32_t key) const;
  // The code point itself or its lowercase form is on the layout.
  bool substitutable(char32_t c) const;

 private:
  std::string name_;
  Language language_;
  Adjacency adjacency_;
};

// Default stagger, in key widths, for rows listed top (digits) to bottom.
std::vector<double> default_row_offsets(std::size_t row_count);

// Schema: {"name": str, "language": str, "rows": [[key, ...], ...]} with
// optional "row_offsets": [number, ...] or an explicit "adjacency":
// {key: [key, ...]} that replaces the geometry-derived table.
KeyboardLayout parse_layout_json(std::string_view json_text);
KeyboardLayout load_layout_file(const std::filesystem::path& path);

// Layout search path: WIKITYPER_LAYOUT_DIR, then the shipped data directory.
std::filesystem::path layout_directory();
std::vector<std::string> available_layouts(const std::filesystem::path& dir = layout_directory());
// Throws ValidationError listing available layouts for an unknown name.
KeyboardLayout load_layout(std::string_view name,
                           const std::filesystem::path& dir = layout_directory());
std::string default_layout_for(Language language);

// Replaces exactly one substitutable position with a uniformly drawn
// neighbour; positions are drawn uniformly among substitutable ones.
// Uppercase keys go through their lowercase neighbours and are re-uppercased.
// Words with no substitutable character come back unchanged.
std::string keyboard_perturb(std::string_view word, const KeyboardLayout& layout, Rng& rng);

}  // namespace wikityper
