#include "wikityper/wikitext.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>

namespace wikityper {
namespace {

using std::size_t;

bool starts_with_at(std::string_view s, size_t pos, std::string_view prefix) {
  return s.size() >= pos + prefix.size() && s.compare(pos, prefix.size(), prefix) == 0;
}

bool iequals_prefix(std::string_view s, size_t pos, std::string_view prefix) {
  if (s.size() < pos + prefix.size()) return false;
  for (size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[pos + i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i]))) {
      return false;
    }
  }
  return true;
}

// Position one past the matching close delimiter, honouring nesting of the
// same pair; nullopt when unbalanced.
std::optional<size_t> match_nested(std::string_view s, size_t pos, std::string_view open,
                                   std::string_view close) {
  int depth = 0;
  size_t i = pos;
  while (i < s.size()) {
    if (starts_with_at(s, i, open)) {
      ++depth;
      i += open.size();
    } else if (starts_with_at(s, i, close)) {
      --depth;
      i += close.size();
      if (depth == 0) return i;
    } else {
      ++i;
    }
  }
  return std::nullopt;
}

// Namespaces whose links render as media or page metadata, not running text.
constexpr std::array<std::string_view, 20> kDroppedLinkPrefixes = {
    "file:",      "image:",    "category:", "media:",      "datei:",
    "bild:",      "kategorie:", "fichier:", "catégorie:",  "archivo:",
    "imagen:",    "categoría:", "dosya:",   "resim:",      "kategori:",
    "चित्र:",      "श्रेणी:",     "wikt:",    "wiktionary:", "commons:"};

bool is_dropped_link(std::string_view target) {
  size_t start = 0;
  while (start < target.size() && target[start] == ' ') ++start;
  for (auto prefix : kDroppedLinkPrefixes) {
    if (iequals_prefix(target, start, prefix)) return true;
  }
  return false;
}

// Splits link contents at top-level pipes (nested [[ ]] and {{ }} are opaque).
std::string_view link_label(std::string_view inner) {
  int depth = 0;
  size_t last_pipe = std::string_view::npos;
  for (size_t i = 0; i < inner.size(); ++i) {
    if (starts_with_at(inner, i, "[[") || starts_with_at(inner, i, "{{")) {
      ++depth;
      ++i;
    } else if (starts_with_at(inner, i, "]]") || starts_with_at(inner, i, "}}")) {
      --depth;
      ++i;
    } else if (inner[i] == '|' && depth == 0 && last_pipe == std::string_view::npos) {
      last_pipe = i;
    }
  }
  if (last_pipe == std::string_view::npos) return inner;
  return inner.substr(last_pipe + 1);
}

bool is_url_start(std::string_view s, size_t pos) {
  for (std::string_view scheme : {"http://", "https://", "ftp://", "//", "mailto:"}) {
    if (iequals_prefix(s, pos, scheme)) return true;
  }
  return false;
}

// Length of an HTML-ish tag at pos ("<b>", "</span>", "<br />"), 0 if none.
size_t tag_length(std::string_view s, size_t pos) {
  size_t i = pos + 1;
  if (i < s.size() && s[i] == '/') ++i;
  if (i >= s.size() || !std::isalpha(static_cast<unsigned char>(s[i]))) return 0;
  while (i < s.size() && s[i] != '>' && s[i] != '<' && s[i] != '\n') ++i;
  if (i >= s.size() || s[i] != '>') return 0;
  return i + 1 - pos;
}

// "<ref ...>...</ref>" or "<ref .../>"; 0 when not a (closed) ref.
size_t ref_length(std::string_view s, size_t pos) {
  if (!iequals_prefix(s, pos, "<ref")) return 0;
  const size_t after = pos + 4;
  if (after >= s.size() || !(s[after] == '>' || s[after] == ' ' || s[after] == '/')) return 0;
  const size_t open_len = tag_length(s, pos);
  if (open_len == 0) return 0;
  if (s[pos + open_len - 2] == '/') return open_len;
  for (size_t i = pos + open_len; i + 6 <= s.size(); ++i) {
    if (iequals_prefix(s, i, "</ref>")) return i + 6 - pos;
  }
  return 0;
}

// "__TOC__"-style behaviour switches.
size_t magic_word_length(std::string_view s, size_t pos) {
  if (!starts_with_at(s, pos, "__")) return 0;
  size_t i = pos + 2;
  while (i < s.size() && std::isupper(static_cast<unsigned char>(s[i]))) ++i;
  if (i == pos + 2 || !starts_with_at(s, i, "__")) return 0;
  return i + 2 - pos;
}

std::string strip_line_markers(std::string_view line) {
  size_t begin = 0;
  while (begin < line.size() && (line[begin] == '*' || line[begin] == '#' ||
                                 line[begin] == ':' || line[begin] == ';')) {
    ++begin;
  }
  std::string_view rest = line.substr(begin);
  if (rest.size() >= 2 && rest.front() == '=' && rest.back() == '=') {
    size_t l = 0, r = rest.size();
    while (l < r && rest[l] == '=') ++l;
    while (r > l && rest[r - 1] == '=') --r;
    rest = rest.substr(l, r - l);
  }
  return std::string(rest);
}

std::string strip_inline(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '<') {
      if (starts_with_at(s, i, "<!--")) {
        const size_t end = s.find("-->", i + 4);
        if (end != std::string_view::npos) {
          i = end + 3;
          continue;
        }
      }
      if (size_t n = ref_length(s, i)) {
        i += n;
        continue;
      }
      if (size_t n = tag_length(s, i)) {
        i += n;
        continue;
      }
    } else if (c == '{' && i + 1 < s.size() && (s[i + 1] == '{' || s[i + 1] == '|')) {
      const auto end = s[i + 1] == '{' ? match_nested(s, i, "{{", "}}")
                                       : match_nested(s, i, "{|", "|}");
      if (end) {
        i = *end;
        continue;
      }
    } else if (c == '[' && starts_with_at(s, i, "[[")) {
      if (auto end = match_nested(s, i, "[[", "]]")) {
        std::string_view inner = s.substr(i + 2, *end - i - 4);
        if (!is_dropped_link(inner)) {
          std::string_view label = link_label(inner);
          if (!label.empty() && label.front() == ':') label.remove_prefix(1);
          out.append(label);
        }
        i = *end;
        continue;
      }
    } else if (c == '[' && is_url_start(s, i + 1)) {
      const size_t close = s.find(']', i + 1);
      const size_t newline = s.find('\n', i + 1);
      if (close != std::string_view::npos && close < newline) {
        std::string_view inner = s.substr(i + 1, close - i - 1);
        const size_t space = inner.find(' ');
        if (space != std::string_view::npos) out.append(inner.substr(space + 1));
        i = close + 1;
        continue;
      }
    } else if (c == '\'' && starts_with_at(s, i, "''")) {
      i += starts_with_at(s, i, "'''") ? 3 : 2;
      continue;
    } else if (c == '_') {
      if (size_t n = magic_word_length(s, i)) {
        i += n;
        continue;
      }
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

std::string strip_once(std::string_view raw) {
  std::string lines;
  lines.reserve(raw.size());
  size_t start = 0;
  while (start <= raw.size()) {
    size_t end = raw.find('\n', start);
    if (end == std::string_view::npos) end = raw.size();
    lines += strip_line_markers(raw.substr(start, end - start));
    if (end == raw.size()) break;
    lines.push_back('\n');
    start = end + 1;
  }
  return strip_inline(lines);
}

}  // namespace

std::string strip_markup(std::string_view raw) {
  // Every rule deletes at least one character when it fires, so iterating to
  // the fixed point terminates and makes the function idempotent.
  std::string current(raw);
  while (true) {
    std::string next = strip_once(current);
    if (next == current) return current;
    current = std::move(next);
  }
}

}  // namespace wikityper
