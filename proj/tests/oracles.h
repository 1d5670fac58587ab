#pragma once

// Reference implementations used only by tests. Deliberately naive.

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

// Plain recursion over suffixes, exponential in the input length.
inline std::size_t levenshtein(const std::u32string& a, std::size_t i, const std::u32string& b,
                               std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  const std::size_t sub = levenshtein(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
  const std::size_t del = levenshtein(a, i + 1, b, j) + 1;
  const std::size_t ins = levenshtein(a, i, b, j + 1) + 1;
  return std::min({sub, del, ins});
}

inline std::size_t levenshtein(const std::u32string& a, const std::u32string& b) {
  return levenshtein(a, 0, b, 0);
}

using Span = std::tuple<std::size_t, std::string, std::size_t, std::size_t>;  // sentence, type, start, end

inline std::string type_of(const std::string& tag) { return tag == "O" ? "" : tag.substr(2); }

// Every (start, end) window is tested directly: it is an entity when its first
// tag opens a chunk of type T (B-T, or I-T not continuing a T chunk), every
// later tag is I-T, and the tag after it does not continue the chunk.
inline std::set<Span> chunks(const std::vector<std::string>& tags, std::size_t sentence) {
  std::set<Span> out;
  const std::size_t n = tags.size();
  for (std::size_t s = 0; s < n; ++s) {
    if (tags[s] == "O") continue;
    const std::string t = type_of(tags[s]);
    const bool opens = tags[s][0] == 'B' || s == 0 || type_of(tags[s - 1]) != t;
    if (!opens) continue;
    for (std::size_t e = s; e < n; ++e) {
      bool inside = true;
      for (std::size_t k = s + 1; k <= e; ++k) inside = inside && tags[k] == "I-" + t;
      const bool closed = e + 1 == n || tags[e + 1] != "I-" + t;
      if (inside && closed) out.insert({sentence, t, s, e});
    }
  }
  return out;
}

struct Prf {
  double p, r, f;
};

inline Prf entity_prf(const std::vector<std::vector<std::string>>& gold,
                      const std::vector<std::vector<std::string>>& pred) {
  std::set<Span> g, p;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto gi = chunks(gold[i], i);
    auto pi = chunks(pred[i], i);
    g.insert(gi.begin(), gi.end());
    p.insert(pi.begin(), pi.end());
  }
  std::size_t both = 0;
  for (const auto& s : p) both += g.count(s);
  const double prec = p.empty() ? 0.0 : 100.0 * both / p.size();
  const double rec = g.empty() ? 0.0 : 100.0 * both / g.size();
  const double f = prec + rec == 0.0 ? 0.0 : 2 * prec * rec / (prec + rec);
  return {prec, rec, f};
}

}  // namespace oracle
