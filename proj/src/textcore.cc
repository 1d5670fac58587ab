#include "wikityper/textcore.h"

#include <algorithm>
#include <array>
#include <numeric>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "wikityper/errors.h"

namespace wikityper {
namespace {

constexpr std::array<std::pair<Language, std::string_view>, 6> kLanguageCodes = {{
    {Language::kEn, "en"},
    {Language::kDe, "de"},
    {Language::kEs, "es"},
    {Language::kFr, "fr"},
    {Language::kHi, "hi"},
    {Language::kTr, "tr"},
}};

const icu::Normalizer2& nfc_normalizer() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || norm == nullptr) {
    throw Error("ICU NFC normaliser unavailable");
  }
  return *norm;
}

constexpr char32_t kDottedCapitalI = U'İ';
constexpr char32_t kDotlessSmallI = U'ı';

}  // namespace

std::string_view to_string(Language lang) {
  for (const auto& [l, code] : kLanguageCodes) {
    if (l == lang) return code;
  }
  return "??";
}

std::optional<Language> parse_language(std::string_view code) {
  for (const auto& [l, c] : kLanguageCodes) {
    if (c == code) return l;
  }
  return std::nullopt;
}

Language language_from_code(std::string_view code) {
  if (auto lang = parse_language(code)) return *lang;
  throw ValidationError("unknown language code '" + std::string(code) +
                        "' (expected one of en, de, es, fr, hi, tr)");
}

const std::vector<Language>& all_languages() {
  static const std::vector<Language> langs = [] {
    std::vector<Language> out;
    for (const auto& entry : kLanguageCodes) out.push_back(entry.first);
    return out;
  }();
  return langs;
}

Word::Word(std::string surface, Language language)
    : surface_(std::move(surface)), language_(language) {
  if (surface_.empty()) throw ValidationError("word surface must be non-empty");
}

std::string TokenizedSentence::join() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::u32string decode_utf8(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
  }
  return out;
}

std::string encode_utf8(std::u32string_view code_points) {
  std::string out;
  out.reserve(code_points.size());
  for (char32_t c : code_points) {
    uint8_t buf[U8_MAX_LENGTH];
    int32_t n = 0;
    UBool error = false;
    U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(c), error);
    if (error) {
      n = 0;
      U8_APPEND_UNSAFE(buf, n, 0xFFFD);
    }
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
  }
  return out;
}

std::string nfc(std::string_view text) {
  const auto& norm = nfc_normalizer();
  icu::UnicodeString src = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  UErrorCode status = U_ZERO_ERROR;
  if (norm.isNormalized(src, status) && U_SUCCESS(status)) {
    return std::string(text);
  }
  status = U_ZERO_ERROR;
  icu::UnicodeString normalized = norm.normalize(src, status);
  if (U_FAILURE(status)) return std::string(text);
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

std::u32string nfc_code_points(std::string_view text) {
  return decode_utf8(nfc(text));
}

std::size_t char_length(std::string_view text) {
  return nfc_code_points(text).size();
}

bool is_letter(char32_t c) { return u_isalpha(static_cast<UChar32>(c)); }

bool is_combining_mark(char32_t c) {
  const auto type = u_charType(static_cast<UChar32>(c));
  return type == U_NON_SPACING_MARK || type == U_COMBINING_SPACING_MARK;
}

bool is_whitespace(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

char32_t simple_lower(char32_t c, Language lang) {
  if (lang == Language::kTr) {
    if (c == U'I') return kDotlessSmallI;
    if (c == kDottedCapitalI) return U'i';
  }
  return static_cast<char32_t>(u_tolower(static_cast<UChar32>(c)));
}

char32_t simple_upper(char32_t c, Language lang) {
  if (lang == Language::kTr) {
    if (c == U'i') return kDottedCapitalI;
    if (c == kDotlessSmallI) return U'I';
  }
  return static_cast<char32_t>(u_toupper(static_cast<UChar32>(c)));
}

bool is_upper(char32_t c) { return u_isUUppercase(static_cast<UChar32>(c)); }

std::string lower_case(std::string_view text, Language lang) {
  std::u32string cps = decode_utf8(text);
  for (char32_t& c : cps) c = simple_lower(c, lang);
  return encode_utf8(cps);
}

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  // row[j] holds the distance between the current prefix of a and b[0, j).
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t substitute = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({above + 1, row[j - 1] + 1, substitute});
      diagonal = above;
    }
  }
  return row[b.size()];
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(nfc_code_points(a), nfc_code_points(b));
}

bool is_dictionary_eligible(std::string_view surface) {
  const std::u32string cps = nfc_code_points(surface);
  if (cps.size() < 2 || !is_letter(cps.front())) return false;
  return std::all_of(cps.begin() + 1, cps.end(), [](char32_t c) {
    return is_letter(c) || is_combining_mark(c);
  });
}

bool is_dictionary_eligible(const Word& word) {
  return is_dictionary_eligible(word.surface());
}

std::vector<TokenSpan> token_spans(std::string_view text) {
  std::vector<TokenSpan> spans;
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  int32_t token_start = -1;
  while (i < length) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    const bool space = c >= 0 && is_whitespace(static_cast<char32_t>(c));
    if (space) {
      if (token_start >= 0) {
        spans.push_back({static_cast<std::size_t>(token_start),
                         static_cast<std::size_t>(start - token_start)});
        token_start = -1;
      }
    } else if (token_start < 0) {
      token_start = start;
    }
  }
  if (token_start >= 0) {
    spans.push_back({static_cast<std::size_t>(token_start),
                     text.size() - static_cast<std::size_t>(token_start)});
  }
  return spans;
}

TokenizedSentence tokenize(std::string_view text) {
  TokenizedSentence out;
  for (const auto& span : token_spans(text)) {
    out.tokens.emplace_back(text.substr(span.offset, span.length));
  }
  return out;
}

}  // namespace wikityper
