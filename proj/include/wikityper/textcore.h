#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wikityper {

enum class Language { kEn, kDe, kEs, kFr, kHi, kTr };

std::string_view to_string(Language lang);
std::optional<Language> parse_language(std::string_view code);
// Throws ValidationError naming the supported codes.
Language language_from_code(std::string_view code);
const std::vector<Language>& all_languages();

// A non-empty surface form in a given language edition.
class Word {
 public:
  Word(std::string surface, Language language);

  const std::string& surface() const { return surface_; }
  Language language() const { return language_; }

 private:
  std::string surface_;
  Language language_;
};

struct TokenizedSentence {
  std::vector<std::string> tokens;

  std::string join() const;
  bool operator==(const TokenizedSentence&) const = default;
};

// UTF-8 <-> code points. Invalid UTF-8 sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view text);
std::string encode_utf8(std::u32string_view code_points);

std::string nfc(std::string_view text);
// NFC-normalised code points; the unit every character count in the toolkit uses.
std::u32string nfc_code_points(std::string_view text);
std::size_t char_length(std::string_view text);

bool is_letter(char32_t c);
bool is_combining_mark(char32_t c);
bool is_whitespace(char32_t c);

// Single-code-point case mapping. Never changes string length.
char32_t simple_lower(char32_t c, Language lang);
char32_t simple_upper(char32_t c, Language lang);
bool is_upper(char32_t c);
std::string lower_case(std::string_view text, Language lang);

// Unit-cost edit distance over NFC code points; a transposition costs 2.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
std::size_t levenshtein(std::string_view a, std::string_view b);

// Letters only (a combining mark may follow a letter), at least two characters.
bool is_dictionary_eligible(std::string_view surface);
bool is_dictionary_eligible(const Word& word);

// Splits on runs of Unicode whitespace. No punctuation splitting.
TokenizedSentence tokenize(std::string_view text);

struct TokenSpan {
  std::size_t offset = 0;  // bytes
  std::size_t length = 0;
};
// Byte ranges of the tokens tokenize() returns, in order.
std::vector<TokenSpan> token_spans(std::string_view text);

}  // namespace wikityper
