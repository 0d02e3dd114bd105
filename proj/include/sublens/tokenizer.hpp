#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sublens {

using TokenId = std::int32_t;

// Uncased WordPiece vocabulary; line number in the vocab file is the id.
class Vocab {
 public:
  static Vocab from_tokens(std::vector<std::string> tokens);
  static Vocab load(const std::filesystem::path& path);

  std::size_t size() const noexcept { return tokens_.size(); }
  bool contains(std::string_view token) const;
  TokenId id(std::string_view token) const;  // throws IndexError when absent
  const std::string& token(TokenId id) const;

  TokenId cls() const noexcept { return cls_; }
  TokenId sep() const noexcept { return sep_; }
  TokenId unk() const noexcept { return unk_; }
  TokenId pad() const noexcept { return pad_; }

  bool is_special(TokenId id) const noexcept { return id == cls_ || id == sep_ || id == pad_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  TokenId cls_ = -1, sep_ = -1, unk_ = -1, pad_ = -1;
};

// Half-open subword range. `begin/end` cover everything the whitespace word
// produced; `lexical_*` drop pieces that are pure punctuation (e.g. the
// trailing comma of "bank,"), and equal begin/end when nothing remains.
struct WordSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t lexical_begin = 0;
  std::size_t lexical_end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const WordSpan&) const = default;
};

struct SubwordRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const SubwordRange&) const = default;
};

struct TokenizedSentence {
  std::vector<TokenId> token_ids;    // [CLS] ... [SEP]
  std::vector<std::string> words;    // whitespace words of the input
  std::vector<WordSpan> word_spans;  // one per entry of `words`
  std::size_t unk_count = 0;

  bool range_has_unk(SubwordRange r, TokenId unk) const;
};

/// Lowercase and strip accents (Latin-1 / Latin Extended-A precomposed
/// letters plus combining marks U+0300..U+036F).
std::string normalize_text(std::string_view text);

/// Splits one normalised whitespace word into pieces, isolating each ASCII
/// punctuation character.
std::vector<std::string> split_punctuation(std::string_view word);

bool is_ascii_punctuation(char c) noexcept;

/// Greedy longest-match-first WordPiece. Continuation pieces carry "##".
/// Words with no full decomposition (or longer than 100 bytes) map to [UNK].
std::vector<TokenId> tokenize_word(const Vocab& vocab, std::string_view word);

/// Normalise, split on whitespace, isolate punctuation, WordPiece each piece
/// and wrap with [CLS]/[SEP]. Throws LengthError for an empty sentence or
/// when the result exceeds max_tokens.
TokenizedSentence encode_sentence(const Vocab& vocab, std::string_view sentence,
                                  std::size_t max_tokens);

/// Subword range of whitespace word `word_index`, trimmed of pure
/// punctuation pieces. Throws IndexError when out of range.
SubwordRange target_span(const TokenizedSentence& ts, std::size_t word_index);

/// Splits on ASCII whitespace.
std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace sublens
