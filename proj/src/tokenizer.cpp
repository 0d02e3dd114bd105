#include "sublens/tokenizer.hpp"

#include <algorithm>
#include <fstream>

#include "sublens/errors.hpp"

namespace sublens {

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    auto [it, inserted] = v.ids_.emplace(v.tokens_[i], static_cast<TokenId>(i));
    if (!inserted) throw LoadError("duplicate vocab token '" + v.tokens_[i] + "' at line " + std::to_string(i + 1));
  }
  auto special = [&](const char* name) {
    auto it = v.ids_.find(name);
    if (it == v.ids_.end()) throw LoadError(std::string("vocab is missing special token ") + name);
    return it->second;
  };
  v.cls_ = special("[CLS]");
  v.sep_ = special("[SEP]");
  v.unk_ = special("[UNK]");
  v.pad_ = special("[PAD]");
  return v;
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open vocab file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  if (tokens.empty()) throw LoadError("vocab file " + path.string() + " is empty");
  return from_tokens(std::move(tokens));
}

bool Vocab::contains(std::string_view token) const { return ids_.find(std::string(token)) != ids_.end(); }

TokenId Vocab::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) throw IndexError("token '" + std::string(token) + "' not in vocab");
  return it->second;
}

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw IndexError("token id " + std::to_string(id) + " outside vocab of size " + std::to_string(tokens_.size()));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool TokenizedSentence::range_has_unk(SubwordRange r, TokenId unk) const {
  return std::any_of(token_ids.begin() + static_cast<std::ptrdiff_t>(r.begin),
                     token_ids.begin() + static_cast<std::ptrdiff_t>(r.end),
                     [unk](TokenId t) { return t == unk; });
}

namespace {

// Base letters for U+00C0..U+00FF; 0 keeps the code point as is.
constexpr char kLatin1Base[64] = {
    'a', 'a', 'a', 'a', 'a', 'a', 0,   'c', 'e', 'e', 'e', 'e', 'i', 'i', 'i', 'i',
    0,   'n', 'o', 'o', 'o', 'o', 'o', 0,   0,   'u', 'u', 'u', 'u', 'y', 0,   0,
    'a', 'a', 'a', 'a', 'a', 'a', 0,   'c', 'e', 'e', 'e', 'e', 'i', 'i', 'i', 'i',
    0,   'n', 'o', 'o', 'o', 'o', 'o', 0,   0,   'u', 'u', 'u', 'u', 'y', 0,   'y'};

// Base letters for U+0100..U+017F (pairs of upper/lower case).
constexpr char kLatinExtA[] =
    "aaaaaaccccccccddddeeeeeeeeeegggggggghhhhiiiiiiiiii\0\0jjkkkllllllllllnnnnnnnnnoooooo\0\0rrrrrrssssssssttttttuuuuuuuuuuuuwwyyyzzzzzz\0";
static_assert(sizeof(kLatinExtA) == 0x80 + 1);

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

// Decodes one code point; malformed bytes are passed through as themselves.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](std::size_t k) { return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80; };
  auto bits = [&](std::size_t k) { return static_cast<char32_t>(static_cast<unsigned char>(s[i + k]) & 0x3F); };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    char32_t cp = (static_cast<char32_t>(b0 & 0x1F) << 6) | bits(1);
    i += 2;
    return cp;
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    char32_t cp = (static_cast<char32_t>(b0 & 0x0F) << 12) | (bits(1) << 6) | bits(2);
    i += 3;
    return cp;
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    char32_t cp = (static_cast<char32_t>(b0 & 0x07) << 18) | (bits(1) << 12) | (bits(2) << 6) | bits(3);
    i += 4;
    return cp;
  }
  ++i;
  return b0;
}

bool is_ascii_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

constexpr std::size_t kMaxCharsPerWord = 100;

}  // namespace

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) {
    const char32_t cp = next_code_point(text, i);
    if (cp >= 'A' && cp <= 'Z') {
      out += static_cast<char>(cp - 'A' + 'a');
    } else if (cp >= 0x300 && cp <= 0x36F) {
      // combining mark: dropped
    } else if (cp >= 0xC0 && cp <= 0xFF && kLatin1Base[cp - 0xC0] != 0) {
      out += kLatin1Base[cp - 0xC0];
    } else if (cp >= 0x100 && cp <= 0x17F && kLatinExtA[cp - 0x100] != 0) {
      out += kLatinExtA[cp - 0x100];
    } else if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) {
      append_utf8(out, cp + 0x20);  // remaining Latin-1 capitals (AE, eth, thorn...)
    } else {
      append_utf8(out, cp);
    }
  }
  return out;
}

bool is_ascii_punctuation(char c) noexcept {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 33 && u <= 47) || (u >= 58 && u <= 64) || (u >= 91 && u <= 96) || (u >= 123 && u <= 126);
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_ascii_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_ascii_space(text[j])) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> split_punctuation(std::string_view word) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : word) {
    if (is_ascii_punctuation(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
      out.emplace_back(1, c);
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<TokenId> tokenize_word(const Vocab& vocab, std::string_view word) {
  if (word.empty() || word.size() > kMaxCharsPerWord) return {vocab.unk()};
  std::vector<TokenId> out;
  std::size_t start = 0;
  std::string candidate;
  while (start < word.size()) {
    std::size_t end = word.size();
    TokenId found = -1;
    while (end > start) {
      candidate.assign(start > 0 ? "##" : "");
      candidate.append(word.substr(start, end - start));
      if (vocab.contains(candidate)) {
        found = vocab.id(candidate);
        break;
      }
      --end;
      // never split inside a UTF-8 sequence
      while (end > start && (static_cast<unsigned char>(word[end]) & 0xC0) == 0x80) --end;
    }
    if (found < 0) return {vocab.unk()};
    out.push_back(found);
    start = end;
  }
  return out;
}

TokenizedSentence encode_sentence(const Vocab& vocab, std::string_view sentence, std::size_t max_tokens) {
  TokenizedSentence ts;
  ts.words = split_whitespace(sentence);
  if (ts.words.empty()) throw LengthError("cannot encode an empty sentence");

  ts.token_ids.push_back(vocab.cls());
  for (const auto& word : ts.words) {
    WordSpan span;
    span.begin = ts.token_ids.size();
    bool seen_lexical = false;
    for (const auto& piece : split_punctuation(normalize_text(word))) {
      const auto ids = tokenize_word(vocab, piece);
      const bool punct = piece.size() == 1 && is_ascii_punctuation(piece[0]);
      if (!punct) {
        if (!seen_lexical) span.lexical_begin = ts.token_ids.size();
        seen_lexical = true;
      }
      for (TokenId id : ids) {
        if (id == vocab.unk()) ++ts.unk_count;
        ts.token_ids.push_back(id);
      }
      if (!punct) span.lexical_end = ts.token_ids.size();
    }
    span.end = ts.token_ids.size();
    if (!seen_lexical) {
      span.lexical_begin = span.begin;
      span.lexical_end = span.end;
    }
    ts.word_spans.push_back(span);
  }
  ts.token_ids.push_back(vocab.sep());

  if (ts.token_ids.size() > max_tokens) {
    throw LengthError("sentence encodes to " + std::to_string(ts.token_ids.size()) +
                      " tokens, exceeding the maximum of " + std::to_string(max_tokens));
  }
  return ts;
}

SubwordRange target_span(const TokenizedSentence& ts, std::size_t word_index) {
  if (word_index >= ts.word_spans.size()) {
    throw IndexError("word index " + std::to_string(word_index) + " out of range for sentence with " +
                     std::to_string(ts.word_spans.size()) + " words");
  }
  const auto& s = ts.word_spans[word_index];
  return {s.lexical_begin, s.lexical_end};
}

}  // namespace sublens
