#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sublens {

// One polysemous word in two sentences. Indices are whitespace-word indices.
struct WordPairSample {
  std::string word;
  std::string sentence1;
  std::string sentence2;
  std::size_t index1 = 0;
  std::size_t index2 = 0;
  std::optional<std::string> sense1;
  std::optional<std::string> sense2;

  bool operator==(const WordPairSample&) const = default;
};

struct Corpus {
  std::string name;
  std::string source_note;
  std::vector<WordPairSample> samples;

  bool operator==(const Corpus&) const = default;
};

/// Case-insensitive, accent-insensitive match of `token` against `lemma`
/// after stripping trailing ASCII punctuation from the token.
bool lemma_matches(std::string_view token, std::string_view lemma);

/// Empty string when valid, otherwise a description of the problem.
std::string validate_sample(const WordPairSample& s);

/// Parses JSONL with fields word, s1, s2, i1, i2 and optional sense1, sense2.
/// Blank lines are ignored. All problems are collected and reported together
/// as "line N: ..." in a CorpusError; an input without samples raises
/// EmptyCorpusError.
Corpus parse_corpus(std::string_view jsonl, std::string name);
Corpus load_corpus(const std::filesystem::path& path);

/// "builtin" selects builtin_sample_corpus(), anything else is a path.
Corpus resolve_corpus(const std::string& path_or_builtin);

std::string serialize_corpus(const Corpus& corpus);

/// Small hand-written corpus of classic polysemous nouns, each in the
/// "The <word> ..." template so the target is word 1 of both sentences.
Corpus builtin_sample_corpus();

}  // namespace sublens
