#include "sublens/corpus.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sublens/errors.hpp"
#include "sublens/tokenizer.hpp"

namespace sublens {

bool lemma_matches(std::string_view token, std::string_view lemma) {
  std::string t = normalize_text(token);
  while (!t.empty() && is_ascii_punctuation(t.back())) t.pop_back();
  return !t.empty() && t == normalize_text(lemma);
}

namespace {

std::string check_one(const std::string& lemma, const std::string& sentence, std::size_t index, const char* which) {
  const auto words = split_whitespace(sentence);
  if (words.empty()) return std::string(which) + " is empty";
  if (index >= words.size()) {
    return std::string(which) + " index " + std::to_string(index) + " out of range (" + std::to_string(words.size()) +
           " words)";
  }
  if (!lemma_matches(words[index], lemma)) {
    return std::string(which) + " word " + std::to_string(index) + " is '" + words[index] + "', not '" + lemma + "'";
  }
  return {};
}

}  // namespace

std::string validate_sample(const WordPairSample& s) {
  if (split_whitespace(s.word).size() != 1) return "word must be a single non-empty token";
  if (auto e = check_one(s.word, s.sentence1, s.index1, "s1"); !e.empty()) return e;
  return check_one(s.word, s.sentence2, s.index2, "s2");
}

Corpus parse_corpus(std::string_view jsonl, std::string name) {
  Corpus corpus;
  corpus.name = std::move(name);
  std::vector<std::string> problems;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object()) {
        problems.push_back(where + "not a JSON object");
        continue;
      }
      WordPairSample s;
      s.word = j.at("word").get<std::string>();
      s.sentence1 = j.at("s1").get<std::string>();
      s.sentence2 = j.at("s2").get<std::string>();
      s.index1 = j.at("i1").get<std::size_t>();
      s.index2 = j.at("i2").get<std::size_t>();
      if (j.contains("sense1")) s.sense1 = j.at("sense1").get<std::string>();
      if (j.contains("sense2")) s.sense2 = j.at("sense2").get<std::string>();
      if (auto e = validate_sample(s); !e.empty()) {
        problems.push_back(where + e);
        continue;
      }
      corpus.samples.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      problems.push_back(where + "malformed sample: " + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "corpus " + corpus.name + " failed validation:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw CorpusError(msg);
  }
  if (corpus.samples.empty()) throw EmptyCorpusError("corpus " + corpus.name + " contains no samples");
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open corpus file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  Corpus c = parse_corpus(ss.str(), path.stem().string());
  c.source_note = "file:" + path.filename().string();
  return c;
}

Corpus resolve_corpus(const std::string& path_or_builtin) {
  if (path_or_builtin == "builtin") return builtin_sample_corpus();
  return load_corpus(path_or_builtin);
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& s : corpus.samples) {
    nlohmann::ordered_json j = {{"word", s.word}, {"s1", s.sentence1}, {"s2", s.sentence2}, {"i1", s.index1},
                                {"i2", s.index2}};
    if (s.sense1) j["sense1"] = *s.sense1;
    if (s.sense2) j["sense2"] = *s.sense2;
    out += j.dump() + "\n";
  }
  return out;
}

Corpus builtin_sample_corpus() {
  struct Row {
    const char* word;
    const char* s1;
    const char* sense1;
    const char* s2;
    const char* sense2;
  };
  static constexpr Row kRows[] = {
      {"bank", "The bank approved the loan this morning.", "financial institution",
       "The bank of the river was covered in reeds.", "riverside"},
      {"bat", "The bat flew out of the cave at dusk.", "animal", "The bat cracked when he hit the ball.",
       "sports equipment"},
      {"spring", "The spring rain filled the garden with flowers.", "season",
       "The spring in the old mattress snapped.", "coil"},
      {"bark", "The bark of the oak tree was rough.", "tree covering", "The bark of the dog woke the neighbors.",
       "dog sound"},
      {"crane", "The crane lifted steel beams onto the roof.", "machine",
       "The crane waded through the marsh looking for fish.", "bird"},
      {"seal", "The seal rested on the rocks near the shore.", "animal", "The seal on the envelope was broken.",
       "closure"},
      {"match", "The match was postponed because of the storm.", "contest",
       "The match burned out before the candle was lit.", "fire stick"},
      {"mouse", "The mouse stopped working after I spilled coffee on it.", "computer device",
       "The mouse ate the cheese in the kitchen.", "animal"},
      {"pupil", "The pupil handed in her homework late.", "student", "The pupil of the eye shrinks in bright light.",
       "eye part"},
      {"organ", "The organ played loudly during the wedding.", "instrument",
       "The organ was transplanted into the patient.", "body part"},
      {"ruler", "The ruler governed the kingdom for forty years.", "sovereign",
       "The ruler was too short to measure the table.", "measuring stick"},
      {"club", "The club meets every thursday evening.", "association", "The club was made of heavy oak.", "weapon"},
      {"plant", "The plant needs water and sunlight.", "organism", "The plant produces thousands of cars each year.",
       "factory"},
      {"letter", "The letter arrived two weeks late.", "message", "The letter a is the first in the alphabet.",
       "character"},
  };
  Corpus c;
  c.name = "builtin";
  c.source_note = "hand-written fixed-template sample; target at word index 1 after 'The'";
  for (const auto& r : kRows) c.samples.push_back({r.word, r.s1, r.s2, 1, 1, r.sense1, r.sense2});
  return c;
}

}  // namespace sublens
