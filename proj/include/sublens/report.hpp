#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sublens/corpus.hpp"
#include "sublens/encoder.hpp"
#include "sublens/metrics.hpp"
#include "sublens/model.hpp"
#include "sublens/tokenizer.hpp"

namespace sublens {

std::string tool_version();

struct RunManifest {
  std::string tool_version;
  std::string weights_sha256;
  TapPointSpec taps;
  std::string corpus_name;
  std::string corpus_source;
  std::size_t num_layers = 0;
  std::size_t sample_count = 0;
  std::size_t processed_count = 0;
  std::size_t flagged_count = 0;
  std::vector<SubLayerKind> kinds;

  /// Fixed key order; includes every interpretation choice made by the tool.
  nlohmann::ordered_json to_json() const;
};

struct SampleOutcome {
  std::size_t index = 0;
  std::string word;
  std::optional<PairMetrics> metrics;  // empty when flagged
  std::string flag_reason;
  std::vector<std::string> warnings;

  bool flagged() const noexcept { return !metrics.has_value(); }
};

/// Tokenise both sentences, run the probe and compute metrics for one
/// sample. Per-sample failures (unknown target word, degenerate vectors,
/// over-long sentences, numeric errors) flag the sample instead of throwing.
SampleOutcome process_sample(const LoadedModel& model, const Vocab& vocab, const WordPairSample& sample,
                             std::size_t index, const TapPointSpec& taps, std::span<const SubLayerKind> kinds);

/// Processes every sample, using up to `jobs` threads; results are in corpus order.
std::vector<SampleOutcome> analyze_corpus(const LoadedModel& model, const Vocab& vocab, const Corpus& corpus,
                                          const TapPointSpec& taps, std::span<const SubLayerKind> kinds,
                                          std::size_t jobs = 1);

std::string layerwise_csv(const CorpusAggregate& agg, const RunManifest& manifest);
nlohmann::ordered_json aggregate_json(const std::optional<CorpusAggregate>& agg, const RunManifest& manifest,
                                      const std::vector<SampleOutcome>& outcomes);
std::string words_jsonl(const std::vector<SampleOutcome>& outcomes, const RunManifest& manifest);

struct BiplotLabels {
  std::string word;
  std::string kind;
  std::size_t num_layers = 0;         // rows 0..L-1 are sentence 1, L..2L-1 sentence 2
  std::vector<double> explained_variance;
  std::string manifest_comment;       // embedded verbatim as an XML comment
};

/// Deterministic scatter of the projected points: circles for sentence 1,
/// squares for sentence 2, each annotated with its 1-based layer number.
/// Each axis is scaled independently; an axis with no spread maps to the
/// canvas centre.
std::string emit_biplot_svg(const MatrixD& projection, const BiplotLabels& labels);

/// Filesystem-safe stem for a word.
std::string sanitize_filename(const std::string& word);

struct RunOptions {
  std::filesystem::path weights;
  std::filesystem::path vocab;
  std::string corpus = "builtin";
  std::filesystem::path out_dir;
  TapPointSpec taps;
  std::vector<SubLayerKind> kinds = {kAllKinds.begin(), kAllKinds.end()};
  bool svg = false;
  std::size_t jobs = 1;
};

/// Full pipeline. Returns 0 on success, 2 when every sample was flagged.
/// Load and validation failures propagate as sublens::Error.
int run_analysis(const RunOptions& options);

/// Command-line entry point; returns the process exit code (0, 1 or 2).
int run_cli(const std::vector<std::string>& args);

}  // namespace sublens
