#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sublens/encoder.hpp"
#include "sublens/tensor.hpp"

namespace sublens {

enum class SubLayerKind { kSa = 0, kActs = 1, kOut = 2 };

inline constexpr std::array<SubLayerKind, 3> kAllKinds = {SubLayerKind::kSa, SubLayerKind::kActs, SubLayerKind::kOut};

std::string kind_name(SubLayerKind k);        // "sa" | "acts" | "out"
SubLayerKind parse_kind(const std::string& s);
inline std::size_t kind_index(SubLayerKind k) { return static_cast<std::size_t>(k); }

const Vector& sublayer_vector(const SubLayerTrace& trace, SubLayerKind kind, std::size_t layer);

/// Cosine between the two sentences' sub-layer vectors at `layer`.
///
/// The similarity formula as usually printed divides the cosine by the two
/// norms once more; that would not produce values in the observed ranges,
/// so this is plain cosine similarity.
float sublayer_sim(const SubLayerTrace& t1, const SubLayerTrace& t2, SubLayerKind kind, std::size_t layer);

/// Cosine between a sub-layer vector and the static embedding. Acts is
/// rejected with DimensionalityMismatchError.
float we_sim(const SubLayerTrace& trace, SubLayerKind kind, std::size_t layer);

struct PcaPairResult {
  Pca2 pca;                         // fitted on 2L rows: sentence 1 layers 0..L-1, then sentence 2
  std::vector<double> layer_sq_l2;  // squared distance between the two projected points of each layer
};

PcaPairResult pca_pair(const SubLayerTrace& t1, const SubLayerTrace& t2, SubLayerKind kind);

struct KindMetrics {
  std::vector<float> sublayer_sim;                // per layer
  std::vector<std::array<float, 2>> we_sim;       // per layer, one per sentence; empty for Acts
  PcaPairResult pca;
};

struct PairMetrics {
  std::string word;
  std::array<std::optional<KindMetrics>, 3> kinds;  // indexed by kind_index

  std::size_t num_layers() const;
};

/// All metrics for the requested kinds. Throws DegenerateVectorError when a
/// vector has zero norm; callers flag the sample.
PairMetrics compute_pair_metrics(const std::string& word, const SubLayerTrace& t1, const SubLayerTrace& t2,
                                 std::span<const SubLayerKind> kinds = kAllKinds);

struct KindAggregate {
  std::vector<double> layer_sublayer_sim;  // mean over words, per layer
  std::vector<double> layer_we_sim;        // mean over words of the two-sentence mean; empty for Acts
  std::vector<double> layer_pca_l2;
  double avg_sublayer_sim = 0.0;           // mean over layers of the layerwise means
  std::optional<double> avg_we_sim;
  double avg_pca_l2 = 0.0;
};

struct CorpusAggregate {
  std::size_t processed = 0;
  std::size_t flagged = 0;
  std::array<std::optional<KindAggregate>, 3> kinds;
};

/// Arithmetic means over `processed`, in order. Throws EmptyCorpusError if
/// there is nothing to aggregate.
CorpusAggregate aggregate(std::span<const PairMetrics> processed, std::size_t flagged = 0);

}  // namespace sublens
