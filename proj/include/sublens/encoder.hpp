#pragma once

#include <span>
#include <string>
#include <vector>

#include "sublens/model.hpp"
#include "sublens/tensor.hpp"
#include "sublens/tokenizer.hpp"

namespace sublens {

enum class SaTap {
  kPreResidual,     // attention output projection, before residual + layernorm
  kPostLayernorm,   // after residual + attention layernorm
};

enum class StaticTap {
  kRawEmbedding,    // token-embedding table row(s)
  kPostLayernorm,   // token + position + segment embedding after embedding layernorm
};

struct TapPointSpec {
  SaTap sa = SaTap::kPreResidual;
  StaticTap static_vec = StaticTap::kRawEmbedding;

  bool operator==(const TapPointSpec&) const = default;
};

std::string to_string(SaTap t);
std::string to_string(StaticTap t);
SaTap parse_sa_tap(const std::string& s);          // "pre-residual" | "post-layernorm"
StaticTap parse_static_tap(const std::string& s);  // "raw" | "post-layernorm"

struct AttentionResult {
  Matrix context;              // seq x hidden, heads concatenated, before the output projection
  std::vector<Matrix> probs;   // one seq x seq matrix per head
};

/// Multi-head scaled dot-product self-attention (no masking). The output
/// projection is left to the caller.
AttentionResult attention_layer(const Matrix& hidden, const LayerWeights& layer, std::size_t num_heads);

// All positions of every sub-layer, kept for inspection and tests.
struct LayerActivations {
  Matrix sa_pre_residual;
  Matrix sa_post_layernorm;
  Matrix acts;  // post-GELU intermediate
  Matrix out;   // layer output
  std::vector<Matrix> attention_probs;
};

struct EncoderActivations {
  Matrix embedding_output;  // post embedding layernorm
  std::vector<LayerActivations> layers;
};

/// Full forward pass over one sentence (segment 0, no padding). Throws
/// NumericError naming the layer and sub-layer on a non-finite activation.
EncoderActivations encoder_forward(const ModelConfig& config, const WeightBundle& bundle,
                                   std::span<const TokenId> token_ids);

struct LayerTrace {
  Vector sa;
  Vector acts;
  Vector out;
};

struct SubLayerTrace {
  std::vector<LayerTrace> layers;
  Vector static_vec;
  std::size_t subword_count = 0;

  bool operator==(const SubLayerTrace& o) const;
};

/// Runs the encoder and mean-pools each tapped sub-layer over `target`.
/// The target must be non-empty and lie strictly between [CLS] and [SEP].
SubLayerTrace forward_with_taps(const ModelConfig& config, const WeightBundle& bundle,
                                const TokenizedSentence& ts, SubwordRange target,
                                const TapPointSpec& taps = {});

}  // namespace sublens
