#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sublens/container.hpp"
#include "sublens/tensor.hpp"
#include "sublens/tokenizer.hpp"

namespace sublens {

struct ModelConfig {
  std::size_t num_layers = 12;
  std::size_t hidden_dim = 768;
  std::size_t intermediate_dim = 3072;
  std::size_t num_heads = 12;
  std::size_t vocab_size = 30522;
  std::size_t max_position = 512;
  float layernorm_eps = 1e-12f;

  std::size_t head_dim() const noexcept { return hidden_dim / num_heads; }

  /// Throws LoadError if any count is zero, hidden_dim % num_heads != 0 or
  /// eps is not positive.
  void validate() const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  bool operator==(const ModelConfig&) const = default;
};

struct LayerNormParams {
  Vector gamma;
  Vector beta;
};

// Dense weights are stored input-major: y = x * weight + bias with
// weight of shape in_dim x out_dim.
struct LayerWeights {
  Matrix query_weight;
  Vector query_bias;
  Matrix key_weight;
  Vector key_bias;
  Matrix value_weight;
  Vector value_bias;
  Matrix attention_output_weight;
  Vector attention_output_bias;
  LayerNormParams attention_layernorm;
  Matrix intermediate_weight;
  Vector intermediate_bias;
  Matrix output_weight;
  Vector output_bias;
  LayerNormParams output_layernorm;
};

struct WeightBundle {
  Matrix token_embeddings;     // vocab_size x hidden
  Matrix position_embeddings;  // max_position x hidden
  Matrix segment_embeddings;   // 2 x hidden
  LayerNormParams embedding_layernorm;
  std::vector<LayerWeights> layers;
};

struct LoadedModel {
  ModelConfig config;
  WeightBundle weights;
  std::string sha256;  // of the container file bytes
};

/// Tensor names, in canonical payload order:
///
///   embeddings.word_embeddings            vocab_size x hidden
///   embeddings.position_embeddings        max_position x hidden
///   embeddings.token_type_embeddings      2 x hidden
///   embeddings.layernorm.gamma|beta       hidden
///   layer.<l>.attention.query.weight|bias       hidden x hidden | hidden
///   layer.<l>.attention.key.weight|bias
///   layer.<l>.attention.value.weight|bias
///   layer.<l>.attention.output.dense.weight|bias
///   layer.<l>.attention.output.layernorm.gamma|beta
///   layer.<l>.intermediate.dense.weight|bias    hidden x intermediate | intermediate
///   layer.<l>.output.dense.weight|bias          intermediate x hidden | hidden
///   layer.<l>.output.layernorm.gamma|beta
std::vector<std::string> canonical_tensor_names(std::size_t num_layers);

/// Loads and strictly validates a weight container. Every failure names the
/// offending tensor.
LoadedModel load_weights(const std::filesystem::path& path);
LoadedModel load_weights_from_bytes(const std::vector<std::uint8_t>& bytes);

/// Inverse of load_weights; tensors are written in canonical order.
TensorContainer to_container(const ModelConfig& config, const WeightBundle& bundle);
void save_weights(const std::filesystem::path& path, const ModelConfig& config, const WeightBundle& bundle);

/// Mean of the raw token-embedding rows of `ids` (no position or segment
/// embedding, no layernorm).
Vector static_embedding(const WeightBundle& bundle, std::span<const TokenId> ids);

struct SyntheticModelOptions {
  std::uint32_t seed = 1;
  float weight_scale = 0.5f;
  bool zero_attention = false;  // Q/K/V weights and biases all zero
};

/// Random model for tests and demos; gamma=1, beta=0 in every layernorm.
WeightBundle make_synthetic_weights(const ModelConfig& config, const SyntheticModelOptions& options = {});

}  // namespace sublens
