#include "sublens/encoder.hpp"

#include <cmath>

#include "sublens/errors.hpp"

namespace sublens {

std::string to_string(SaTap t) { return t == SaTap::kPreResidual ? "pre-residual" : "post-layernorm"; }
std::string to_string(StaticTap t) { return t == StaticTap::kRawEmbedding ? "raw" : "post-layernorm"; }

SaTap parse_sa_tap(const std::string& s) {
  if (s == "pre-residual") return SaTap::kPreResidual;
  if (s == "post-layernorm") return SaTap::kPostLayernorm;
  throw Error("unknown SA tap '" + s + "' (expected pre-residual or post-layernorm)");
}

StaticTap parse_static_tap(const std::string& s) {
  if (s == "raw") return StaticTap::kRawEmbedding;
  if (s == "post-layernorm") return StaticTap::kPostLayernorm;
  throw Error("unknown static tap '" + s + "' (expected raw or post-layernorm)");
}

AttentionResult attention_layer(const Matrix& hidden, const LayerWeights& layer, std::size_t num_heads) {
  const std::size_t seq = hidden.rows(), h = hidden.cols();
  if (num_heads == 0 || h % num_heads != 0) {
    throw ShapeError("hidden width " + std::to_string(h) + " not divisible into " + std::to_string(num_heads) + " heads");
  }
  if (layer.query_weight.rows() != h || layer.query_weight.cols() != h) {
    throw ShapeError("query weight " + layer.query_weight.shape_string() + " does not match hidden " +
                     hidden.shape_string());
  }
  const Matrix q = linear(hidden, layer.query_weight, layer.query_bias);
  const Matrix k = linear(hidden, layer.key_weight, layer.key_bias);
  const Matrix v = linear(hidden, layer.value_weight, layer.value_bias);

  const std::size_t dh = h / num_heads;
  const float scale = 1.0f / std::sqrt(static_cast<float>(dh));
  AttentionResult res{Matrix(seq, h), {}};
  res.probs.reserve(num_heads);
  for (std::size_t head = 0; head < num_heads; ++head) {
    const std::size_t off = head * dh;
    Matrix scores(seq, seq);
    for (std::size_t i = 0; i < seq; ++i)
      for (std::size_t j = 0; j < seq; ++j) {
        float s = 0.0f;
        for (std::size_t c = 0; c < dh; ++c) s += q(i, off + c) * k(j, off + c);
        scores(i, j) = s * scale;
      }
    Matrix probs = softmax_rows(scores);
    for (std::size_t i = 0; i < seq; ++i)
      for (std::size_t j = 0; j < seq; ++j) {
        const float p = probs(i, j);
        for (std::size_t c = 0; c < dh; ++c) res.context(i, off + c) += p * v(j, off + c);
      }
    res.probs.push_back(std::move(probs));
  }
  return res;
}

namespace {

void check_finite(const Matrix& m, std::size_t layer, const char* what) {
  if (!all_finite(m.data())) {
    throw NumericError("non-finite activation in layer " + std::to_string(layer + 1) + " sub-layer " + what);
  }
}

Matrix add(const Matrix& a, const Matrix& b) {
  Matrix out = a;
  auto o = out.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bd[i];
  return out;
}

}  // namespace

EncoderActivations encoder_forward(const ModelConfig& config, const WeightBundle& bundle,
                                   std::span<const TokenId> token_ids) {
  const std::size_t seq = token_ids.size(), h = config.hidden_dim;
  if (seq == 0) throw LengthError("encoder input is empty");
  if (seq > config.max_position) {
    throw LengthError("sequence of " + std::to_string(seq) + " tokens exceeds max_position " +
                      std::to_string(config.max_position));
  }
  if (bundle.layers.size() != config.num_layers) {
    throw ShapeError("bundle has " + std::to_string(bundle.layers.size()) + " layers, config says " +
                     std::to_string(config.num_layers));
  }

  Matrix x(seq, h);
  for (std::size_t t = 0; t < seq; ++t) {
    const TokenId id = token_ids[t];
    if (id < 0 || static_cast<std::size_t>(id) >= bundle.token_embeddings.rows()) {
      throw IndexError("token id " + std::to_string(id) + " outside vocab of " +
                       std::to_string(bundle.token_embeddings.rows()));
    }
    const auto tok = bundle.token_embeddings.row(static_cast<std::size_t>(id));
    const auto pos = bundle.position_embeddings.row(t);
    const auto seg = bundle.segment_embeddings.row(0);
    auto row = x.row(t);
    for (std::size_t j = 0; j < h; ++j) row[j] = tok[j] + pos[j] + seg[j];
  }

  EncoderActivations acts;
  acts.embedding_output =
      layer_norm_rows(x, bundle.embedding_layernorm.gamma, bundle.embedding_layernorm.beta, config.layernorm_eps);
  check_finite(acts.embedding_output, 0, "embeddings");

  const Matrix* hidden = &acts.embedding_output;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const auto& lw = bundle.layers[l];
    LayerActivations la;
    auto attn = attention_layer(*hidden, lw, config.num_heads);
    la.sa_pre_residual = linear(attn.context, lw.attention_output_weight, lw.attention_output_bias);
    check_finite(la.sa_pre_residual, l, "SA");
    la.sa_post_layernorm = layer_norm_rows(add(*hidden, la.sa_pre_residual), lw.attention_layernorm.gamma,
                                           lw.attention_layernorm.beta, config.layernorm_eps);
    check_finite(la.sa_post_layernorm, l, "SA (post-layernorm)");
    la.acts = linear(la.sa_post_layernorm, lw.intermediate_weight, lw.intermediate_bias);
    gelu_inplace(la.acts.data());
    check_finite(la.acts, l, "Acts");
    const Matrix dense = linear(la.acts, lw.output_weight, lw.output_bias);
    la.out = layer_norm_rows(add(la.sa_post_layernorm, dense), lw.output_layernorm.gamma, lw.output_layernorm.beta,
                             config.layernorm_eps);
    check_finite(la.out, l, "Output");
    la.attention_probs = std::move(attn.probs);
    acts.layers.push_back(std::move(la));
    hidden = &acts.layers.back().out;
  }
  return acts;
}

bool SubLayerTrace::operator==(const SubLayerTrace& o) const {
  if (layers.size() != o.layers.size() || static_vec != o.static_vec || subword_count != o.subword_count) return false;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].sa != o.layers[l].sa || layers[l].acts != o.layers[l].acts || layers[l].out != o.layers[l].out)
      return false;
  }
  return true;
}

SubLayerTrace forward_with_taps(const ModelConfig& config, const WeightBundle& bundle, const TokenizedSentence& ts,
                                SubwordRange target, const TapPointSpec& taps) {
  const std::size_t n = ts.token_ids.size();
  if (target.begin >= target.end || target.begin < 1 || target.end + 1 > n) {
    throw IndexError("target subword range [" + std::to_string(target.begin) + ", " + std::to_string(target.end) +
                     ") must be non-empty and exclude [CLS]/[SEP] in a sequence of " + std::to_string(n));
  }
  const auto acts = encoder_forward(config, bundle, ts.token_ids);

  SubLayerTrace trace;
  trace.subword_count = target.size();
  for (const auto& la : acts.layers) {
    const Matrix& sa = taps.sa == SaTap::kPreResidual ? la.sa_pre_residual : la.sa_post_layernorm;
    trace.layers.push_back({mean_rows(sa, target.begin, target.end), mean_rows(la.acts, target.begin, target.end),
                            mean_rows(la.out, target.begin, target.end)});
  }
  if (taps.static_vec == StaticTap::kRawEmbedding) {
    trace.static_vec = static_embedding(
        bundle, std::span<const TokenId>(ts.token_ids).subspan(target.begin, target.size()));
  } else {
    trace.static_vec = mean_rows(acts.embedding_output, target.begin, target.end);
  }
  return trace;
}

}  // namespace sublens
