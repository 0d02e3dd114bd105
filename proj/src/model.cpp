#include "sublens/model.hpp"

#include <random>

#include "sublens/errors.hpp"

namespace sublens {

void ModelConfig::validate() const {
  if (num_layers == 0 || hidden_dim == 0 || intermediate_dim == 0 || num_heads == 0 || vocab_size == 0 ||
      max_position == 0) {
    throw LoadError("model config: all counts must be positive");
  }
  if (hidden_dim % num_heads != 0) {
    throw LoadError("model config: hidden_dim " + std::to_string(hidden_dim) + " not divisible by num_heads " +
                    std::to_string(num_heads));
  }
  if (!(layernorm_eps > 0.0f)) throw LoadError("model config: layernorm_eps must be positive");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"num_layers", num_layers},         {"hidden_dim", hidden_dim},     {"intermediate_dim", intermediate_dim},
          {"num_heads", num_heads},           {"vocab_size", vocab_size},     {"max_position", max_position},
          {"layernorm_eps", layernorm_eps}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.num_layers = j.at("num_layers").get<std::size_t>();
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.intermediate_dim = j.at("intermediate_dim").get<std::size_t>();
    c.num_heads = j.at("num_heads").get<std::size_t>();
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.max_position = j.at("max_position").get<std::size_t>();
    c.layernorm_eps = j.at("layernorm_eps").get<float>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("model config: ") + e.what());
  }
}

namespace {

std::string layer_prefix(std::size_t l) { return "layer." + std::to_string(l) + "."; }

struct Expect {
  const TensorContainer& c;

  const TensorEntry& get(const std::string& name, std::vector<std::size_t> shape) const {
    const auto& t = c.at(name);
    if (t.shape != shape) {
      auto fmt = [](const std::vector<std::size_t>& s) {
        std::string r = "[";
        for (std::size_t i = 0; i < s.size(); ++i) r += (i ? "," : "") + std::to_string(s[i]);
        return r + "]";
      };
      throw LoadError("tensor " + name + ": shape " + fmt(t.shape) + " does not match expected " + fmt(shape));
    }
    if (!all_finite(t.values)) throw LoadError("tensor " + name + ": contains non-finite value");
    return t;
  }
  Matrix matrix(const std::string& name, std::size_t rows, std::size_t cols) const {
    return Matrix(rows, cols, get(name, {rows, cols}).values);
  }
  Vector vector(const std::string& name, std::size_t n) const { return get(name, {n}).values; }
  LayerNormParams layernorm(const std::string& prefix, std::size_t n) const {
    return {vector(prefix + ".gamma", n), vector(prefix + ".beta", n)};
  }
};

}  // namespace

std::vector<std::string> canonical_tensor_names(std::size_t num_layers) {
  std::vector<std::string> names = {"embeddings.word_embeddings", "embeddings.position_embeddings",
                                    "embeddings.token_type_embeddings", "embeddings.layernorm.gamma",
                                    "embeddings.layernorm.beta"};
  static const char* kLayer[] = {"attention.query.weight",
                                 "attention.query.bias",
                                 "attention.key.weight",
                                 "attention.key.bias",
                                 "attention.value.weight",
                                 "attention.value.bias",
                                 "attention.output.dense.weight",
                                 "attention.output.dense.bias",
                                 "attention.output.layernorm.gamma",
                                 "attention.output.layernorm.beta",
                                 "intermediate.dense.weight",
                                 "intermediate.dense.bias",
                                 "output.dense.weight",
                                 "output.dense.bias",
                                 "output.layernorm.gamma",
                                 "output.layernorm.beta"};
  for (std::size_t l = 0; l < num_layers; ++l)
    for (const char* n : kLayer) names.push_back(layer_prefix(l) + n);
  return names;
}

LoadedModel load_weights_from_bytes(const std::vector<std::uint8_t>& bytes) {
  const auto c = TensorContainer::parse(bytes);
  if (!c.meta().contains("config")) throw LoadError("container has no config object");
  LoadedModel m;
  m.config = ModelConfig::from_json(c.meta().at("config"));
  m.config.validate();
  m.sha256 = sha256_hex(bytes);

  const auto& cfg = m.config;
  const std::size_t h = cfg.hidden_dim, inter = cfg.intermediate_dim;
  const Expect e{c};
  auto& w = m.weights;
  w.token_embeddings = e.matrix("embeddings.word_embeddings", cfg.vocab_size, h);
  w.position_embeddings = e.matrix("embeddings.position_embeddings", cfg.max_position, h);
  w.segment_embeddings = e.matrix("embeddings.token_type_embeddings", 2, h);
  w.embedding_layernorm = e.layernorm("embeddings.layernorm", h);

  for (std::size_t l = 0; l < cfg.num_layers; ++l) {
    const auto p = layer_prefix(l);
    LayerWeights lw;
    lw.query_weight = e.matrix(p + "attention.query.weight", h, h);
    lw.query_bias = e.vector(p + "attention.query.bias", h);
    lw.key_weight = e.matrix(p + "attention.key.weight", h, h);
    lw.key_bias = e.vector(p + "attention.key.bias", h);
    lw.value_weight = e.matrix(p + "attention.value.weight", h, h);
    lw.value_bias = e.vector(p + "attention.value.bias", h);
    lw.attention_output_weight = e.matrix(p + "attention.output.dense.weight", h, h);
    lw.attention_output_bias = e.vector(p + "attention.output.dense.bias", h);
    lw.attention_layernorm = e.layernorm(p + "attention.output.layernorm", h);
    lw.intermediate_weight = e.matrix(p + "intermediate.dense.weight", h, inter);
    lw.intermediate_bias = e.vector(p + "intermediate.dense.bias", inter);
    lw.output_weight = e.matrix(p + "output.dense.weight", inter, h);
    lw.output_bias = e.vector(p + "output.dense.bias", h);
    lw.output_layernorm = e.layernorm(p + "output.layernorm", h);
    w.layers.push_back(std::move(lw));
  }

  const std::string extra = "layer." + std::to_string(cfg.num_layers) + ".";
  for (const auto& name : c.names()) {
    if (name.rfind(extra, 0) == 0) {
      throw LoadError("tensor " + name + ": container holds more layers than config.num_layers");
    }
  }
  return m;
}

LoadedModel load_weights(const std::filesystem::path& path) {
  try {
    return load_weights_from_bytes(read_file_bytes(path));
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

TensorContainer to_container(const ModelConfig& config, const WeightBundle& w) {
  TensorContainer c;
  c.meta()["config"] = config.to_json();
  auto mat = [&](const std::string& name, const Matrix& m) {
    c.add(name, {m.rows(), m.cols()}, std::vector<float>(m.data().begin(), m.data().end()));
  };
  auto vec = [&](const std::string& name, const Vector& v) { c.add(name, {v.size()}, v); };
  auto ln = [&](const std::string& prefix, const LayerNormParams& p) {
    vec(prefix + ".gamma", p.gamma);
    vec(prefix + ".beta", p.beta);
  };
  mat("embeddings.word_embeddings", w.token_embeddings);
  mat("embeddings.position_embeddings", w.position_embeddings);
  mat("embeddings.token_type_embeddings", w.segment_embeddings);
  ln("embeddings.layernorm", w.embedding_layernorm);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const auto p = layer_prefix(l);
    const auto& lw = w.layers[l];
    mat(p + "attention.query.weight", lw.query_weight);
    vec(p + "attention.query.bias", lw.query_bias);
    mat(p + "attention.key.weight", lw.key_weight);
    vec(p + "attention.key.bias", lw.key_bias);
    mat(p + "attention.value.weight", lw.value_weight);
    vec(p + "attention.value.bias", lw.value_bias);
    mat(p + "attention.output.dense.weight", lw.attention_output_weight);
    vec(p + "attention.output.dense.bias", lw.attention_output_bias);
    ln(p + "attention.output.layernorm", lw.attention_layernorm);
    mat(p + "intermediate.dense.weight", lw.intermediate_weight);
    vec(p + "intermediate.dense.bias", lw.intermediate_bias);
    mat(p + "output.dense.weight", lw.output_weight);
    vec(p + "output.dense.bias", lw.output_bias);
    ln(p + "output.layernorm", lw.output_layernorm);
  }
  return c;
}

void save_weights(const std::filesystem::path& path, const ModelConfig& config, const WeightBundle& bundle) {
  to_container(config, bundle).write(path);
}

Vector static_embedding(const WeightBundle& bundle, std::span<const TokenId> ids) {
  if (ids.empty()) throw IndexError("static_embedding of an empty id sequence");
  const auto& table = bundle.token_embeddings;
  Vector out(table.cols(), 0.0f);
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= table.rows()) {
      throw IndexError("token id " + std::to_string(id) + " outside embedding table of " +
                       std::to_string(table.rows()) + " rows");
    }
    const auto row = table.row(static_cast<std::size_t>(id));
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += row[j];
  }
  if (ids.size() > 1) {
    const auto n = static_cast<float>(ids.size());
    for (float& v : out) v /= n;
  }
  return out;
}

WeightBundle make_synthetic_weights(const ModelConfig& config, const SyntheticModelOptions& options) {
  config.validate();
  std::mt19937 rng(options.seed);
  std::normal_distribution<float> normal(0.0f, options.weight_scale);
  auto mat = [&](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (float& v : m.data()) v = normal(rng);
    return m;
  };
  auto vec = [&](std::size_t n) {
    Vector v(n);
    for (float& x : v) x = normal(rng);
    return v;
  };
  auto ln = [](std::size_t n) { return LayerNormParams{Vector(n, 1.0f), Vector(n, 0.0f)}; };

  const std::size_t h = config.hidden_dim, inter = config.intermediate_dim;
  WeightBundle w;
  w.token_embeddings = mat(config.vocab_size, h);
  w.position_embeddings = mat(config.max_position, h);
  w.segment_embeddings = mat(2, h);
  w.embedding_layernorm = ln(h);
  const float inv_sqrt_h = 1.0f / std::sqrt(static_cast<float>(h));
  const float inv_sqrt_i = 1.0f / std::sqrt(static_cast<float>(inter));
  auto scaled = [&](std::size_t r, std::size_t c, float s) {
    Matrix m = mat(r, c);
    for (float& v : m.data()) v *= s;
    return m;
  };
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    LayerWeights lw;
    if (options.zero_attention) {
      lw.query_weight = lw.key_weight = lw.value_weight = Matrix(h, h);
      lw.query_bias = lw.key_bias = lw.value_bias = Vector(h, 0.0f);
    } else {
      lw.query_weight = scaled(h, h, inv_sqrt_h * 4.0f);
      lw.query_bias = vec(h);
      lw.key_weight = scaled(h, h, inv_sqrt_h * 4.0f);
      lw.key_bias = vec(h);
      lw.value_weight = scaled(h, h, inv_sqrt_h * 2.0f);
      lw.value_bias = vec(h);
    }
    lw.attention_output_weight = scaled(h, h, inv_sqrt_h * 2.0f);
    lw.attention_output_bias = vec(h);
    lw.attention_layernorm = ln(h);
    lw.intermediate_weight = scaled(h, inter, inv_sqrt_h * 2.0f);
    lw.intermediate_bias = vec(inter);
    lw.output_weight = scaled(inter, h, inv_sqrt_i * 2.0f);
    lw.output_bias = vec(h);
    lw.output_layernorm = ln(h);
    w.layers.push_back(std::move(lw));
  }
  return w;
}

}  // namespace sublens
