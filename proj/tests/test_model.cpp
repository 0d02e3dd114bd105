#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sublens/container.hpp"
#include "sublens/errors.hpp"
#include "sublens/model.hpp"
#include "test_support.hpp"

namespace sublens {
namespace {

using testing::small_config;
using testing::TempDir;

TensorContainer synthetic_container(const ModelConfig& cfg, std::uint32_t seed = 3) {
  return to_container(cfg, make_synthetic_weights(cfg, {seed, 0.5f, false}));
}

std::string load_error_message(const std::vector<std::uint8_t>& bytes) {
  try {
    load_weights_from_bytes(bytes);
  } catch (const LoadError& e) {
    return e.what();
  }
  return {};
}

TEST(ModelConfig, Validation) {
  EXPECT_NO_THROW(ModelConfig{}.validate());
  auto c = small_config(10);
  c.num_heads = 3;
  EXPECT_THROW(c.validate(), LoadError);
  c = small_config(10);
  c.num_layers = 0;
  EXPECT_THROW(c.validate(), LoadError);
  c = small_config(10);
  EXPECT_EQ(ModelConfig::from_json(c.to_json()), c);
}

TEST(Container, HeaderLayout) {
  TensorContainer c;
  c.meta()["config"] = {{"x", 1}};
  c.add("a", {2}, {1.0f, -2.0f});
  const auto bytes = c.serialize();
  ASSERT_GE(bytes.size(), 12u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "SUBLENS1");
  const std::uint32_t len = bytes[8] | (bytes[9] << 8) | (bytes[10] << 16) | (bytes[11] << 24);
  const auto header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + len);
  EXPECT_EQ(header["a"]["dtype"], "f32");
  EXPECT_EQ(header["a"]["shape"], nlohmann::json::array({2}));
  EXPECT_EQ(header["a"]["offset"], 0);
  EXPECT_EQ(header["a"]["nbytes"], 8);
  // -2.0f little-endian is 00 00 00 c0
  EXPECT_EQ(bytes.size(), 12u + len + 8u);
  EXPECT_EQ(bytes[bytes.size() - 1], 0xC0);
  EXPECT_EQ(bytes[bytes.size() - 4], 0x00);
}

TEST(Container, RejectsBadMagicAndTruncation) {
  auto bytes = synthetic_container(small_config(6)).serialize();
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_NE(load_error_message(bad).find("magic"), std::string::npos);
  bytes.resize(bytes.size() - 4);
  EXPECT_NE(load_error_message(bytes).find("exceeds payload"), std::string::npos);
}

TEST(LoadWeights, SyntheticTwoLayerModelLoads) {
  const auto cfg = small_config(6, 2, 8, 16, 2);
  TempDir dir("weights");
  save_weights(dir / "w.sublens", cfg, make_synthetic_weights(cfg));
  const auto m = load_weights(dir / "w.sublens");
  EXPECT_EQ(m.config, cfg);
  EXPECT_EQ(m.weights.layers.size(), 2u);
  EXPECT_EQ(m.weights.token_embeddings.rows(), 6u);
  EXPECT_EQ(m.weights.layers[1].intermediate_weight.cols(), 16u);
  EXPECT_EQ(m.sha256.size(), 64u);
}

TEST(LoadWeights, MissingTensorIsNamed) {
  const auto cfg = small_config(6);
  const auto full = synthetic_container(cfg);
  TensorContainer partial;
  partial.meta() = full.meta();
  for (const auto& name : full.names())
    if (name != "layer.1.attention.query.bias") partial.add(name, full.at(name).shape, full.at(name).values);
  const auto msg = load_error_message(partial.serialize());
  EXPECT_NE(msg.find("layer.1.attention.query.bias"), std::string::npos) << msg;
}

TEST(LoadWeights, ShapeMismatchIsNamed) {
  const auto cfg = small_config(6);
  const auto full = synthetic_container(cfg);
  TensorContainer bad;
  bad.meta() = full.meta();
  for (const auto& name : full.names()) {
    if (name == "layer.0.output.dense.weight") {
      bad.add(name, {8, 16}, full.at(name).values);  // transposed shape
    } else {
      bad.add(name, full.at(name).shape, full.at(name).values);
    }
  }
  const auto msg = load_error_message(bad.serialize());
  EXPECT_NE(msg.find("layer.0.output.dense.weight"), std::string::npos) << msg;
  EXPECT_NE(msg.find("shape"), std::string::npos) << msg;
}

TEST(LoadWeights, NonFiniteValueIsRejected) {
  const auto cfg = small_config(6);
  const auto full = synthetic_container(cfg);
  TensorContainer bad;
  bad.meta() = full.meta();
  for (const auto& name : full.names()) {
    auto values = full.at(name).values;
    if (name == "embeddings.word_embeddings") values[5] = std::numeric_limits<float>::quiet_NaN();
    bad.add(name, full.at(name).shape, values);
  }
  const auto msg = load_error_message(bad.serialize());
  EXPECT_NE(msg.find("embeddings.word_embeddings"), std::string::npos) << msg;
  EXPECT_NE(msg.find("non-finite"), std::string::npos) << msg;
}

TEST(LoadWeights, ExtraLayerIsRejected) {
  const auto cfg = small_config(6, 2);
  auto c = synthetic_container(small_config(6, 3));
  c.meta()["config"] = cfg.to_json();
  EXPECT_NE(load_error_message(c.serialize()).find("layer.2."), std::string::npos);
}

TEST(LoadWeights, MissingConfigOrBadDtype) {
  TensorContainer c;
  c.add("x", {1}, {1.0f});
  EXPECT_NE(load_error_message(c.serialize()).find("config"), std::string::npos);

  auto bytes = synthetic_container(small_config(6)).serialize();
  const std::string text(bytes.begin(), bytes.end());
  const auto pos = text.find("\"f32\"");
  ASSERT_NE(pos, std::string::npos);
  bytes[pos + 1] = 'i';  // "i32"
  EXPECT_NE(load_error_message(bytes).find("dtype"), std::string::npos);
}

TEST(LoadWeights, ReserialisationIsByteIdentical) {
  for (std::uint32_t seed : {1u, 2u, 3u}) {
    const auto cfg = small_config(7, 1 + seed % 3, 8, 12, 4);
    const auto bytes = synthetic_container(cfg, seed).serialize();
    const auto loaded = load_weights_from_bytes(bytes);
    const auto again = to_container(loaded.config, loaded.weights);
    EXPECT_EQ(again.serialize(), bytes);
    EXPECT_EQ(again.payload(), TensorContainer::parse(bytes).payload());
  }
}

TEST(LoadWeights, CommittedReferenceContainerPayloadRoundTrips) {
  const auto bytes = read_file_bytes(testing::data_dir() / "reference" / "weights.sublens");
  const auto loaded = load_weights_from_bytes(bytes);
  EXPECT_EQ(loaded.config.num_layers, 12u);
  EXPECT_EQ(to_container(loaded.config, loaded.weights).payload(), TensorContainer::parse(bytes).payload());
}

TEST(StaticEmbedding, SingleIdIsTheRow) {
  const auto cfg = small_config(6);
  const auto w = make_synthetic_weights(cfg);
  const std::vector<TokenId> ids{4};
  const auto v = static_embedding(w, ids);
  EXPECT_EQ(v, Vector(w.token_embeddings.row(4).begin(), w.token_embeddings.row(4).end()));
}

TEST(StaticEmbedding, MeanOfRows) {
  const auto cfg = small_config(6);
  const auto w = make_synthetic_weights(cfg);
  const std::vector<TokenId> ids{1, 3};
  const auto v = static_embedding(w, ids);
  ASSERT_EQ(v.size(), cfg.hidden_dim);
  for (std::size_t j = 0; j < v.size(); ++j)
    EXPECT_FLOAT_EQ(v[j], (w.token_embeddings(1, j) + w.token_embeddings(3, j)) / 2);
}

TEST(StaticEmbedding, Errors) {
  const auto w = make_synthetic_weights(small_config(6));
  EXPECT_THROW(static_embedding(w, std::vector<TokenId>{}), IndexError);
  EXPECT_THROW(static_embedding(w, std::vector<TokenId>{6}), IndexError);
  EXPECT_THROW(static_embedding(w, std::vector<TokenId>{-1}), IndexError);
}

}  // namespace
}  // namespace sublens
