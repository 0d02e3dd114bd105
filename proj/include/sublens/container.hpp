#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace sublens {

// On-disk layout (all integers little-endian):
//
//   bytes 0..7    magic "SUBLENS1"
//   bytes 8..11   u32 header length N
//   bytes 12..    N bytes of UTF-8 JSON
//   then          float32 payload region
//
// The JSON header is an object. Every member whose value is an object with a
// "dtype" key describes a tensor: {"dtype": "f32", "shape": [...],
// "offset": <byte offset into the payload>, "nbytes": <byte count>}.
// Every other member ("config", "fixture", ...) is free-form metadata.
inline constexpr char kContainerMagic[8] = {'S', 'U', 'B', 'L', 'E', 'N', 'S', '1'};

struct TensorEntry {
  std::vector<std::size_t> shape;
  std::vector<float> values;

  std::size_t numel() const noexcept;
};

class TensorContainer {
 public:
  /// Parses a container. Throws LoadError on bad magic, truncated data,
  /// malformed header, unsupported dtype, or a tensor whose byte range falls
  /// outside the payload. Values are not checked for finiteness here.
  static TensorContainer parse(const std::vector<std::uint8_t>& bytes);
  static TensorContainer read(const std::filesystem::path& path);

  /// Appends a tensor; the payload is laid out in insertion order.
  void add(const std::string& name, std::vector<std::size_t> shape, std::vector<float> values);

  bool has(const std::string& name) const { return tensors_.count(name) != 0; }
  const TensorEntry& at(const std::string& name) const;  // LoadError naming the tensor when absent
  const std::vector<std::string>& names() const noexcept { return order_; }

  nlohmann::json& meta() noexcept { return meta_; }
  const nlohmann::json& meta() const noexcept { return meta_; }

  std::vector<std::uint8_t> serialize() const;
  void write(const std::filesystem::path& path) const;

  /// Concatenated little-endian payload of all tensors in insertion order.
  std::vector<std::uint8_t> payload() const;

 private:
  nlohmann::json meta_ = nlohmann::json::object();
  std::map<std::string, TensorEntry> tensors_;
  std::vector<std::string> order_;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(const std::vector<std::uint8_t>& bytes);

}  // namespace sublens
