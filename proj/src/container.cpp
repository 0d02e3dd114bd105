#include "sublens/container.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sublens/errors.hpp"

namespace sublens {

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

std::uint32_t read_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

float load_f32_le(const std::uint8_t* p) {
  const std::uint32_t bits = read_u32_le(p);
  return std::bit_cast<float>(bits);
}

void store_f32_le(std::vector<std::uint8_t>& out, float v) { write_u32_le(out, std::bit_cast<std::uint32_t>(v)); }

}  // namespace

std::size_t TensorEntry::numel() const noexcept {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

TensorContainer TensorContainer::parse(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kContainerMagic, 8) != 0) {
    throw LoadError("bad magic: not a SUBLENS1 container");
  }
  const std::uint32_t header_len = read_u32_le(bytes.data() + 8);
  if (12ull + header_len > bytes.size()) throw LoadError("truncated container header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed container header: ") + e.what());
  }
  if (!header.is_object()) throw LoadError("container header is not a JSON object");

  const std::uint8_t* payload = bytes.data() + 12 + header_len;
  const std::size_t payload_size = bytes.size() - 12 - header_len;

  struct Pending {
    std::string name;
    std::size_t offset;
  };
  std::vector<Pending> pending;
  TensorContainer c;
  for (const auto& [key, value] : header.items()) {
    if (!value.is_object() || !value.contains("dtype")) {
      c.meta_[key] = value;
      continue;
    }
    try {
      if (value.at("dtype") != "f32") {
        throw LoadError("tensor " + key + ": unsupported dtype " + value.at("dtype").dump());
      }
      TensorEntry t;
      t.shape = value.at("shape").get<std::vector<std::size_t>>();
      const auto offset = value.at("offset").get<std::size_t>();
      const auto nbytes = value.at("nbytes").get<std::size_t>();
      if (nbytes != t.numel() * 4) {
        throw LoadError("tensor " + key + ": nbytes " + std::to_string(nbytes) + " does not match shape");
      }
      if (offset > payload_size || nbytes > payload_size - offset) {
        throw LoadError("tensor " + key + ": byte range exceeds payload");
      }
      t.values.resize(t.numel());
      for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] = load_f32_le(payload + offset + 4 * i);
      c.tensors_.emplace(key, std::move(t));
      pending.push_back({key, offset});
    } catch (const nlohmann::json::exception& e) {
      throw LoadError("tensor " + key + ": malformed descriptor: " + e.what());
    }
  }
  // Keep payload order so re-serialisation reproduces the original layout.
  std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) { return a.offset < b.offset; });
  for (auto& p : pending) c.order_.push_back(std::move(p.name));
  return c;
}

TensorContainer TensorContainer::read(const std::filesystem::path& path) { return parse(read_file_bytes(path)); }

void TensorContainer::add(const std::string& name, std::vector<std::size_t> shape, std::vector<float> values) {
  TensorEntry t{std::move(shape), std::move(values)};
  if (t.numel() != t.values.size()) throw ShapeError("tensor " + name + ": value count does not match shape");
  if (meta_.contains(name)) throw ShapeError("tensor name " + name + " collides with a metadata key");
  if (!tensors_.emplace(name, std::move(t)).second) throw ShapeError("duplicate tensor " + name);
  order_.push_back(name);
}

const TensorEntry& TensorContainer::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw LoadError("missing tensor " + name);
  return it->second;
}

std::vector<std::uint8_t> TensorContainer::payload() const {
  std::vector<std::uint8_t> out;
  for (const auto& name : order_)
    for (float v : tensors_.at(name).values) store_f32_le(out, v);
  return out;
}

std::vector<std::uint8_t> TensorContainer::serialize() const {
  nlohmann::json header = meta_;
  std::size_t offset = 0;
  for (const auto& name : order_) {
    const auto& t = tensors_.at(name);
    const std::size_t nbytes = t.values.size() * 4;
    header[name] = {{"dtype", "f32"}, {"shape", t.shape}, {"offset", offset}, {"nbytes", nbytes}};
    offset += nbytes;
  }
  const std::string text = header.dump();
  std::vector<std::uint8_t> out(kContainerMagic, kContainerMagic + 8);
  write_u32_le(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  const auto body = payload();
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

void TensorContainer::write(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw LoadError("failed writing " + path.string());
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string sha256_hex(const std::vector<std::uint8_t>& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

}  // namespace sublens
