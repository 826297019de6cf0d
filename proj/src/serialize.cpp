#include "sagin/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace sagin::nn {
namespace wire {

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void Reader::need(std::size_t n) const {
  if (remaining() < n) throw FormatError("truncated input");
}

std::uint8_t Reader::u8() {
  need(1);
  return bytes_[pos_++];
}

std::uint32_t Reader::u32_le() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t Reader::u64_le() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
  pos_ += 8;
  return v;
}

std::uint32_t Reader::u32_be() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_ + i];
  pos_ += 4;
  return v;
}

float Reader::f32_le() { return std::bit_cast<float>(u32_le()); }

std::span<const std::uint8_t> Reader::take(std::size_t n) {
  need(n);
  auto s = bytes_.subspan(pos_, n);
  pos_ += n;
  return s;
}

}  // namespace wire

std::vector<std::uint8_t> serialize(const ParamSet& params) {
  std::vector<std::uint8_t> out;
  out.reserve(32 + 4 * params.numel());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  wire::put_u32_le(out, kFormatVersion);
  wire::put_u64_le(out, params.layout_id());
  wire::put_u32_le(out, static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& t : params.tensors) {
    if (t.data.size() != t.numel()) throw FormatError("tensor data length does not match its shape");
    wire::put_u32_le(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) wire::put_u32_le(out, d);
  }
  for (const auto& t : params.tensors) {
    for (float x : t.data) wire::put_u32_le(out, std::bit_cast<std::uint32_t>(x));
  }
  return out;
}

ParamSet deserialize(std::span<const std::uint8_t> bytes, std::optional<std::uint64_t> expected_layout) {
  wire::Reader in(bytes);
  auto magic = in.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError("bad magic");
  if (const auto version = in.u32_le(); version != kFormatVersion) {
    throw FormatError("unsupported format version " + std::to_string(version));
  }
  const std::uint64_t layout = in.u64_le();
  if (expected_layout && *expected_layout != layout) throw FormatError("layout id mismatch");
  const std::uint32_t count = in.u32_le();
  // Each tensor header needs at least 4 bytes; reject absurd counts before allocating.
  if (count > in.remaining() / 4) throw FormatError("truncated input");

  ParamSet p;
  p.tensors.resize(count);
  std::size_t total = 0;
  for (auto& t : p.tensors) {
    const std::uint32_t rank = in.u32_le();
    if (rank > in.remaining() / 4) throw FormatError("truncated input");
    t.shape.resize(rank);
    for (auto& d : t.shape) d = in.u32_le();
    total += t.numel();
  }
  if (p.layout_id() != layout) throw FormatError("layout id does not match encoded shapes");
  if (in.remaining() != 4 * total) {
    throw FormatError(in.remaining() < 4 * total ? "truncated input" : "trailing bytes after payload");
  }
  for (auto& t : p.tensors) {
    t.data.resize(t.numel());
    for (auto& x : t.data) x = in.f32_le();
  }
  return p;
}

void write_file(const std::string& path, const ParamSet& params) {
  const auto bytes = serialize(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

ParamSet read_file(const std::string& path, std::optional<std::uint64_t> expected_layout) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes, expected_layout);
}

}  // namespace sagin::nn
