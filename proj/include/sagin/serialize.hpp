// Binary parameter format shared by checkpoints and the federation wire.
//
//   magic    4 bytes  "SGPS"
//   version  u32 LE   (kFormatVersion)
//   layout   u64 LE   ParamSet::layout_id()
//   count    u32 LE   number of tensors
//   per tensor: rank u32 LE, then rank x u32 LE dims
//   payload  all tensor elements as IEEE-754 binary32 LE, tensor order
#ifndef SAGIN_SERIALIZE_HPP_
#define SAGIN_SERIALIZE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sagin/nn.hpp"

namespace sagin::nn {

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr char kMagic[4] = {'S', 'G', 'P', 'S'};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> serialize(const ParamSet& params);

/// Throws FormatError on bad magic, version, layout mismatch, truncation or trailing bytes.
ParamSet deserialize(std::span<const std::uint8_t> bytes,
                     std::optional<std::uint64_t> expected_layout = std::nullopt);

void write_file(const std::string& path, const ParamSet& params);
ParamSet read_file(const std::string& path, std::optional<std::uint64_t> expected_layout = std::nullopt);

namespace wire {

void put_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_u64_le(std::vector<std::uint8_t>& out, std::uint64_t v);
void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v);

/// Bounds-checked little/big-endian reader over a byte span.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::uint32_t u32_le();
  std::uint64_t u64_le();
  std::uint32_t u32_be();
  float f32_le();
  std::span<const std::uint8_t> take(std::size_t n);
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace wire
}  // namespace sagin::nn

#endif  // SAGIN_SERIALIZE_HPP_
