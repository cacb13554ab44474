#pragma once

// Little-endian byte streams and the framed container shared by every
// snapshot file:
//
//   magic     8 bytes   file kind, e.g. "NSOINNEN"
//   version   u32
//   length    u64       payload size in bytes
//   payload   length bytes
//   checksum  u64       FNV-1a 64 over the payload
//
// Doubles are stored as their IEEE-754 bit patterns, so round trips are exact.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nsoinn {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                      std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void str(std::string_view s);
  void f64s(std::span<const double> values);  // without length prefix

  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
  std::vector<std::uint8_t> take() && { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

// Every read throws CorruptionError when it would run past the end.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  std::vector<double> f64s(std::size_t count);

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

using Magic = std::array<char, 8>;

std::vector<std::uint8_t> frame_payload(const Magic& magic, std::uint32_t version,
                                        std::span<const std::uint8_t> payload);

// Validates magic, version, length and checksum; returns the payload.
std::vector<std::uint8_t> unframe_payload(std::span<const std::uint8_t> file_bytes,
                                          const Magic& magic, std::uint32_t expected_version,
                                          std::string_view what_kind);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace nsoinn
