#include "nsoinn/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "nsoinn/error.hpp"

namespace nsoinn {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed) noexcept {
  std::uint64_t h = seed;
  for (const auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(std::string_view s) {
  u64(s.size());
  bytes_.insert(bytes_.end(), s.begin(), s.end());
}

void ByteWriter::f64s(std::span<const double> values) {
  bytes_.reserve(bytes_.size() + 8 * values.size());
  for (const double v : values) f64(v);
}

void ByteReader::need(std::size_t n) const {
  if (n > remaining()) {
    throw CorruptionError("unexpected end of payload (needed " + std::to_string(n) +
                          " bytes, " + std::to_string(remaining()) + " left)");
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  return bytes_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() {
  const auto n = u64();
  need(n);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::vector<double> ByteReader::f64s(std::size_t count) {
  need(count * 8);
  std::vector<double> out(count);
  for (auto& v : out) v = f64();
  return out;
}

std::vector<std::uint8_t> frame_payload(const Magic& magic, std::uint32_t version,
                                        std::span<const std::uint8_t> payload) {
  ByteWriter w;
  for (const char c : magic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(version);
  w.u64(payload.size());
  auto out = std::move(w).take();
  out.insert(out.end(), payload.begin(), payload.end());
  ByteWriter tail;
  tail.u64(fnv1a64(payload));
  out.insert(out.end(), tail.bytes().begin(), tail.bytes().end());
  return out;
}

std::vector<std::uint8_t> unframe_payload(std::span<const std::uint8_t> file_bytes,
                                          const Magic& magic, std::uint32_t expected_version,
                                          std::string_view what_kind) {
  const std::string kind(what_kind);
  if (file_bytes.size() < magic.size() ||
      std::memcmp(file_bytes.data(), magic.data(), magic.size()) != 0) {
    throw CorruptionError("not a " + kind + " file (bad magic)");
  }
  ByteReader r(file_bytes.subspan(magic.size()));
  const auto version = r.u32();
  if (version != expected_version) {
    throw VersionMismatchError(kind, version, expected_version);
  }
  const auto length = r.u64();
  if (length > r.remaining() || r.remaining() - length < 8) {
    throw CorruptionError(kind + " file is truncated");
  }
  const std::size_t start = magic.size() + 4 + 8;
  std::span<const std::uint8_t> payload = file_bytes.subspan(start, length);
  ByteReader tail(file_bytes.subspan(start + length));
  const auto stored = tail.u64();
  if (!tail.at_end()) throw CorruptionError(kind + " file has trailing bytes");
  if (stored != fnv1a64(payload)) throw CorruptionError(kind + " checksum mismatch");
  return {payload.begin(), payload.end()};
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace nsoinn
