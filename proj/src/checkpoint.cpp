#include "nsbl/checkpoint.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace nsbl {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::uint32_t kEndianTag = 0x01020304u;
constexpr std::size_t kHeaderSize = 5 + 4 + 4 + 8 + 8 + 4 + 4;

template <class T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw CorruptCheckpoint("checkpoint truncated in header");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string encode_checkpoint(const SpectralVelocity& v) {
  const TorusGrid& g = v.grid;
  std::string out;
  out.reserve(kHeaderSize + 3 * g.spec_size() * sizeof(Complex));
  out.append(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(out, std::uint32_t(g.N));
  put<std::uint32_t>(out, std::uint32_t(g.n));
  put<double>(out, g.L);
  put<double>(out, v.t);
  put<std::uint32_t>(out, 3u);
  put<std::uint32_t>(out, kEndianTag);
  for (const auto& a : v.c) {
    if (std::size_t(a.size()) != g.spec_size()) throw ShapeMismatch("coefficient array does not match grid");
    out.append(reinterpret_cast<const char*>(a.data()), g.spec_size() * sizeof(Complex));
  }
  return out;
}

SpectralVelocity decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    throw CorruptCheckpoint("bad checkpoint magic");
  std::size_t pos = sizeof(kCheckpointMagic);
  const auto N = get<std::uint32_t>(bytes, pos);
  const auto n = get<std::uint32_t>(bytes, pos);
  const auto L = get<double>(bytes, pos);
  const auto t = get<double>(bytes, pos);
  const auto comps = get<std::uint32_t>(bytes, pos);
  const auto tag = get<std::uint32_t>(bytes, pos);
  if (tag != kEndianTag) throw CorruptCheckpoint("checkpoint endianness tag mismatch");
  if (comps != 3) throw CorruptCheckpoint("unexpected component count");

  TorusGrid g;
  try {
    g = TorusGrid(int(n), L, int(N));
  } catch (const BadSpec& e) {
    throw CorruptCheckpoint(std::string("checkpoint grid invalid: ") + e.what());
  }
  const std::size_t body = 3 * g.spec_size() * sizeof(Complex);
  if (bytes.size() != kHeaderSize + body) throw CorruptCheckpoint("checkpoint size does not match header");

  SpectralVelocity v(g, t);
  for (auto& a : v.c) {
    std::memcpy(reinterpret_cast<char*>(a.data()), bytes.data() + pos, g.spec_size() * sizeof(Complex));
    pos += g.spec_size() * sizeof(Complex);
  }
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string write_checkpoint(const std::filesystem::path& path, const SpectralVelocity& v) {
  const std::string bytes = encode_checkpoint(v);
  write_file(path, bytes);
  return sha256_hex(bytes);
}

SpectralVelocity read_checkpoint(const std::filesystem::path& path, const std::string& expected_sha256) {
  const std::string bytes = read_file(path);
  if (!expected_sha256.empty() && sha256_hex(bytes) != expected_sha256)
    throw CorruptCheckpoint("content hash mismatch for " + path.string());
  return decode_checkpoint(bytes);
}

}  // namespace nsbl
