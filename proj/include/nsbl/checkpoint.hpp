#pragma once

#include <filesystem>
#include <string>

#include "nsbl/fields.hpp"

namespace nsbl {

// Layout (all little-endian):
//   "NSBL1" | u32 N | u32 n | f64 L | f64 t | u32 components | u32 0x01020304
//   then components * n*n*(n/2+1) complex<f64> coefficients, component-major.
inline constexpr char kCheckpointMagic[5] = {'N', 'S', 'B', 'L', '1'};

/// Serializes v into a byte string in the checkpoint layout.
std::string encode_checkpoint(const SpectralVelocity& v);
/// Parses a checkpoint byte string. Throws CorruptCheckpoint.
SpectralVelocity decode_checkpoint(const std::string& bytes);

/// Writes the checkpoint and returns the SHA-256 of the bytes written.
std::string write_checkpoint(const std::filesystem::path& path, const SpectralVelocity& v);
/// Reads a checkpoint; when `expected_sha256` is non-empty the content hash
/// must match. Throws IoError / CorruptCheckpoint.
SpectralVelocity read_checkpoint(const std::filesystem::path& path, const std::string& expected_sha256 = {});

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace nsbl
