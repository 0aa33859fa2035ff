#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace dposf {

/// 64-bit FNV-1a over the bytes of `data`, as 16 lowercase hex digits. Used for determinism
/// checks and report provenance, not for security.
std::string content_digest(std::string_view data);

/// Digest of a file's bytes. Throws std::runtime_error if it cannot be read.
std::string file_digest(const std::string& path);

}  // namespace dposf
