#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace d2turb {

// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(std::string_view text);
// Throws ErrorCode::Io if the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace d2turb
