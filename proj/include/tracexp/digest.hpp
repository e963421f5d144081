#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace tracexp {

// Lower-case hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

// SHA-256 of a file's contents; throws DataError if the file is unreadable.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace tracexp
