// SHA-256 digests for provenance records.
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace mrld {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace mrld
