#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace sentinel {

// Lower-case hex SHA-256 digests, used for manifests and corpus ids.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace sentinel
