#pragma once

#include <string>

namespace posewatch {

// Writes via a temp file in the same directory, then renames into place.
void write_file_atomic(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

// FNV-1a, used for checkpoint checksums and config fingerprints.
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull);

std::string to_hex(std::uint64_t v);

}  // namespace posewatch
