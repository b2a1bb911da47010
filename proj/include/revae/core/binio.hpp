#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace revae {

// Little-endian float32 blobs, the on-disk number format for recordings,
// epochs, features and model parameters.

void write_f32_le(std::ostream& os, const float* data, std::size_t n);
void read_f32_le(std::istream& is, float* data, std::size_t n);

// Writes to <path>.tmp then renames, so readers never observe partial files.
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);
void atomic_write_f32_file(const std::filesystem::path& path, const std::vector<float>& v);

std::vector<float> read_f32_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace revae
