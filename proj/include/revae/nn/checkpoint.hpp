#pragma once

// Single-file model archive: a sequence of named byte entries (config JSON,
// float32 LE parameter tensors, training-history CSV).

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace revae::nn {

using ArchiveEntries = std::vector<std::pair<std::string, std::string>>;

void save_archive(const std::filesystem::path& path, const ArchiveEntries& entries);
ArchiveEntries load_archive(const std::filesystem::path& path);

const std::string* find_entry(const ArchiveEntries& entries, const std::string& name);

std::string floats_to_bytes(const std::vector<float>& v);
std::vector<float> bytes_to_floats(const std::string& bytes);

}  // namespace revae::nn
