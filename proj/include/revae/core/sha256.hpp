#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace revae {

// Incremental SHA-256; used for artifact digests and stage cache keys.
class Sha256 {
public:
    Sha256() { reset(); }

    void reset();
    void update(const void* data, std::size_t len);
    void update(std::string_view s) { update(s.data(), s.size()); }

    std::array<std::uint8_t, 32> digest();
    std::string hex();

private:
    void process_block(const std::uint8_t* block);

    std::uint32_t h_[8];
    std::uint64_t total_len_ = 0;
    std::uint8_t buf_[64];
    std::size_t buf_len_ = 0;
};

std::string sha256_hex(std::string_view data);
std::string sha256_hex(const void* data, std::size_t len);
// Throws std::runtime_error if the file cannot be read.
std::string sha256_file_hex(const std::string& path);

}  // namespace revae
