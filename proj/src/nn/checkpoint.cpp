#include "revae/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "revae/core/binio.hpp"

namespace revae::nn {

namespace {
constexpr char kMagic[8] = {'R', 'V', 'A', 'R', '0', '0', '0', '1'};

void put_u64(std::string& s, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) s.push_back(char((v >> (8 * i)) & 0xff));
}
std::uint64_t get_u64(const std::string& s, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(s[off + i])) << (8 * i);
    return v;
}
}  // namespace

void save_archive(const std::filesystem::path& path, const ArchiveEntries& entries) {
    std::string out(kMagic, sizeof kMagic);
    put_u64(out, entries.size());
    for (const auto& [name, payload] : entries) {
        put_u64(out, name.size());
        out += name;
        put_u64(out, payload.size());
        out += payload;
    }
    atomic_write_file(path, out);
}

ArchiveEntries load_archive(const std::filesystem::path& path) {
    const std::string s = read_text_file(path);
    if (s.size() < 16 || std::memcmp(s.data(), kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("archive: bad magic in " + path.string());
    std::size_t off = 8;
    const std::uint64_t count = get_u64(s, off);
    off += 8;
    ArchiveEntries entries;
    for (std::uint64_t i = 0; i < count; ++i) {
        if (off + 8 > s.size()) throw std::runtime_error("archive: truncated " + path.string());
        const std::uint64_t name_len = get_u64(s, off);
        off += 8;
        if (off + name_len + 8 > s.size())
            throw std::runtime_error("archive: truncated " + path.string());
        std::string name = s.substr(off, name_len);
        off += name_len;
        const std::uint64_t payload_len = get_u64(s, off);
        off += 8;
        if (off + payload_len > s.size())
            throw std::runtime_error("archive: truncated " + path.string());
        entries.emplace_back(std::move(name), s.substr(off, payload_len));
        off += payload_len;
    }
    return entries;
}

const std::string* find_entry(const ArchiveEntries& entries, const std::string& name) {
    for (const auto& [n, payload] : entries)
        if (n == name) return &payload;
    return nullptr;
}

std::string floats_to_bytes(const std::vector<float>& v) {
    std::ostringstream os;
    write_f32_le(os, v.data(), v.size());
    return os.str();
}

std::vector<float> bytes_to_floats(const std::string& bytes) {
    if (bytes.size() % 4 != 0) throw std::runtime_error("tensor bytes not multiple of 4");
    std::istringstream is(bytes);
    std::vector<float> v(bytes.size() / 4);
    read_f32_le(is, v.data(), v.size());
    return v;
}

}  // namespace revae::nn
