#include "revae/core/binio.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace revae {

namespace fs = std::filesystem;

void write_f32_le(std::ostream& os, const float* data, std::size_t n) {
    std::vector<char> buf(n * 4);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, &data[i], 4);
        buf[4 * i] = char(bits & 0xff);
        buf[4 * i + 1] = char((bits >> 8) & 0xff);
        buf[4 * i + 2] = char((bits >> 16) & 0xff);
        buf[4 * i + 3] = char((bits >> 24) & 0xff);
    }
    os.write(buf.data(), std::streamsize(buf.size()));
}

void read_f32_le(std::istream& is, float* data, std::size_t n) {
    std::vector<char> buf(n * 4);
    is.read(buf.data(), std::streamsize(buf.size()));
    if (std::size_t(is.gcount()) != buf.size()) throw std::runtime_error("read_f32_le: short read");
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t bits = (std::uint32_t(std::uint8_t(buf[4 * i]))) |
                                   (std::uint32_t(std::uint8_t(buf[4 * i + 1])) << 8) |
                                   (std::uint32_t(std::uint8_t(buf[4 * i + 2])) << 16) |
                                   (std::uint32_t(std::uint8_t(buf[4 * i + 3])) << 24);
        std::memcpy(&data[i], &bits, 4);
    }
}

void atomic_write_file(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open for writing: " + tmp.string());
        f.write(bytes.data(), std::streamsize(bytes.size()));
        if (!f) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

void atomic_write_f32_file(const fs::path& path, const std::vector<float>& v) {
    std::ostringstream os;
    write_f32_le(os, v.data(), v.size());
    atomic_write_file(path, os.str());
}

std::vector<float> read_f32_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path.string());
    f.seekg(0, std::ios::end);
    const auto bytes = std::size_t(f.tellg());
    f.seekg(0);
    if (bytes % 4 != 0) throw std::runtime_error("file size not a multiple of 4: " + path.string());
    std::vector<float> v(bytes / 4);
    read_f32_le(f, v.data(), v.size());
    return v;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace revae
