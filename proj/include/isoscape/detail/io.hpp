#ifndef ISOSCAPE_DETAIL_IO_HPP
#define ISOSCAPE_DETAIL_IO_HPP

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace isoscape {
namespace detail {

// Little-endian binary primitives for the on-disk formats. Written
// byte-by-byte so the files are identical regardless of host endianness.

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_i32(std::ostream& os, std::int32_t v) {
    write_u32(os, static_cast<std::uint32_t>(v));
}

inline void write_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    write_u32(os, bits);
}

inline void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    write_u64(os, bits);
}

inline std::uint32_t read_u32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) {
        throw std::runtime_error("truncated file while reading " + what);
    }
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

inline std::uint64_t read_u64(std::istream& is, const std::string& what) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) {
        throw std::runtime_error("truncated file while reading " + what);
    }
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

inline std::int32_t read_i32(std::istream& is, const std::string& what) {
    return static_cast<std::int32_t>(read_u32(is, what));
}

inline float read_f32(std::istream& is, const std::string& what) {
    std::uint32_t bits = read_u32(is, what);
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

inline double read_f64(std::istream& is, const std::string& what) {
    std::uint64_t bits = read_u64(is, what);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, const std::string& what) {
    std::uint32_t n = read_u32(is, what);
    std::string s(n, '\0');
    if (n > 0 && !is.read(s.data(), n)) {
        throw std::runtime_error("truncated file while reading " + what);
    }
    return s;
}

inline void expect_magic(std::istream& is, const char magic[4], const std::string& path) {
    char buf[4];
    if (!is.read(buf, 4) || std::memcmp(buf, magic, 4) != 0) {
        throw std::runtime_error(path + ": bad magic, expected \"" + std::string(magic, 4) + "\"");
    }
}

// Deterministic shortest-ish float formatting for CSV output: %.17g always
// round-trips a double and is locale-independent with snprintf.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

inline std::string format_double(double v, int precision) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return std::string(buf);
}

// Shortest representation that still parses back to the same double. Used
// where the number becomes part of a name (column headers, file stems) and
// "0.9" beats "0.90000000000000002".
inline std::string format_double_short(double v) {
    char buf[48];
    for (int precision = 1; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return std::string(buf);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(s.substr(start));
            return parts;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

inline int parse_int(const std::string& s, const std::string& context) {
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(s, &used);
    } catch (const std::exception&) {
        throw std::runtime_error("bad integer \"" + s + "\" in " + context);
    }
    if (used != s.size() || s.empty()) {
        throw std::runtime_error("bad integer \"" + s + "\" in " + context);
    }
    return v;
}

inline std::int64_t parse_i64(const std::string& s, const std::string& context) {
    std::size_t used = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        throw std::runtime_error("bad integer \"" + s + "\" in " + context);
    }
    if (used != s.size() || s.empty()) {
        throw std::runtime_error("bad integer \"" + s + "\" in " + context);
    }
    return v;
}

inline double parse_real(const std::string& s, const std::string& context) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw std::runtime_error("bad real \"" + s + "\" in " + context);
    }
    if (used != s.size() || s.empty()) {
        throw std::runtime_error("bad real \"" + s + "\" in " + context);
    }
    return v;
}

inline std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream os(path, binary ? (std::ios::out | std::ios::binary) : std::ios::out);
    if (!os) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    return os;
}

inline std::ifstream open_in(const std::string& path, bool binary = false) {
    std::ifstream is(path, binary ? (std::ios::in | std::ios::binary) : std::ios::in);
    if (!is) {
        throw std::runtime_error("missing file: " + path);
    }
    return is;
}

}
}

#endif
