#ifndef ISOSCAPE_DETAIL_HASH_HPP
#define ISOSCAPE_DETAIL_HASH_HPP

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace isoscape {
namespace detail {

// Streaming 64-bit FNV-1a. Used for corpus content hashes and run-manifest
// content hashes; stable across platforms for the same byte stream.
class Fnv1a {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            hash_ ^= static_cast<std::uint64_t>(p[i]);
            hash_ *= 0x100000001B3ULL;
        }
    }

    void str(std::string_view s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }

    void u8(std::uint8_t v) { bytes(&v, 1); }

    void u32(std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
        bytes(b, 4);
    }

    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
        bytes(b, 8);
    }

    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        u64(bits);
    }

    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        u32(bits);
    }

    std::uint64_t digest() const { return hash_; }

private:
    std::uint64_t hash_ = 0xCBF29CE484222325ULL;
};

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

}
}

#endif
