#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace econfit {

// 64-bit FNV-1a. Used for rank-order hashes and artifact content hashes.
class Fnv1a64 {
public:
    Fnv1a64& update(const void* data, std::size_t size) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            state_ ^= bytes[i];
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }

    Fnv1a64& update_u64(std::uint64_t v) {
        unsigned char bytes[8];
        for (int i = 0; i < 8; ++i) {
            bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffU);
        }
        return update(bytes, 8);
    }

    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a64(std::string_view data) {
    Fnv1a64 h;
    h.update(data.data(), data.size());
    return h.digest();
}

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xfU];
        v >>= 4;
    }
    return out;
}

} // namespace econfit
