#ifndef SEG_SRC_BINIO_HPP
#define SEG_SRC_BINIO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "seg/errors.hpp"

// Little-endian binary block helpers shared by the embedding and checkpoint
// containers.

namespace seg::binio {

inline void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

inline std::uint64_t read_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw IoError("unexpected end of file reading u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

inline void write_f64_block(std::ostream& out, std::span<const double> data) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size() * sizeof(double)));
    } else {
        for (double d : data) {
            std::uint64_t bits;
            std::memcpy(&bits, &d, 8);
            write_u64(out, bits);
        }
    }
}

inline void read_f64_block(std::istream& in, std::span<double> data) {
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(double)));
        if (!in) throw IoError("unexpected end of file reading f64 block");
    } else {
        for (double& d : data) {
            std::uint64_t bits = read_u64(in);
            std::memcpy(&d, &bits, 8);
        }
    }
}

}  // namespace seg::binio

#endif  // SEG_SRC_BINIO_HPP
