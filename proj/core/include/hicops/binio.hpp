#ifndef HICOPS_BINIO_HPP
#define HICOPS_BINIO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace hicops {

static_assert(std::endian::native == std::endian::little,
              "wire formats are little-endian; big-endian hosts unsupported");

template <typename T>
void put_le(std::vector<std::uint8_t>& buf, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint8_t tmp[sizeof(T)];
    std::memcpy(tmp, &v, sizeof(T));
    buf.insert(buf.end(), tmp, tmp + sizeof(T));
}

template <typename T>
T get_le(std::span<const std::uint8_t> buf, std::size_t& off) {
    static_assert(std::is_trivially_copyable_v<T>);
    if (off + sizeof(T) > buf.size())
        throw std::runtime_error("binary record truncated");
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

template <typename T>
void write_le(std::ostream& os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    static_assert(std::is_trivially_copyable_v<T>);
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("binary stream truncated");
    return v;
}

}  // namespace hicops

#endif
