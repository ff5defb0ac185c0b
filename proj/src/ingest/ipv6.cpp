#include "siamhan/ipv6.hpp"

#include <arpa/inet.h>

#include <cstdio>

namespace siamhan {

std::optional<Ipv6Address> Ipv6Address::parse(std::string_view text) {
    if (text.empty() || text.size() >= INET6_ADDRSTRLEN) {
        return std::nullopt;
    }
    std::string buf(text);
    Bytes bytes{};
    if (inet_pton(AF_INET6, buf.c_str(), bytes.data()) != 1) {
        return std::nullopt;
    }
    return Ipv6Address(bytes);
}

std::string Ipv6Address::to_string() const {
    char buf[INET6_ADDRSTRLEN];
    inet_ntop(AF_INET6, bytes_.data(), buf, sizeof(buf));
    return buf;
}

std::string Ipv6Address::to_hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(32);
    for (auto b : bytes_) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

std::uint64_t Ipv6Address::prefix64() const {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v = (v << 8) | bytes_[i];
    }
    return v;
}

std::uint64_t Ipv6Address::iid() const {
    std::uint64_t v = 0;
    for (int i = 8; i < 16; ++i) {
        v = (v << 8) | bytes_[i];
    }
    return v;
}

Ipv6Address Ipv6Address::from_halves(std::uint64_t prefix, std::uint64_t iid) {
    Bytes b{};
    for (int i = 0; i < 8; ++i) {
        b[7 - i] = static_cast<std::uint8_t>(prefix >> (8 * i));
        b[15 - i] = static_cast<std::uint8_t>(iid >> (8 * i));
    }
    return Ipv6Address(b);
}

} // namespace siamhan
