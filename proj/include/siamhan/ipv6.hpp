#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace siamhan {

/// 128-bit IPv6 address held in network byte order.
class Ipv6Address {
public:
    using Bytes = std::array<std::uint8_t, 16>;

    Ipv6Address() = default;
    explicit Ipv6Address(const Bytes& bytes) : bytes_(bytes) {}

    /// Accepts any textual form inet_pton understands.
    static std::optional<Ipv6Address> parse(std::string_view text);

    /// RFC 5952 canonical text (lowercase, longest zero run compressed).
    std::string to_string() const;

    /// 32 lowercase hex characters, no separators.
    std::string to_hex() const;

    const Bytes& bytes() const { return bytes_; }

    /// Upper and lower 64-bit halves (routing prefix + subnet id, interface id).
    std::uint64_t prefix64() const;
    std::uint64_t iid() const;
    static Ipv6Address from_halves(std::uint64_t prefix, std::uint64_t iid);

    auto operator<=>(const Ipv6Address&) const = default;

private:
    Bytes bytes_{};
};

} // namespace siamhan

template <>
struct std::hash<siamhan::Ipv6Address> {
    std::size_t operator()(const siamhan::Ipv6Address& a) const noexcept {
        return std::hash<std::uint64_t>{}(a.prefix64() * 0x9e3779b97f4a7c15ULL ^ a.iid());
    }
};
