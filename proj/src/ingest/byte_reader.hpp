#pragma once

#include "siamhan/ingest.hpp"

#include <cstdint>
#include <span>
#include <string>

namespace siamhan::detail {

// Bounds-checked cursor over a byte span. Every read past the end throws
// IngestError(malformed_record), so nested length fields can never escape
// their enclosing container.
class ByteReader {
public:
    explicit ByteReader(ByteView data) : data_(data) {}

    std::size_t remaining() const { return data_.size() - pos_; }
    bool empty() const { return remaining() == 0; }

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }

    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
        pos_ += 2;
        return v;
    }

    std::uint32_t u24() {
        need(3);
        std::uint32_t v = (std::uint32_t{data_[pos_]} << 16) | (std::uint32_t{data_[pos_ + 1]} << 8) |
                          data_[pos_ + 2];
        pos_ += 3;
        return v;
    }

    ByteView take(std::size_t n) {
        need(n);
        auto out = data_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    void skip(std::size_t n) { take(n); }

    // Reads a length prefix of `width` bytes and returns a sub-reader over
    // exactly that many following bytes.
    ByteReader vector(int width) {
        std::size_t len = 0;
        switch (width) {
        case 1: len = u8(); break;
        case 2: len = u16(); break;
        default: len = u24(); break;
        }
        return ByteReader(take(len));
    }

private:
    void need(std::size_t n) const {
        if (n > remaining()) {
            throw IngestError(IngestErrc::malformed_record,
                              "length field exceeds available bytes (need " + std::to_string(n) +
                                  ", have " + std::to_string(remaining()) + ")");
        }
    }

    ByteView data_;
    std::size_t pos_ = 0;
};

} // namespace siamhan::detail
