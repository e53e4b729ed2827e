#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "voipsteg/rng.hpp"

// Covert message representation shared by every steganographic channel:
// a packed bit sequence (MSB-first within each octet), a consuming cursor
// over it, and a minimal frame format (16-bit length prefix + payload +
// CRC-16/CCITT) used to prove end-to-end integrity of extracted streams.

namespace voipsteg {

class BitString {
public:
    BitString() = default;

    static BitString from_bytes(const std::vector<std::uint8_t>& bytes) {
        BitString s;
        s.bytes_ = bytes;
        s.nbits_ = bytes.size() * 8;
        return s;
    }

    // Hex string, two digits per octet; whitespace ignored.
    static BitString from_hex(const std::string& hex) {
        std::vector<std::uint8_t> bytes;
        int hi = -1;
        for (char c : hex) {
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r') continue;
            int v;
            if (c >= '0' && c <= '9') v = c - '0';
            else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
            else throw std::invalid_argument("invalid hex digit in covert payload");
            if (hi < 0) hi = v;
            else { bytes.push_back(static_cast<std::uint8_t>(hi << 4 | v)); hi = -1; }
        }
        if (hi >= 0) throw std::invalid_argument("odd number of hex digits in covert payload");
        return from_bytes(bytes);
    }

    static BitString from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open covert payload file: " + path);
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
        return from_bytes(bytes);
    }

    static BitString random(std::size_t nbits, std::uint64_t seed) {
        BitString s;
        s.reserve(nbits);
        rng::Sequence seq(seed, rng::kStreamMessage);
        std::uint64_t word = 0;
        for (std::size_t i = 0; i < nbits; ++i) {
            if (i % 64 == 0) word = seq.next();
            s.push_back((word >> (63 - i % 64)) & 1);
        }
        return s;
    }

    void reserve(std::size_t nbits) { bytes_.reserve((nbits + 7) / 8); }

    void push_back(bool bit) {
        if (nbits_ % 8 == 0) bytes_.push_back(0);
        if (bit) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (nbits_ % 8));
        ++nbits_;
    }

    void append(const BitString& other) {
        for (std::size_t i = 0; i < other.nbits_; ++i) push_back(other.bit(i));
    }

    // Append `width` bits of `value`, most significant first.
    void append_uint(std::uint64_t value, int width) {
        for (int k = width - 1; k >= 0; --k) push_back((value >> k) & 1);
    }

    bool bit(std::size_t i) const {
        return (bytes_[i / 8] >> (7 - i % 8)) & 1;
    }

    std::uint64_t read_uint(std::size_t pos, int width) const {
        std::uint64_t v = 0;
        for (int k = 0; k < width; ++k) v = v << 1 | static_cast<std::uint64_t>(bit(pos + k));
        return v;
    }

    BitString slice(std::size_t pos, std::size_t len) const {
        BitString s;
        s.reserve(len);
        for (std::size_t i = 0; i < len; ++i) s.push_back(bit(pos + i));
        return s;
    }

    std::size_t size() const { return nbits_; }
    bool empty() const { return nbits_ == 0; }

    // Packed octets, final partial octet zero-padded on the right.
    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

    friend bool operator==(const BitString& a, const BitString& b) {
        if (a.nbits_ != b.nbits_) return false;
        for (std::size_t i = 0; i < a.nbits_; ++i)
            if (a.bit(i) != b.bit(i)) return false;
        return true;
    }
    friend bool operator!=(const BitString& a, const BitString& b) { return !(a == b); }

private:
    std::vector<std::uint8_t> bytes_;
    std::size_t nbits_ = 0;
};

// CRC-16/CCITT (poly 0x1021, init 0xFFFF, MSB-first, no reflection) over an
// arbitrary bit sequence. Payloads are bit-granular, so the register is fed
// one bit at a time rather than via a byte table.
inline std::uint16_t crc16_ccitt(const BitString& bits) {
    std::uint16_t reg = 0xFFFF;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        bool top = (reg >> 15) & 1;
        reg = static_cast<std::uint16_t>(reg << 1);
        if (top != bits.bit(i)) reg ^= 0x1021;
    }
    return reg;
}

// A covert message with a consuming read cursor.
class CovertMessage {
public:
    CovertMessage() = default;
    explicit CovertMessage(BitString bits) : bits_(std::move(bits)) {}

    struct Take {
        BitString bits;
        bool short_read = false; // fewer bits returned than requested
    };

    // Returns min(k, remaining) bits in order. Never zero-pads.
    Take take(std::size_t k) {
        Take t;
        std::size_t avail = remaining();
        std::size_t n = k < avail ? k : avail;
        t.bits = bits_.slice(cursor_, n);
        t.short_read = n < k;
        cursor_ += n;
        return t;
    }

    std::size_t remaining() const { return bits_.size() - cursor_; }
    std::size_t length() const { return bits_.size(); }
    const BitString& bits() const { return bits_; }
    void rewind() { cursor_ = 0; }

private:
    BitString bits_;
    std::size_t cursor_ = 0;
};

// Frame layout: [16-bit payload bit-count][payload][16-bit CRC of payload].
constexpr std::size_t kFrameOverheadBits = 32;
constexpr std::size_t kFrameMaxPayloadBits = 65535;

inline BitString frame_encode(const BitString& payload) {
    if (payload.size() > kFrameMaxPayloadBits)
        throw std::length_error("covert message exceeds 65535 bits per frame");
    BitString out;
    out.reserve(payload.size() + kFrameOverheadBits);
    out.append_uint(payload.size(), 16);
    out.append(payload);
    out.append_uint(crc16_ccitt(payload), 16);
    return out;
}

enum class FrameStatus { ok, truncated, crc_mismatch };

struct FrameDecodeResult {
    FrameStatus status = FrameStatus::truncated;
    BitString payload;              // valid only when status == ok
    std::size_t bits_consumed = 0;  // 32 + length for ok/crc_mismatch
};

// Decodes one frame from the head of `bits`. Trailing bits are ignored,
// which lets the caller decode from a longer extracted stream.
inline FrameDecodeResult frame_decode(const BitString& bits) {
    FrameDecodeResult r;
    if (bits.size() < kFrameOverheadBits) return r;
    std::size_t len = bits.read_uint(0, 16);
    if (bits.size() < kFrameOverheadBits + len) return r;
    BitString payload = bits.slice(16, len);
    std::uint16_t crc = static_cast<std::uint16_t>(bits.read_uint(16 + len, 16));
    r.bits_consumed = kFrameOverheadBits + len;
    if (crc16_ccitt(payload) != crc) {
        r.status = FrameStatus::crc_mismatch;
        return r;
    }
    r.status = FrameStatus::ok;
    r.payload = std::move(payload);
    return r;
}

} // namespace voipsteg
