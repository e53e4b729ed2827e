#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "voipsteg/bitstream.hpp"
#include "voipsteg/packet_model.hpp"

// The per-packet steganographic channels: encapsulation-header fields,
// RTP free/unused fields, the SRTP/SRTCP authentication tag, RTCP report
// blocks and payload watermarking. One embed/extract/capacity contract for
// all of them, plus the closed-form bandwidth expressions.

namespace voipsteg {

enum class ChannelKind { header, rtp_field, auth_tag, rtcp_report, watermark };

inline const char* to_string(ChannelKind k) {
    switch (k) {
        case ChannelKind::header: return "header";
        case ChannelKind::rtp_field: return "rtp_field";
        case ChannelKind::auth_tag: return "auth_tag";
        case ChannelKind::rtcp_report: return "rtcp_report";
        case ChannelKind::watermark: return "watermark";
    }
    return "?";
}

enum class WatermarkMode { qim, abstract_rate };

struct ChannelConfig {
    std::string name;        // report label, e.g. "IP/UDP"
    ChannelKind kind = ChannelKind::header;

    // header / rtp_field: target bit ranges; extras apply to the first
    // packet only (initial-value fields), giving SB_0 > SB_j.
    std::vector<FieldRef> field_map;
    std::vector<FieldRef> first_packet_extra;

    // auth_tag: SB_AT bits riding either the RTP or the RTCP stream.
    int auth_tag_bits = 32;
    PacketKind auth_target = PacketKind::rtp;

    // rtcp_report: S_CP, N_RB, S_RB plus the optional NTP low-bits slot.
    int rtcp_scp = 1;
    int rtcp_nrb = 1;
    int rtcp_srb = 160;
    bool rtcp_use_ntp_slot = true;

    // watermark: bits/packet as an exact rational so credit accumulation
    // never drifts (0.6 -> 3/5). qim mode mutates payload sample LSBs,
    // abstract mode models a configured-rate algorithm without touching
    // samples.
    std::int64_t wm_rate_num = 3;
    std::int64_t wm_rate_den = 5;
    WatermarkMode wm_mode = WatermarkMode::qim;

    std::int64_t per_packet_bits() const { // SB_j
        std::int64_t sum = 0;
        for (const auto& f : field_map) sum += f.width;
        return sum;
    }
    std::int64_t first_packet_bits() const { // SB_0
        std::int64_t sum = per_packet_bits();
        for (const auto& f : first_packet_extra) sum += f.width;
        return sum;
    }
    double watermark_rate() const {
        return static_cast<double>(wm_rate_num) / static_cast<double>(wm_rate_den);
    }

    void validate() const {
        switch (kind) {
            case ChannelKind::header:
            case ChannelKind::rtp_field:
                if (field_map.empty())
                    throw std::invalid_argument("channel '" + name + "': empty field map");
                break;
            case ChannelKind::auth_tag:
                if (auth_tag_bits <= 0 || auth_tag_bits % 8 != 0)
                    throw std::invalid_argument("channel '" + name +
                                                "': auth tag bits must be a positive multiple of 8");
                break;
            case ChannelKind::rtcp_report:
                if (rtcp_scp < 0 || rtcp_nrb < 0 || rtcp_srb < 0)
                    throw std::invalid_argument("channel '" + name + "': negative RTCP geometry");
                break;
            case ChannelKind::watermark:
                if (wm_rate_num < 0 || wm_rate_den <= 0)
                    throw std::invalid_argument("channel '" + name + "': watermark rate must be >= 0");
                break;
        }
    }
};

// Per-call mutable state. Only the watermark needs any: its fractional rate
// is realized by credit accumulation, floor(total credit) bits embedded so
// far. Sender and receiver each run their own copy over the same packet
// sequence.
struct ChannelState {
    std::int64_t wm_packets_seen = 0;
    std::int64_t wm_bits_emitted = 0;
};

struct EmbedRecord {
    std::int64_t send_us = 0;
    std::int64_t bits = 0;
};

struct ChannelLedger {
    std::int64_t embedded_bits = 0;
    std::int64_t extracted_bits = 0; // embedded bits that survived to extraction
    std::vector<EmbedRecord> embeds;
};

namespace detail {

inline bool kind_compatible(const ChannelConfig& c, const VoipPacket& p) {
    switch (c.kind) {
        case ChannelKind::header:
        case ChannelKind::rtp_field:
        case ChannelKind::watermark:
            return p.kind == PacketKind::rtp;
        case ChannelKind::auth_tag:
            return p.kind == c.auth_target;
        case ChannelKind::rtcp_report:
            return p.kind == PacketKind::rtcp && p.rtcp.has_value();
    }
    return false;
}

inline void require_compatible(const ChannelConfig& c, const VoipPacket& p) {
    if (!kind_compatible(c, p))
        throw std::invalid_argument("channel '" + c.name + "' (" + to_string(c.kind) +
                                    ") cannot operate on a " + to_string(p.kind) + " packet");
}

inline void write_tag_bits(std::vector<std::uint8_t>& tag, const BitString& bits,
                           std::size_t nbits) {
    for (std::size_t i = 0; i < nbits; ++i) {
        std::uint8_t mask = static_cast<std::uint8_t>(0x80u >> (i % 8));
        if (bits.bit(i)) tag[i / 8] |= mask;
        else tag[i / 8] &= static_cast<std::uint8_t>(~mask);
    }
}

} // namespace detail

// Writable covert capacity of `packet` for this channel. Watermark capacity
// is consumed as it is queried: each call advances the credit accumulator by
// one packet, exactly as the embed pipeline sees packets.
inline std::int64_t channel_capacity(const ChannelConfig& cfg, ChannelState& state,
                                     const VoipPacket& packet, bool is_first) {
    detail::require_compatible(cfg, packet);
    switch (cfg.kind) {
        case ChannelKind::header:
        case ChannelKind::rtp_field:
            return is_first ? cfg.first_packet_bits() : cfg.per_packet_bits();
        case ChannelKind::auth_tag:
            return cfg.auth_tag_bits;
        case ChannelKind::rtcp_report: {
            std::int64_t cap = static_cast<std::int64_t>(cfg.rtcp_scp) * cfg.rtcp_nrb * cfg.rtcp_srb;
            if (cfg.rtcp_use_ntp_slot) cap += 32;
            return cap;
        }
        case ChannelKind::watermark: {
            ++state.wm_packets_seen;
            std::int64_t total = state.wm_packets_seen * cfg.wm_rate_num / cfg.wm_rate_den;
            std::int64_t k = total - state.wm_bits_emitted;
            state.wm_bits_emitted = total;
            return k;
        }
    }
    return 0;
}

// Embeds the next min(capacity, remaining) message bits into the packet and
// logs the consumption. Returns bits written.
inline std::int64_t embed(const ChannelConfig& cfg, ChannelState& state, const SlotRegistry& registry,
                          VoipPacket& packet, CovertMessage& message, ChannelLedger& ledger,
                          bool is_first = false) {
    std::int64_t cap = channel_capacity(cfg, state, packet, is_first);
    auto taken = message.take(static_cast<std::size_t>(cap));
    const BitString& bits = taken.bits;
    std::size_t n = bits.size();

    switch (cfg.kind) {
        case ChannelKind::header:
        case ChannelKind::rtp_field: {
            std::size_t off = 0;
            auto write_map = [&](const std::vector<FieldRef>& map) {
                for (const auto& ref : map) {
                    if (off >= n) break;
                    std::size_t w = static_cast<std::size_t>(ref.width);
                    if (off + w <= n) {
                        field_write_bits(packet, registry, ref, bits, off);
                        off += w;
                    } else {
                        // partial fill of the final field: write the prefix
                        // into the range's high bits
                        FieldRef head = ref;
                        head.width = static_cast<int>(n - off);
                        head.lsb = ref.lsb + ref.width - head.width;
                        field_write_bits(packet, registry, head, bits, off);
                        off = n;
                    }
                }
            };
            if (is_first) write_map(cfg.first_packet_extra);
            write_map(cfg.field_map);
            break;
        }
        case ChannelKind::auth_tag: {
            auto& tag = packet.kind == PacketKind::rtcp ? packet.rtcp->auth_tag : packet.auth_tag;
            if (static_cast<int>(tag.size()) * 8 != cfg.auth_tag_bits)
                throw std::invalid_argument("channel '" + cfg.name +
                                            "': packet carries no auth tag of the configured width");
            detail::write_tag_bits(tag, bits, n);
            break;
        }
        case ChannelKind::rtcp_report: {
            RtcpCompound& c = *packet.rtcp;
            std::int64_t rep_cap = static_cast<std::int64_t>(cfg.rtcp_scp) * cfg.rtcp_nrb * cfg.rtcp_srb;
            if (c.report_bits.size() < static_cast<std::size_t>(rep_cap))
                throw std::invalid_argument("channel '" + cfg.name +
                                            "': compound smaller than configured capacity");
            BitString rebuilt;
            rebuilt.reserve(c.report_bits.size());
            for (std::size_t i = 0; i < c.report_bits.size(); ++i)
                rebuilt.push_back(i < n && i < static_cast<std::size_t>(rep_cap)
                                      ? bits.bit(i) : c.report_bits.bit(i));
            c.report_bits = std::move(rebuilt);
            if (cfg.rtcp_use_ntp_slot && n > static_cast<std::size_t>(rep_cap)) {
                std::size_t extra = n - static_cast<std::size_t>(rep_cap);
                for (std::size_t k = 0; k < extra; ++k) {
                    std::uint32_t mask = 1u << (31 - k);
                    if (bits.bit(static_cast<std::size_t>(rep_cap) + k)) c.ntp_ts_low |= mask;
                    else c.ntp_ts_low &= ~mask;
                }
            }
            break;
        }
        case ChannelKind::watermark: {
            if (cfg.wm_mode == WatermarkMode::qim) {
                if (n > packet.payload.size())
                    throw std::invalid_argument("channel '" + cfg.name +
                                                "': watermark bits exceed payload samples");
                // even/odd quantization of the first n samples
                for (std::size_t i = 0; i < n; ++i)
                    packet.payload[i] = static_cast<std::uint8_t>(
                        (packet.payload[i] & ~1u) | (bits.bit(i) ? 1u : 0u));
            } else {
                packet.wm_virtual = bits;
            }
            break;
        }
    }

    ledger.embedded_bits += static_cast<std::int64_t>(n);
    ledger.embeds.push_back({packet.send_us, static_cast<std::int64_t>(n)});
    return static_cast<std::int64_t>(n);
}

// Reads the channel's carrier bits back out. Deterministic given the packet:
// a matching embed yields the embedded prefix, an untouched packet yields the
// carrier's original content (the frame layer is responsible for integrity).
inline BitString extract(const ChannelConfig& cfg, ChannelState& state, const SlotRegistry& registry,
                         const VoipPacket& packet, bool is_first = false) {
    std::int64_t cap = channel_capacity(cfg, state, packet, is_first);
    BitString out;
    out.reserve(static_cast<std::size_t>(cap));

    switch (cfg.kind) {
        case ChannelKind::header:
        case ChannelKind::rtp_field: {
            if (is_first)
                for (const auto& ref : cfg.first_packet_extra)
                    out.append(field_read_bits(packet, registry, ref));
            for (const auto& ref : cfg.field_map)
                out.append(field_read_bits(packet, registry, ref));
            break;
        }
        case ChannelKind::auth_tag: {
            const auto& tag = packet.kind == PacketKind::rtcp ? packet.rtcp->auth_tag
                                                              : packet.auth_tag;
            for (int i = 0; i < cfg.auth_tag_bits && i < static_cast<int>(tag.size()) * 8; ++i)
                out.push_back((tag[static_cast<std::size_t>(i / 8)] >> (7 - i % 8)) & 1);
            break;
        }
        case ChannelKind::rtcp_report: {
            const RtcpCompound& c = *packet.rtcp;
            std::int64_t rep_cap = static_cast<std::int64_t>(cfg.rtcp_scp) * cfg.rtcp_nrb * cfg.rtcp_srb;
            for (std::int64_t i = 0; i < rep_cap && i < static_cast<std::int64_t>(c.report_bits.size()); ++i)
                out.push_back(c.report_bits.bit(static_cast<std::size_t>(i)));
            if (cfg.rtcp_use_ntp_slot)
                for (int k = 0; k < 32; ++k) out.push_back((c.ntp_ts_low >> (31 - k)) & 1);
            break;
        }
        case ChannelKind::watermark: {
            if (cfg.wm_mode == WatermarkMode::qim) {
                for (std::int64_t i = 0; i < cap && i < static_cast<std::int64_t>(packet.payload.size()); ++i)
                    out.push_back(packet.payload[static_cast<std::size_t>(i)] & 1);
            } else {
                // abstract mode: the modeled algorithm recovers what was put in
                out = packet.wm_virtual;
            }
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Closed-form bandwidth expressions.
// ---------------------------------------------------------------------------

// Per-packet rate of free/unused-field steganography when the first packet
// carries SB_0 bits and each of the l following packets carries SB_j.
inline double prbr_ns(double sb0, double sbj, std::int64_t l) {
    if (l < 0) throw std::invalid_argument("prbr_ns: l must be >= 0");
    return (sb0 + static_cast<double>(l) * sbj) / (static_cast<double>(l) + 1.0);
}

// Auth-tag channel rate: SB_AT bits every I_p milliseconds.
inline double rbr_srtp(double sb_at, double ip_ms) {
    if (ip_ms <= 0) throw std::invalid_argument("rbr_srtp: packet interval must be positive");
    return sb_at * 1000.0 / ip_ms;
}

// RTCP report channel per-packet rate.
inline double prbr_rtcp(double s_cp, double n_rb, double s_rb) {
    if (s_cp < 0 || n_rb < 0 || s_rb < 0) throw std::invalid_argument("prbr_rtcp: negative count");
    return s_cp * n_rb * s_rb;
}

// RTCP auth-tag channel rate over a call of T seconds carrying l compounds.
inline double rbr_srtcp(double sb_at, std::int64_t l, double t_s) {
    if (t_s <= 0) throw std::invalid_argument("rbr_srtcp: call duration must be positive");
    return sb_at * static_cast<double>(l) / t_s;
}

} // namespace voipsteg
