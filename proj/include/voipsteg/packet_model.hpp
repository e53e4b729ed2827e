#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "voipsteg/bitstream.hpp"
#include "voipsteg/rng.hpp"

// Typed model of conversation-phase traffic: the RTP stream, the RTCP
// compound schedule, and the named header bit-slots that the steganographic
// channels write into. Encapsulation headers are modeled as slots, not wire
// octets — the laboratory measures covert capacity, not interoperability.

namespace voipsteg {

struct CodecProfile {
    std::string name = "G.711";
    std::int64_t rate_bps = 64000;       // codec rate r
    std::int64_t frame_interval_ms = 20; // packet generation interval I_f
    std::int64_t payload_bytes = 160;    // octets of voice per packet
    double loss_tolerance = 0.03;        // p_Lmax for this codec
    bool plc = false;                    // packet loss concealment in use

    // rate * interval must equal the packetized payload exactly.
    void validate() const {
        if (rate_bps <= 0 || frame_interval_ms <= 0 || payload_bytes <= 0)
            throw std::invalid_argument("codec profile: rate, interval and payload must be positive");
        if (rate_bps * frame_interval_ms != payload_bytes * 8000)
            throw std::invalid_argument("codec profile '" + name +
                                        "': rate_bps * frame_interval_ms / 8000 != payload_bytes");
        if (!(loss_tolerance > 0.0 && loss_tolerance <= 0.05))
            throw std::invalid_argument("codec profile: loss tolerance must be in (0, 0.05]");
    }

    std::int64_t samples_per_frame() const { return payload_bytes; } // 8 kHz, 1 octet/sample
    double packets_per_second() const { return 1000.0 / static_cast<double>(frame_interval_ms); }
};

// Built-in profiles; p_Lmax per codec, 5% when PLC is enabled.
inline CodecProfile codec_by_name(const std::string& name) {
    if (name == "G.711") return {"G.711", 64000, 20, 160, 0.03, false};
    if (name == "G.729A") return {"G.729A", 8000, 20, 20, 0.02, false};
    if (name == "G.723.1") return {"G.723.1", 6400, 30, 24, 0.01, false};
    throw std::invalid_argument("unknown codec profile: " + name);
}

// Registry of writable encapsulation-header slots. The defaults realize the
// 32 bits/packet of the IP/UDP row: an IP Identification look-alike plus a
// UDP checksum look-alike, both seeded per packet.
struct SlotDef {
    std::string name;
    int width = 0; // bits
};

class SlotRegistry {
public:
    static SlotRegistry defaults() {
        SlotRegistry r;
        r.add("ip_id", 16);
        r.add("udp_checksum", 16);
        return r;
    }

    void add(const std::string& name, int width) {
        if (width <= 0 || width > 64) throw std::invalid_argument("slot width must be 1..64: " + name);
        if (find(name) >= 0) throw std::invalid_argument("duplicate slot: " + name);
        slots_.push_back({name, width});
    }

    int find(const std::string& name) const {
        for (std::size_t i = 0; i < slots_.size(); ++i)
            if (slots_[i].name == name) return static_cast<int>(i);
        return -1;
    }

    const std::vector<SlotDef>& slots() const { return slots_; }
    std::size_t count() const { return slots_.size(); }

private:
    std::vector<SlotDef> slots_;
};

enum class PacketKind { rtp, rtcp, signaling };

inline const char* to_string(PacketKind k) {
    switch (k) {
        case PacketKind::rtp: return "rtp";
        case PacketKind::rtcp: return "rtcp";
        case PacketKind::signaling: return "signaling";
    }
    return "?";
}

// One RTCP compound report: S_CP packet types, each with N_RB report blocks
// of S_RB writable bits, plus the 32 low-order NTP timestamp bits as an
// optional extra slot.
struct RtcpCompound {
    int packet_types = 2;        // S_CP
    int report_blocks = 1;       // N_RB per packet type
    int bits_per_block = 160;    // S_RB
    BitString report_bits;       // S_CP * N_RB * S_RB carrier bits
    std::uint32_t ntp_ts_low = 0;
    std::vector<std::uint8_t> auth_tag; // empty unless SRTCP is modeled

    std::int64_t report_capacity_bits() const {
        return static_cast<std::int64_t>(packet_types) * report_blocks * bits_per_block;
    }
};

struct VoipPacket {
    PacketKind kind = PacketKind::rtp;
    std::int64_t index = 0;       // position within its stream
    std::uint16_t seq = 0;        // RTP sequence number (wraps)
    std::uint32_t timestamp = 0;  // RTP media timestamp
    std::uint32_t ssrc = 0;
    bool padding_flag = false;
    bool extension_flag = false;
    std::uint8_t padding_count = 0;       // trailing padding-octet count field
    std::vector<std::uint64_t> slots;     // values parallel to the SlotRegistry
    std::vector<std::uint8_t> auth_tag;   // empty unless SRTP is modeled
    std::vector<std::uint8_t> payload;    // codec samples (A-law octets)
    BitString wm_virtual;                 // abstract-mode watermark carrier
    std::int64_t nominal_send_us = 0;     // cadence position i * I_f
    std::int64_t send_us = 0;             // actual emission (nominal + LACK delay)
    bool lack_selected = false;

    std::optional<RtcpCompound> rtcp; // present when kind == rtcp
};

struct RtpStream {
    CodecProfile profile;
    double duration_s = 0; // T
    std::int64_t n = 0;    // packet count, n = T / I_f
    std::uint64_t seed = 0;
    std::vector<VoipPacket> packets;
};

// Eq-style packet count: n = floor(T * 1000 / I_f).
inline std::int64_t rtp_packet_count(double duration_s, std::int64_t frame_interval_ms) {
    return static_cast<std::int64_t>(duration_s * 1000.0 / static_cast<double>(frame_interval_ms) + 1e-9);
}

// Builds the one-direction RTP stream: valid seq/timestamp progressions,
// seeded initial values, seeded synthetic payload and slot contents.
inline RtpStream make_rtp_stream(const CodecProfile& profile, double duration_s,
                                 std::uint64_t seed,
                                 const SlotRegistry& registry = SlotRegistry::defaults()) {
    if (duration_s <= 0) throw std::invalid_argument("call duration must be positive");
    profile.validate();

    RtpStream s;
    s.profile = profile;
    s.duration_s = duration_s;
    s.seed = seed;
    s.n = rtp_packet_count(duration_s, profile.frame_interval_ms);
    s.packets.reserve(static_cast<std::size_t>(s.n));

    rng::Sequence init(seed, rng::kStreamInit);
    const std::uint16_t seq0 = static_cast<std::uint16_t>(init.next());
    const std::uint32_t ts0 = static_cast<std::uint32_t>(init.next());
    const std::uint32_t ssrc = static_cast<std::uint32_t>(init.next());
    const std::int64_t if_us = profile.frame_interval_ms * 1000;

    for (std::int64_t i = 0; i < s.n; ++i) {
        VoipPacket p;
        p.kind = PacketKind::rtp;
        p.index = i;
        p.seq = static_cast<std::uint16_t>(seq0 + i);
        p.timestamp = ts0 + static_cast<std::uint32_t>(i * profile.samples_per_frame());
        p.ssrc = ssrc;
        p.nominal_send_us = i * if_us;
        p.send_us = p.nominal_send_us;

        p.payload.resize(static_cast<std::size_t>(profile.payload_bytes));
        std::uint64_t w = 0;
        for (std::size_t b = 0; b < p.payload.size(); ++b) {
            if (b % 8 == 0) w = rng::keyed(seed, rng::kStreamPayload,
                                           static_cast<std::uint64_t>(i) * 1024 + b / 8);
            p.payload[b] = static_cast<std::uint8_t>(w >> (8 * (b % 8)));
        }

        p.slots.resize(registry.count());
        for (std::size_t k = 0; k < registry.count(); ++k) {
            std::uint64_t mask = registry.slots()[k].width == 64
                                     ? ~0ULL
                                     : (1ULL << registry.slots()[k].width) - 1;
            p.slots[k] = rng::keyed(seed, rng::kStreamSlots,
                                    static_cast<std::uint64_t>(i) * 64 + k) & mask;
        }

        s.packets.push_back(std::move(p));
    }
    return s;
}

// RTCP compounds at a fixed interval: floor(T / interval) packets, first one
// at t = interval. Report-block carrier bits are seeded so an unembedded
// compound still looks like plausible report content.
inline std::vector<VoipPacket> make_rtcp_schedule(double interval_s, double duration_s,
                                                  std::uint64_t seed,
                                                  int packet_types = 2, int report_blocks = 1,
                                                  int bits_per_block = 160) {
    if (interval_s <= 0) throw std::invalid_argument("RTCP interval must be positive");
    std::vector<VoipPacket> out;
    std::int64_t count = static_cast<std::int64_t>(duration_s / interval_s + 1e-9);
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t k = 1; k <= count; ++k) {
        VoipPacket p;
        p.kind = PacketKind::rtcp;
        p.index = k - 1;
        p.nominal_send_us = static_cast<std::int64_t>(interval_s * 1e6 * static_cast<double>(k) + 0.5);
        p.send_us = p.nominal_send_us;

        RtcpCompound c;
        c.packet_types = packet_types;
        c.report_blocks = report_blocks;
        c.bits_per_block = bits_per_block;
        rng::Sequence fill(seed ^ static_cast<std::uint64_t>(k), rng::kStreamRtcp);
        std::int64_t cap = c.report_capacity_bits();
        c.report_bits.reserve(static_cast<std::size_t>(cap));
        std::uint64_t w = 0;
        for (std::int64_t b = 0; b < cap; ++b) {
            if (b % 64 == 0) w = fill.next();
            c.report_bits.push_back((w >> (63 - b % 64)) & 1);
        }
        c.ntp_ts_low = static_cast<std::uint32_t>(fill.next());
        p.rtcp = std::move(c);
        out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Named-field bit access. A field reference addresses `width` bits starting
// at `lsb` (counted from the least significant end) of a named slot. Names
// cover both RTP header fields and registered encapsulation slots.
// ---------------------------------------------------------------------------

struct FieldRef {
    std::string slot;
    int lsb = 0;
    int width = 0;
};

namespace detail {

struct FieldLocation {
    std::uint64_t* value;   // writable 64-bit storage
    int slot_width;
};

// Padding count is a full octet; seq 16; timestamp/ssrc 32 bits.
inline FieldLocation locate_field(VoipPacket& p, const SlotRegistry& registry,
                                  const std::string& slot,
                                  std::uint64_t& scratch) {
    if (slot == "seq") { scratch = p.seq; return {&scratch, 16}; }
    if (slot == "timestamp") { scratch = p.timestamp; return {&scratch, 32}; }
    if (slot == "ssrc") { scratch = p.ssrc; return {&scratch, 32}; }
    if (slot == "padding_count") { scratch = p.padding_count; return {&scratch, 8}; }
    if (p.rtcp && slot == "ntp_ts") { scratch = p.rtcp->ntp_ts_low; return {&scratch, 32}; }
    int idx = registry.find(slot);
    if (idx < 0) throw std::out_of_range("unknown field slot: " + slot);
    if (p.slots.size() != registry.count())
        throw std::out_of_range("packet has no storage for slot: " + slot);
    return {&p.slots[static_cast<std::size_t>(idx)], registry.slots()[static_cast<std::size_t>(idx)].width};
}

inline void store_field(VoipPacket& p, const std::string& slot, std::uint64_t scratch) {
    if (slot == "seq") p.seq = static_cast<std::uint16_t>(scratch);
    else if (slot == "timestamp") p.timestamp = static_cast<std::uint32_t>(scratch);
    else if (slot == "ssrc") p.ssrc = static_cast<std::uint32_t>(scratch);
    else if (slot == "padding_count") p.padding_count = static_cast<std::uint8_t>(scratch);
    else if (p.rtcp && slot == "ntp_ts") p.rtcp->ntp_ts_low = static_cast<std::uint32_t>(scratch);
    // registry slots were written through the pointer directly
}

} // namespace detail

// Writes `bits` (MSB-first) into the addressed bit range; everything else in
// the packet is untouched.
inline void field_write_bits(VoipPacket& p, const SlotRegistry& registry, const FieldRef& ref,
                             const BitString& bits, std::size_t bit_offset = 0) {
    std::uint64_t scratch = 0;
    auto loc = detail::locate_field(p, registry, ref.slot, scratch);
    if (ref.lsb < 0 || ref.width <= 0 || ref.lsb + ref.width > loc.slot_width)
        throw std::invalid_argument("bit range out of slot bounds: " + ref.slot);
    if (bit_offset + static_cast<std::size_t>(ref.width) > bits.size())
        throw std::invalid_argument("bit count does not match field width: " + ref.slot);
    std::uint64_t v = *loc.value;
    for (int k = 0; k < ref.width; ++k) {
        int pos = ref.lsb + ref.width - 1 - k; // first bit goes to the range's high end
        std::uint64_t mask = 1ULL << pos;
        if (bits.bit(bit_offset + static_cast<std::size_t>(k))) v |= mask;
        else v &= ~mask;
    }
    *loc.value = v;
    detail::store_field(p, ref.slot, scratch);
}

inline BitString field_read_bits(const VoipPacket& p, const SlotRegistry& registry,
                                 const FieldRef& ref) {
    std::uint64_t scratch = 0;
    auto loc = detail::locate_field(const_cast<VoipPacket&>(p), registry, ref.slot, scratch);
    if (ref.lsb < 0 || ref.width <= 0 || ref.lsb + ref.width > loc.slot_width)
        throw std::invalid_argument("bit range out of slot bounds: " + ref.slot);
    BitString out;
    out.reserve(static_cast<std::size_t>(ref.width));
    for (int k = 0; k < ref.width; ++k) {
        int pos = ref.lsb + ref.width - 1 - k;
        out.push_back((*loc.value >> pos) & 1);
    }
    return out;
}

} // namespace voipsteg
