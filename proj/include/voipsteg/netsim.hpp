#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "voipsteg/lack.hpp"
#include "voipsteg/packet_model.hpp"
#include "voipsteg/rng.hpp"

// Deterministic transport: per-packet base delay, uniform jitter and random
// loss, with every decision keyed to (seed, packet identity) so a replay of
// the same scenario reproduces the trace byte for byte.

namespace voipsteg {

struct NetworkModel {
    std::int64_t base_delay_ms = 30;
    std::int64_t jitter_ms = 20; // uniform on [0, J]
    double loss_pn = 0.0;

    void validate() const {
        if (base_delay_ms < 0 || jitter_ms < 0)
            throw std::invalid_argument("network model: delays must be non-negative");
        if (loss_pn < 0 || loss_pn > 1)
            throw std::invalid_argument("network model: loss probability must be in [0,1]");
    }
};

struct TransitResult {
    bool dropped = false;
    std::int64_t arrival_us = -1;
    std::int64_t jitter_us = 0;
};

namespace detail {
// Distinct decision-counter spaces per packet kind so RTP index 5 and RTCP
// index 5 never share a draw.
inline std::uint64_t transit_counter(PacketKind kind, std::int64_t index) {
    return (static_cast<std::uint64_t>(kind) << 40) | static_cast<std::uint64_t>(index);
}
} // namespace detail

inline TransitResult transit(const VoipPacket& packet, const NetworkModel& model,
                             std::uint64_t seed) {
    TransitResult r;
    std::uint64_t ctr = detail::transit_counter(packet.kind, packet.index);
    if (model.loss_pn > 0 &&
        rng::unit(rng::keyed(seed, rng::kStreamLoss, ctr)) < model.loss_pn) {
        r.dropped = true;
        return r;
    }
    r.jitter_us = model.jitter_ms > 0
                      ? static_cast<std::int64_t>(rng::below(
                            rng::keyed(seed, rng::kStreamJitter, ctr),
                            static_cast<std::uint64_t>(model.jitter_ms) * 1000))
                      : 0;
    r.arrival_us = packet.send_us + model.base_delay_ms * 1000 + r.jitter_us;
    return r;
}

// One row per generated packet; nothing is silently omitted.
struct PacketRecord {
    PacketKind kind = PacketKind::rtp;
    std::int64_t index = 0;
    std::uint16_t seq = 0;
    std::int64_t nominal_send_us = 0;
    std::int64_t send_us = 0;
    std::int64_t arrival_us = -1; // -1 when the packet never arrived
    Classification cls = Classification::dropped;
    bool lack_selected = false;
    bool warden_normalized = false;
    bool warden_dropped = false;
    std::vector<std::int32_t> embedded_bits;  // per channel column
    std::vector<std::int32_t> extracted_bits; // per channel column
};

struct CallTrace {
    CodecProfile codec;
    double duration_s = 0;
    std::uint64_t seed = 0;
    bool lack_aware = true;
    bool delay_budget_exceeded = false;
    std::vector<std::string> channel_names; // column labels, LACK last when active
    std::vector<PacketRecord> records;

    std::int64_t count(Classification c) const {
        std::int64_t n = 0;
        for (const auto& r : records)
            if (r.cls == c) ++n;
        return n;
    }
    std::int64_t count_kind(PacketKind k) const {
        std::int64_t n = 0;
        for (const auto& r : records)
            if (r.kind == k) ++n;
        return n;
    }
    std::int64_t arrived_count(PacketKind k) const {
        std::int64_t n = 0;
        for (const auto& r : records)
            if (r.kind == k && r.arrival_us >= 0 && !r.warden_dropped) ++n;
        return n;
    }
    std::int64_t total_extracted_bits() const {
        std::int64_t n = 0;
        for (const auto& r : records)
            for (auto b : r.extracted_bits) n += b;
        return n;
    }
    std::int64_t channel_extracted_bits(std::size_t channel) const {
        std::int64_t n = 0;
        for (const auto& r : records)
            if (channel < r.extracted_bits.size()) n += r.extracted_bits[channel];
        return n;
    }
    std::int64_t channel_embedded_bits(std::size_t channel) const {
        std::int64_t n = 0;
        for (const auto& r : records)
            if (channel < r.embedded_bits.size()) n += r.embedded_bits[channel];
        return n;
    }
};

// CSV dump with a fixed, documented column order; the replay-determinism
// guarantee is stated in terms of this output.
inline std::string trace_to_csv(const CallTrace& t) {
    std::string out = "kind,index,seq,nominal_send_us,send_us,arrival_us,classification,"
                      "lack_selected,warden_normalized,warden_dropped";
    for (const auto& name : t.channel_names) out += ",embed_" + name + ",extract_" + name;
    out += "\n";
    char buf[160];
    for (const auto& r : t.records) {
        std::snprintf(buf, sizeof buf, "%s,%lld,%u,%lld,%lld,%lld,%s,%d,%d,%d",
                      to_string(r.kind), static_cast<long long>(r.index),
                      static_cast<unsigned>(r.seq),
                      static_cast<long long>(r.nominal_send_us),
                      static_cast<long long>(r.send_us),
                      static_cast<long long>(r.arrival_us), to_string(r.cls),
                      r.lack_selected ? 1 : 0, r.warden_normalized ? 1 : 0,
                      r.warden_dropped ? 1 : 0);
        out += buf;
        for (std::size_t c = 0; c < t.channel_names.size(); ++c) {
            std::int32_t e = c < r.embedded_bits.size() ? r.embedded_bits[c] : 0;
            std::int32_t x = c < r.extracted_bits.size() ? r.extracted_bits[c] : 0;
            std::snprintf(buf, sizeof buf, ",%d,%d", e, x);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

} // namespace voipsteg
