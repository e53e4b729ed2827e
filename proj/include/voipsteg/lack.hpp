#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "voipsteg/bitstream.hpp"
#include "voipsteg/packet_model.hpp"
#include "voipsteg/rng.hpp"

// LACK (Lost Audio Packets steganography): select RTP packets with
// probability p_i, delay them past the receiver's de-jitter deadline so an
// unaware receiver discards them as lost, and carry covert payloads to aware
// receivers. Includes the delay-budget model and the loss-composition
// algebra that bounds p_i.

namespace voipsteg {

// Receiver-side de-jitter buffer: a packet is playable iff it arrives no
// later than its nominal (undelayed) arrival plus the buffer depth.
struct JitterBuffer {
    std::int64_t depth_ms = 60; // typical range 30-70 ms

    std::int64_t depth_us() const { return depth_ms * 1000; }
};

// Sender-side delay components (ms). d1 codec processing, d2 codec
// algorithm, d3 packetization; LACK adds the de-jitter-sized d_d on top for
// selected packets.
struct DelayBudget {
    std::int64_t codec_processing_d1_ms = 5;
    std::int64_t codec_algorithm_d2_ms = 20;
    std::int64_t packetization_d3_ms = 20;

    static constexpr std::int64_t kEndToEndBudgetMs = 150;

    std::int64_t base_ms() const {
        return codec_processing_d1_ms + codec_algorithm_d2_ms + packetization_d3_ms;
    }

    // Total sender delay: base for unselected packets, base + d_d for a
    // LACK-selected packet.
    std::int64_t total_ms(bool lack_selected, std::int64_t dd_ms) const {
        return base_ms() + (lack_selected ? dd_ms : 0);
    }

    bool exceeds_budget(bool lack_selected, std::int64_t dd_ms) const {
        return total_ms(lack_selected, dd_ms) > kEndToEndBudgetMs;
    }
};

// Composed loss: network loss and intentional LACK loss are independent.
// The zero cases collapse exactly so the inverse below round-trips.
inline double total_loss(double p_n, double p_i) {
    if (p_n < 0 || p_n > 1 || p_i < 0 || p_i > 1)
        throw std::invalid_argument("total_loss: probabilities must be in [0,1]");
    if (p_n == 0.0) return p_i;
    if (p_i == 0.0) return p_n;
    return 1.0 - (1.0 - p_n) * (1.0 - p_i);
}

// Largest LACK probability that keeps composed loss at or below p_t given
// network loss p_n.
inline double pi_max(double p_t, double p_n) {
    if (p_n < 0 || p_n >= 1) throw std::invalid_argument("pi_max: p_N must be in [0,1)");
    if (p_t < p_n)
        throw std::invalid_argument("pi_max: network loss already exceeds the total-loss budget");
    return (p_t - p_n) / (1.0 - p_n);
}

struct LossModel {
    double network_pn = 0.0;
    double lack_pi = 0.0;
    double tolerance_plmax = 0.03;

    double total_pt() const { return total_loss(network_pn, lack_pi); }

    // p_i must stay under both the codec tolerance and the network-headroom
    // bound; the binding constraint is reported so runs can log which one
    // was active.
    enum class Bound { codec_tolerance, network_headroom };

    Bound binding_bound() const {
        double headroom = pi_max(tolerance_plmax, network_pn);
        return headroom < tolerance_plmax ? Bound::network_headroom : Bound::codec_tolerance;
    }
    double pi_bound() const {
        double headroom = pi_max(tolerance_plmax, network_pn);
        return headroom < tolerance_plmax ? headroom : tolerance_plmax;
    }
    bool feasible() const { return lack_pi < pi_bound(); }
};

enum class LackScheduler { bernoulli, periodic };

struct LackPlan {
    double pi = 0.0;
    std::int64_t inject_delay_ms = 120; // must cover the de-jitter depth
    LackScheduler scheduler = LackScheduler::periodic;

    void validate(const JitterBuffer& buffer, const LossModel& loss) const {
        if (pi < 0 || pi >= 1) throw std::invalid_argument("LACK plan: p_i must be in [0,1)");
        if (pi > 0 && inject_delay_ms < buffer.depth_ms)
            throw std::invalid_argument(
                "LACK plan: injected delay must be >= the de-jitter buffer depth (" +
                std::to_string(buffer.depth_ms) + " ms)");
        LossModel m = loss;
        m.lack_pi = pi;
        if (pi > 0 && !m.feasible())
            throw std::invalid_argument("LACK plan: p_i violates the loss budget (bound " +
                                        std::to_string(m.pi_bound()) + ")");
    }
};

// Packet indices chosen for LACK. Bernoulli mode draws each index
// independently with probability p_i; periodic mode places floor(n * p_i)
// packets at spacing floor(1 / p_i), one at the end of each period — the
// batching that produces the periodic covert-rate peaks.
inline std::vector<std::int64_t> select_packets(std::int64_t n, const LackPlan& plan,
                                                std::uint64_t seed) {
    std::vector<std::int64_t> out;
    if (plan.pi <= 0 || n <= 0) return out;
    if (plan.scheduler == LackScheduler::periodic) {
        std::int64_t count = static_cast<std::int64_t>(static_cast<double>(n) * plan.pi);
        std::int64_t spacing = static_cast<std::int64_t>(1.0 / plan.pi);
        out.reserve(static_cast<std::size_t>(count));
        for (std::int64_t k = 1; k <= count; ++k) out.push_back(k * spacing - 1);
    } else {
        for (std::int64_t i = 0; i < n; ++i)
            if (rng::unit(rng::keyed(seed, rng::kStreamLack, static_cast<std::uint64_t>(i))) < plan.pi)
                out.push_back(i);
    }
    return out;
}

struct LackAuditEntry {
    std::int64_t index = 0;
    std::int64_t nominal_send_us = 0;
    std::int64_t inject_delay_us = 0;
    bool padding = false;   // message was exhausted; payload carries filler
    bool recovered = false; // set at receiver when the payload was extracted
    std::vector<std::uint8_t> original_payload;
};

struct LackEmbedResult {
    LackAuditEntry audit;
    std::int64_t bits_embedded = 0;
    bool budget_exceeded = false;
};

// Delays the selected packet past the de-jitter deadline and swaps its voice
// payload for covert bits. The displaced payload is kept for audit. When the
// covert message runs dry the packet still goes out late but carries a zero
// filler, flagged as padding.
inline LackEmbedResult lack_embed(VoipPacket& packet, const LackPlan& plan,
                                  const DelayBudget& budget, CovertMessage& message) {
    if (packet.kind != PacketKind::rtp)
        throw std::invalid_argument("LACK operates on RTP packets only");
    LackEmbedResult r;
    r.audit.index = packet.index;
    r.audit.nominal_send_us = packet.nominal_send_us;
    r.audit.inject_delay_us = plan.inject_delay_ms * 1000;
    r.audit.original_payload = packet.payload;

    packet.lack_selected = true;
    packet.send_us = packet.nominal_send_us + plan.inject_delay_ms * 1000;
    r.budget_exceeded = budget.exceeds_budget(true, plan.inject_delay_ms);

    std::size_t cap_bits = packet.payload.size() * 8;
    auto taken = message.take(cap_bits);
    r.bits_embedded = static_cast<std::int64_t>(taken.bits.size());
    r.audit.padding = taken.short_read;
    for (std::size_t i = 0; i < cap_bits; ++i) {
        bool bit = i < taken.bits.size() && taken.bits.bit(i);
        std::uint8_t mask = static_cast<std::uint8_t>(0x80u >> (i % 8));
        if (bit) packet.payload[i / 8] |= mask;
        else packet.payload[i / 8] &= static_cast<std::uint8_t>(~mask);
    }
    return r;
}

inline BitString lack_extract(const VoipPacket& packet) {
    BitString out;
    out.reserve(packet.payload.size() * 8);
    for (std::uint8_t byte : packet.payload)
        for (int k = 7; k >= 0; --k) out.push_back((byte >> k) & 1);
    return out;
}

enum class Classification { playout, lost, steganogram, dropped };

inline const char* to_string(Classification c) {
    switch (c) {
        case Classification::playout: return "playout";
        case Classification::lost: return "lost";
        case Classification::steganogram: return "steganogram";
        case Classification::dropped: return "dropped";
    }
    return "?";
}

// Receiver-side verdict for an arrived RTP packet. On-time packets play out.
// A late LACK packet reaches the covert extractor only at an aware receiver;
// an unaware receiver discards it as lost. A merely network-late packet is
// lost either way — in the real procedure its payload would reach the frame
// decoder and fail the CRC, so the model discards it directly.
inline Classification receiver_classify(const VoipPacket& packet, std::int64_t arrival_us,
                                        std::int64_t nominal_arrival_us,
                                        const JitterBuffer& buffer, bool aware) {
    if (arrival_us <= nominal_arrival_us + buffer.depth_us()) return Classification::playout;
    if (aware && packet.lack_selected) return Classification::steganogram;
    return Classification::lost;
}

// ---------------------------------------------------------------------------
// LACK bandwidth expressions: rate r of the codec, frame interval I_f and
// selection probability p_i.
// ---------------------------------------------------------------------------

inline double lack_prbr(double r_bps, double if_ms, double p_i) {
    return r_bps * (if_ms / 1000.0) * p_i;
}

inline double lack_rbr(double r_bps, double p_i) {
    return r_bps * p_i;
}

inline double lack_total(double duration_s, double r_bps, double p_i) {
    return duration_s * r_bps * p_i;
}

} // namespace voipsteg
