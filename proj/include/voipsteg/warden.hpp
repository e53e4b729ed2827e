#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "voipsteg/packet_model.hpp"
#include "voipsteg/rng.hpp"

// Steganalysis countermeasures. The active warden sits in the path and
// normalizes carrier fields or drops packets that are too late to be useful
// for voice, without touching anything an overt user needs. The passive
// warden watches loss statistics for LACK-shaped anomalies.

namespace voipsteg {

struct WardenPolicy {
    bool enabled = false;

    // Slots rewritten with warden-chosen values. Payload octets, seq and
    // ssrc are off limits: altering them would break the overt call, which
    // the warden rule forbids.
    std::vector<FieldRef> normalize_slots;
    bool strip_padding_extension = true;

    // Auth tags stay untouched unless the operator explicitly turns on the
    // aggressive mode; stripping security fields from overt traffic breaks
    // the same rule.
    bool strip_auth_tags = false;

    // RTP packets later than this against the stream's nominal cadence are
    // removed from the path. <= 0 disables expiry dropping.
    std::int64_t drop_expired_threshold_ms = 0;

    // Significance level of the passive loss detector.
    double loss_alarm_alpha = 0.01;

    std::uint64_t seed = 0x77A4D3; // source of re-randomized field values

    static WardenPolicy default_active() {
        WardenPolicy p;
        p.enabled = true;
        p.normalize_slots = {{"ip_id", 0, 16}, {"udp_checksum", 0, 16}, {"timestamp", 0, 9}};
        p.strip_padding_extension = true;
        p.drop_expired_threshold_ms = 0;
        return p;
    }

    void validate(const SlotRegistry& registry) const {
        for (const auto& ref : normalize_slots) {
            if (ref.slot == "seq" || ref.slot == "ssrc")
                throw std::invalid_argument("warden policy may not normalize " + ref.slot +
                                            ": it carries overt state");
            if (ref.slot != "timestamp" && ref.slot != "padding_count" && ref.slot != "ntp_ts" &&
                registry.find(ref.slot) < 0)
                throw std::invalid_argument("warden policy names unknown slot: " + ref.slot);
        }
    }
};

// Overwrites the listed slots with values keyed to (warden seed, packet
// index); clears padding/extension when requested. Everything overt —
// payload, seq, ssrc, timing — passes through unmodified.
inline void warden_normalize(VoipPacket& packet, const WardenPolicy& policy,
                             const SlotRegistry& registry) {
    if (packet.kind != PacketKind::rtp) return;
    std::uint64_t ctr = 0;
    for (const auto& ref : policy.normalize_slots) {
        BitString fresh;
        std::uint64_t w = rng::keyed(policy.seed, rng::kStreamWarden,
                                     static_cast<std::uint64_t>(packet.index) * 16 + ctr++);
        for (int k = 0; k < ref.width; ++k) fresh.push_back((w >> k) & 1);
        field_write_bits(packet, registry, ref, fresh);
    }
    if (policy.strip_padding_extension) {
        packet.padding_flag = false;
        packet.extension_flag = false;
        packet.padding_count = 0;
    }
    if (policy.strip_auth_tags) packet.auth_tag.clear();
}

// Expiry filter. The warden cannot see the receiver's buffer depth, so it
// measures lateness against the stream's own cadence: packet i of a stream
// whose first packet appeared at t0 should appear near t0 + i * I_f.
// Anything later than the configured threshold is removed.
inline bool warden_expired(std::int64_t observed_us, std::int64_t cadence_us,
                           std::int64_t threshold_ms) {
    return threshold_ms > 0 && observed_us - cadence_us > threshold_ms * 1000;
}

// ---------------------------------------------------------------------------
// Passive warden: one-sided binomial test of the observed loss count against
// the expected network loss rate.
// ---------------------------------------------------------------------------

// P[X >= observed] for X ~ Binomial(n, p), summed in log space from the
// observed count upward.
inline double binomial_upper_tail(std::int64_t observed, std::int64_t n, double p) {
    if (n <= 0) throw std::invalid_argument("binomial tail: n must be positive");
    if (observed <= 0) return 1.0;
    if (observed > n) return 0.0;
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    double log_p = std::log(p), log_q = std::log1p(-p);
    double sum = 0.0;
    for (std::int64_t k = observed; k <= n; ++k) {
        double log_term = std::lgamma(static_cast<double>(n) + 1.0) -
                          std::lgamma(static_cast<double>(k) + 1.0) -
                          std::lgamma(static_cast<double>(n - k) + 1.0) +
                          static_cast<double>(k) * log_p + static_cast<double>(n - k) * log_q;
        double term = std::exp(log_term);
        sum += term;
        // terms decay geometrically past the mode; stop once they no longer matter
        if (k > static_cast<std::int64_t>(p * static_cast<double>(n)) && term < sum * 1e-16) break;
    }
    return sum < 1.0 ? sum : 1.0;
}

struct LossAnomalyResult {
    bool flagged = false;
    double p_value = 1.0;
};

inline LossAnomalyResult loss_anomaly(std::int64_t observed_losses, std::int64_t packets,
                                      double expected_pn, double alpha) {
    if (packets <= 0) throw std::invalid_argument("loss_anomaly: packet count must be positive");
    LossAnomalyResult r;
    r.p_value = binomial_upper_tail(observed_losses, packets, expected_pn);
    r.flagged = r.p_value < alpha;
    return r;
}

} // namespace voipsteg
