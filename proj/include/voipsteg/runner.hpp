#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "voipsteg/scenario.hpp"

// Full-call simulation, one direction of flow: the caller embeds, the
// receiving side classifies and extracts. The pipeline is single-threaded
// by contract; independent calls are isolated units that may run
// concurrently at a higher level.

namespace voipsteg {

struct ChannelOutcome {
    std::string name;
    ChannelKind kind = ChannelKind::header;
    PacketKind carrier = PacketKind::rtp;
    ChannelLedger ledger;
    BitString embedded_stream;  // message prefix actually written
    BitString extracted_stream; // receiver-side reassembly, seq order
    bool framed = false;
    FrameStatus frame_status = FrameStatus::truncated; // meaningful when framed
};

struct LackOutcome {
    ChannelLedger ledger;
    BitString embedded_stream;
    BitString extracted_stream;
    bool framed = false;
    FrameStatus frame_status = FrameStatus::truncated;
    std::vector<LackAuditEntry> audit;
};

struct CallResult {
    CallTrace trace;
    std::vector<ChannelOutcome> channels;
    LackOutcome lack;
    bool lack_active = false;
    LossModel::Bound pi_bound = LossModel::Bound::codec_tolerance;
};

namespace detail {

inline BitString materialize_message(const MessageSpec& spec, std::size_t capacity_bits,
                                     std::uint64_t seed) {
    BitString bits;
    switch (spec.source) {
        case MessageSpec::Source::random: {
            std::size_t n = capacity_bits;
            if (spec.framed) {
                // a frame payload is capped; leave room for the 32 framing bits
                n = std::min<std::size_t>(n > kFrameOverheadBits ? n - kFrameOverheadBits : 0,
                                          kFrameMaxPayloadBits);
            }
            bits = BitString::random(n, seed);
            break;
        }
        case MessageSpec::Source::hex: bits = BitString::from_hex(spec.arg); break;
        case MessageSpec::Source::file: bits = BitString::from_file(spec.arg); break;
    }
    return bits;
}

inline std::vector<std::uint8_t> make_auth_tag(int bits, std::uint64_t seed, std::uint64_t ctr) {
    std::vector<std::uint8_t> tag(static_cast<std::size_t>(bits / 8));
    std::uint64_t w = 0;
    for (std::size_t i = 0; i < tag.size(); ++i) {
        if (i % 8 == 0) w = rng::keyed(seed, rng::kStreamAuthTag, ctr * 64 + i / 8);
        tag[i] = static_cast<std::uint8_t>(w >> (8 * (i % 8)));
    }
    return tag;
}

// Upper bound on how many bits a channel can consume during the call; the
// auto-generated random message is sized to it so capacity never starves.
inline std::size_t channel_capacity_upper(const ChannelConfig& c, std::int64_t n_rtp,
                                          std::int64_t n_rtcp) {
    switch (c.kind) {
        case ChannelKind::header:
        case ChannelKind::rtp_field:
            return static_cast<std::size_t>(c.first_packet_bits() +
                                            c.per_packet_bits() * (n_rtp > 0 ? n_rtp - 1 : 0));
        case ChannelKind::auth_tag:
            return static_cast<std::size_t>(c.auth_tag_bits *
                                            (c.auth_target == PacketKind::rtp ? n_rtp : n_rtcp));
        case ChannelKind::rtcp_report: {
            std::int64_t cap = static_cast<std::int64_t>(c.rtcp_scp) * c.rtcp_nrb * c.rtcp_srb +
                               (c.rtcp_use_ntp_slot ? 32 : 0);
            return static_cast<std::size_t>(cap * n_rtcp);
        }
        case ChannelKind::watermark:
            // cumulative floor of the credit at k = n, exactly
            return static_cast<std::size_t>(n_rtp * c.wm_rate_num / c.wm_rate_den);
    }
    return 0;
}

} // namespace detail

inline CallResult run_call(const Scenario& sc, int call_index) {
    {
        auto errs = sc.validate();
        if (!errs.empty()) {
            std::string what = "scenario invalid:";
            for (const auto& e : errs) what += "\n  - " + e;
            throw std::invalid_argument(what);
        }
    }

    const std::uint64_t seed = sc.call_seed(call_index);
    CallResult result;
    result.lack_active = sc.lack.pi > 0;
    if (result.lack_active) result.pi_bound = sc.loss_model().binding_bound();

    // --- generation ------------------------------------------------------
    RtpStream stream = make_rtp_stream(sc.codec, sc.duration_s, seed, sc.slots);

    const ChannelSpec* rtcp_channel = sc.find_channel(ChannelKind::rtcp_report);
    std::vector<VoipPacket> rtcp_packets;
    if (sc.rtcp_interval_s > 0) {
        // compound structure: at least two packet types even when the channel
        // exploits only one of them
        int scp = rtcp_channel ? std::max(2, rtcp_channel->config.rtcp_scp) : 2;
        int nrb = rtcp_channel ? std::max(1, rtcp_channel->config.rtcp_nrb) : 1;
        int srb = rtcp_channel ? rtcp_channel->config.rtcp_srb : 160;
        rtcp_packets = make_rtcp_schedule(sc.rtcp_interval_s, sc.duration_s, seed, scp, nrb, srb);
    }
    const std::int64_t n_rtp = stream.n;
    const std::int64_t n_rtcp = static_cast<std::int64_t>(rtcp_packets.size());
    const std::int64_t call_end_us = static_cast<std::int64_t>(sc.duration_s * 1e6);

    // signaling is opaque: two packets to set the call up, two to tear it
    // down, counted only in the traffic mix
    std::vector<VoipPacket> signaling(4);
    for (int i = 0; i < 4; ++i) {
        signaling[static_cast<std::size_t>(i)].kind = PacketKind::signaling;
        signaling[static_cast<std::size_t>(i)].index = i;
    }
    signaling[0].nominal_send_us = 0;
    signaling[1].nominal_send_us = 1000;
    signaling[2].nominal_send_us = call_end_us + 1000;
    signaling[3].nominal_send_us = call_end_us + 2000;
    for (auto& p : signaling) p.send_us = p.nominal_send_us;

    // auth tags exist on whichever stream an auth channel targets
    for (const auto& ch : sc.channels) {
        if (ch.config.kind != ChannelKind::auth_tag) continue;
        if (ch.config.auth_target == PacketKind::rtp)
            for (auto& p : stream.packets)
                p.auth_tag = detail::make_auth_tag(ch.config.auth_tag_bits, seed,
                                                   static_cast<std::uint64_t>(p.index));
        else
            for (auto& p : rtcp_packets)
                p.rtcp->auth_tag = detail::make_auth_tag(ch.config.auth_tag_bits, seed,
                                                         (1ULL << 32) + static_cast<std::uint64_t>(p.index));
    }

    // --- covert messages ---------------------------------------------------
    const std::size_t n_channels = sc.channels.size();
    std::vector<CovertMessage> messages(n_channels);
    result.channels.resize(n_channels);
    for (std::size_t c = 0; c < n_channels; ++c) {
        const auto& spec = sc.channels[c];
        std::size_t upper = detail::channel_capacity_upper(spec.config, n_rtp, n_rtcp);
        BitString raw = detail::materialize_message(spec.message, upper,
                                                    rng::keyed(seed, rng::kStreamMessage, 1000 + c));
        BitString stream_bits = spec.message.framed ? frame_encode(raw) : raw;
        messages[c] = CovertMessage(stream_bits);
        result.channels[c].name = spec.config.name;
        result.channels[c].kind = spec.config.kind;
        result.channels[c].carrier =
            (spec.config.kind == ChannelKind::rtcp_report ||
             (spec.config.kind == ChannelKind::auth_tag && spec.config.auth_target == PacketKind::rtcp))
                ? PacketKind::rtcp
                : PacketKind::rtp;
        result.channels[c].framed = spec.message.framed;
    }

    std::vector<std::int64_t> lack_indices;
    CovertMessage lack_message;
    if (result.lack_active) {
        lack_indices = select_packets(n_rtp, sc.lack, seed);
        std::size_t upper = static_cast<std::size_t>(sc.codec.payload_bytes) * 8 * lack_indices.size();
        BitString raw = detail::materialize_message(sc.lack_message, upper,
                                                    rng::keyed(seed, rng::kStreamMessage, 999));
        BitString stream_bits = sc.lack_message.framed ? frame_encode(raw) : raw;
        lack_message = CovertMessage(stream_bits);
        result.lack.framed = sc.lack_message.framed;
    }

    // --- trace scaffolding -------------------------------------------------
    CallTrace& trace = result.trace;
    trace.codec = sc.codec;
    trace.duration_s = sc.duration_s;
    trace.seed = seed;
    trace.lack_aware = sc.lack_aware;
    for (const auto& ch : sc.channels) trace.channel_names.push_back(ch.config.name);
    if (result.lack_active) trace.channel_names.push_back("LACK");
    const std::size_t n_cols = trace.channel_names.size();
    const std::size_t lack_col = result.lack_active ? n_cols - 1 : 0;

    auto make_record = [&](const VoipPacket& p) {
        PacketRecord r;
        r.kind = p.kind;
        r.index = p.index;
        r.seq = p.seq;
        r.nominal_send_us = p.nominal_send_us;
        r.send_us = p.send_us;
        r.lack_selected = p.lack_selected;
        r.embedded_bits.assign(n_cols, 0);
        r.extracted_bits.assign(n_cols, 0);
        return r;
    };

    // --- sender: embed then LACK-delay -------------------------------------
    std::vector<ChannelState> tx_state(n_channels);
    std::vector<PacketRecord> rtp_records;
    rtp_records.reserve(static_cast<std::size_t>(n_rtp));
    std::size_t next_sel = 0;

    for (std::int64_t i = 0; i < n_rtp; ++i) {
        VoipPacket& p = stream.packets[static_cast<std::size_t>(i)];
        bool selected = next_sel < lack_indices.size() && lack_indices[next_sel] == i;
        PacketRecord rec = make_record(p);

        for (std::size_t c = 0; c < n_channels; ++c) {
            const ChannelConfig& cfg = sc.channels[c].config;
            if (cfg.kind == ChannelKind::rtcp_report) continue;
            if (cfg.kind == ChannelKind::auth_tag && cfg.auth_target != PacketKind::rtp) continue;
            if (cfg.kind == ChannelKind::watermark && selected) continue; // payload is about to be replaced
            std::int64_t got = embed(cfg, tx_state[c], sc.slots, p, messages[c],
                                     result.channels[c].ledger, i == 0);
            rec.embedded_bits[c] = static_cast<std::int32_t>(got);
        }

        if (selected) {
            ++next_sel;
            auto lr = lack_embed(p, sc.lack, sc.budget, lack_message);
            result.lack.audit.push_back(std::move(lr.audit));
            result.lack.ledger.embedded_bits += lr.bits_embedded;
            result.lack.ledger.embeds.push_back({p.send_us, lr.bits_embedded});
            rec.embedded_bits[lack_col] = static_cast<std::int32_t>(lr.bits_embedded);
            rec.lack_selected = true;
            rec.send_us = p.send_us;
            if (lr.budget_exceeded) trace.delay_budget_exceeded = true;
        }
        rtp_records.push_back(std::move(rec));
    }

    std::vector<PacketRecord> rtcp_records;
    rtcp_records.reserve(rtcp_packets.size());
    for (auto& p : rtcp_packets) {
        PacketRecord rec = make_record(p);
        for (std::size_t c = 0; c < n_channels; ++c) {
            const ChannelConfig& cfg = sc.channels[c].config;
            bool on_rtcp = cfg.kind == ChannelKind::rtcp_report ||
                           (cfg.kind == ChannelKind::auth_tag && cfg.auth_target == PacketKind::rtcp);
            if (!on_rtcp) continue;
            std::int64_t got = embed(cfg, tx_state[c], sc.slots, p, messages[c],
                                     result.channels[c].ledger, false);
            rec.embedded_bits[c] = static_cast<std::int32_t>(got);
        }
        rtcp_records.push_back(std::move(rec));
    }

    // embedded streams are the consumed message prefixes
    for (std::size_t c = 0; c < n_channels; ++c)
        result.channels[c].embedded_stream =
            messages[c].bits().slice(0, messages[c].length() - messages[c].remaining());
    if (result.lack_active)
        result.lack.embedded_stream =
            lack_message.bits().slice(0, lack_message.length() - lack_message.remaining());

    // --- transport ----------------------------------------------------------
    auto transit_into = [&](const VoipPacket& p, PacketRecord& rec) {
        TransitResult t = transit(p, sc.network, seed);
        if (t.dropped) {
            rec.arrival_us = -1;
            rec.cls = Classification::dropped;
        } else {
            rec.arrival_us = t.arrival_us;
        }
    };
    for (std::int64_t i = 0; i < n_rtp; ++i)
        transit_into(stream.packets[static_cast<std::size_t>(i)], rtp_records[static_cast<std::size_t>(i)]);
    for (std::size_t i = 0; i < rtcp_packets.size(); ++i) transit_into(rtcp_packets[i], rtcp_records[i]);

    std::vector<PacketRecord> sig_records;
    for (auto& p : signaling) {
        PacketRecord rec = make_record(p);
        transit_into(p, rec);
        if (rec.arrival_us >= 0) rec.cls = Classification::playout;
        sig_records.push_back(std::move(rec));
    }

    // --- active warden -------------------------------------------------------
    const std::int64_t base_us = sc.network.base_delay_ms * 1000;
    if (sc.warden.enabled) {
        for (std::int64_t i = 0; i < n_rtp; ++i) {
            PacketRecord& rec = rtp_records[static_cast<std::size_t>(i)];
            if (rec.arrival_us < 0) continue;
            // lateness against the stream's own cadence as the warden sees it
            std::int64_t cadence_us = stream.packets[static_cast<std::size_t>(i)].nominal_send_us + base_us;
            if (warden_expired(rec.arrival_us, cadence_us, sc.warden.drop_expired_threshold_ms)) {
                rec.warden_dropped = true;
                rec.cls = Classification::dropped;
                continue;
            }
            warden_normalize(stream.packets[static_cast<std::size_t>(i)], sc.warden, sc.slots);
            rec.warden_normalized = true;
        }
    }

    // --- receiver: classify + extract ----------------------------------------
    std::vector<ChannelState> rx_state(n_channels);
    for (std::int64_t i = 0; i < n_rtp; ++i) {
        VoipPacket& p = stream.packets[static_cast<std::size_t>(i)];
        PacketRecord& rec = rtp_records[static_cast<std::size_t>(i)];
        if (rec.arrival_us < 0 || rec.warden_dropped) continue;

        std::int64_t nominal_arrival = p.nominal_send_us + base_us;
        rec.cls = receiver_classify(p, rec.arrival_us, nominal_arrival, sc.buffer, sc.lack_aware);
        if (rec.cls == Classification::lost) continue; // discarded before any extractor

        for (std::size_t c = 0; c < n_channels; ++c) {
            const ChannelConfig& cfg = sc.channels[c].config;
            if (cfg.kind == ChannelKind::rtcp_report) continue;
            if (cfg.kind == ChannelKind::auth_tag && cfg.auth_target != PacketKind::rtp) continue;
            if (cfg.kind == ChannelKind::watermark && p.lack_selected) continue;
            result.channels[c].extracted_stream.append(
                extract(cfg, rx_state[c], sc.slots, p, i == 0));
            rec.extracted_bits[c] = rec.embedded_bits[c];
            result.channels[c].ledger.extracted_bits += rec.embedded_bits[c];
        }
        if (rec.cls == Classification::steganogram) {
            result.lack.extracted_stream.append(lack_extract(p));
            rec.extracted_bits[lack_col] = rec.embedded_bits[lack_col];
            result.lack.ledger.extracted_bits += rec.embedded_bits[lack_col];
            for (auto& a : result.lack.audit)
                if (a.index == p.index) a.recovered = true;
        }
    }
    for (std::size_t i = 0; i < rtcp_packets.size(); ++i) {
        VoipPacket& p = rtcp_packets[i];
        PacketRecord& rec = rtcp_records[i];
        if (rec.arrival_us < 0) continue;
        rec.cls = Classification::playout; // control traffic is simply delivered
        for (std::size_t c = 0; c < n_channels; ++c) {
            const ChannelConfig& cfg = sc.channels[c].config;
            bool on_rtcp = cfg.kind == ChannelKind::rtcp_report ||
                           (cfg.kind == ChannelKind::auth_tag && cfg.auth_target == PacketKind::rtcp);
            if (!on_rtcp) continue;
            result.channels[c].extracted_stream.append(
                extract(cfg, rx_state[c], sc.slots, p, false));
            rec.extracted_bits[c] = rec.embedded_bits[c];
            result.channels[c].ledger.extracted_bits += rec.embedded_bits[c];
        }
    }

    // framed streams get an integrity verdict
    for (auto& ch : result.channels)
        if (ch.framed) ch.frame_status = frame_decode(ch.extracted_stream).status;
    if (result.lack_active && result.lack.framed)
        result.lack.frame_status = frame_decode(result.lack.extracted_stream).status;

    // --- assemble the trace in nominal-time order ------------------------------
    trace.records.reserve(rtp_records.size() + rtcp_records.size() + sig_records.size());
    for (auto& r : rtp_records) trace.records.push_back(std::move(r));
    for (auto& r : rtcp_records) trace.records.push_back(std::move(r));
    for (auto& r : sig_records) trace.records.push_back(std::move(r));
    std::stable_sort(trace.records.begin(), trace.records.end(),
                     [](const PacketRecord& a, const PacketRecord& b) {
                         if (a.nominal_send_us != b.nominal_send_us)
                             return a.nominal_send_us < b.nominal_send_us;
                         if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
                         return a.index < b.index;
                     });
    return result;
}

inline std::vector<CallResult> run_batch(const Scenario& sc) {
    std::vector<CallResult> out;
    out.reserve(static_cast<std::size_t>(sc.calls));
    for (int c = 0; c < sc.calls; ++c) out.push_back(run_call(sc, c));
    return out;
}

} // namespace voipsteg
