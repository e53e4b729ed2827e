#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "voipsteg/channels.hpp"

using namespace voipsteg;

namespace {

ChannelConfig header_channel() {
    ChannelConfig c;
    c.name = "IP/UDP";
    c.kind = ChannelKind::header;
    c.field_map = {{"ip_id", 0, 16}, {"udp_checksum", 0, 16}};
    return c;
}

ChannelConfig rtp_field_channel() {
    ChannelConfig c;
    c.name = "RTP";
    c.kind = ChannelKind::rtp_field;
    c.field_map = {{"timestamp", 0, 9}, {"padding_count", 0, 7}};
    return c;
}

ChannelConfig watermark_channel(std::int64_t num = 3, std::int64_t den = 5,
                                WatermarkMode mode = WatermarkMode::qim) {
    ChannelConfig c;
    c.name = "QIM";
    c.kind = ChannelKind::watermark;
    c.wm_rate_num = num;
    c.wm_rate_den = den;
    c.wm_mode = mode;
    return c;
}

ChannelConfig rtcp_channel(bool ntp = true) {
    ChannelConfig c;
    c.name = "RTCP";
    c.kind = ChannelKind::rtcp_report;
    c.rtcp_scp = 1;
    c.rtcp_nrb = 1;
    c.rtcp_srb = 160;
    c.rtcp_use_ntp_slot = ntp;
    return c;
}

ChannelConfig auth_channel(int bits, PacketKind target = PacketKind::rtp) {
    ChannelConfig c;
    c.name = "AUTH";
    c.kind = ChannelKind::auth_tag;
    c.auth_tag_bits = bits;
    c.auth_target = target;
    return c;
}

} // namespace

TEST_CASE("capacity per channel kind", "[channels]") {
    auto registry = SlotRegistry::defaults();
    auto stream = make_rtp_stream(codec_by_name("G.711"), 1, 3, registry);
    ChannelState st;

    SECTION("constant-capacity header channel: 32 bits on every packet") {
        auto cfg = header_channel();
        CHECK(channel_capacity(cfg, st, stream.packets[0], true) == 32);
        CHECK(channel_capacity(cfg, st, stream.packets[1], false) == 32);
    }
    SECTION("initial-value fields raise only the first packet's capacity") {
        auto cfg = header_channel();
        cfg.first_packet_extra = {{"timestamp", 9, 23}};
        CHECK(channel_capacity(cfg, st, stream.packets[0], true) == 55);
        CHECK(channel_capacity(cfg, st, stream.packets[1], false) == 32);
    }
    SECTION("rtcp report capacity") {
        auto compounds = make_rtcp_schedule(5, 10, 3);
        REQUIRE(!compounds.empty());
        auto with_ntp = rtcp_channel(true);
        auto bare = rtcp_channel(false);
        CHECK(channel_capacity(with_ntp, st, compounds[0], false) == 192);
        CHECK(channel_capacity(bare, st, compounds[0], false) == 160);
    }
    SECTION("watermark credit sequence, rate 0.6") {
        auto cfg = watermark_channel();
        std::vector<std::int64_t> caps;
        for (int i = 0; i < 5; ++i)
            caps.push_back(channel_capacity(cfg, st, stream.packets[static_cast<std::size_t>(i)], i == 0));
        CHECK(caps == std::vector<std::int64_t>{0, 1, 0, 1, 1});
        CHECK(caps == oracles::credit_schedule(5, 3, 5));
    }
    SECTION("incompatible packet kind") {
        auto compounds = make_rtcp_schedule(5, 10, 3);
        CHECK_THROWS_AS(channel_capacity(header_channel(), st, compounds[0], false),
                        std::invalid_argument);
        CHECK_THROWS_AS(channel_capacity(rtcp_channel(), st, stream.packets[0], false),
                        std::invalid_argument);
    }
}

TEST_CASE("watermark credit conservation", "[channels]") {
    auto registry = SlotRegistry::defaults();
    auto stream = make_rtp_stream(codec_by_name("G.711"), 2, 4, registry);
    // rates between 0 and 2 bits/packet, exact rationals
    const std::pair<std::int64_t, std::int64_t> rates[] = {{3, 5}, {1, 10}, {7, 4}, {1, 1}, {0, 1}};
    for (auto [num, den] : rates) {
        auto cfg = watermark_channel(num, den);
        ChannelState st;
        std::int64_t total = 0;
        for (std::int64_t i = 0; i < stream.n; ++i)
            total += channel_capacity(cfg, st, stream.packets[static_cast<std::size_t>(i)], i == 0);
        CHECK(total == stream.n * num / den);
        double target = static_cast<double>(stream.n) * static_cast<double>(num) / static_cast<double>(den);
        CHECK(std::abs(static_cast<double>(total) - target) <= 1.0);
    }
}

TEST_CASE("embed and extract round trips per channel kind", "[channels]") {
    auto registry = SlotRegistry::defaults();

    SECTION("header: 32-bit message consumed in one packet") {
        auto stream = make_rtp_stream(codec_by_name("G.711"), 1, 5, registry);
        auto cfg = header_channel();
        ChannelState tx, rx;
        ChannelLedger led;
        CovertMessage msg(BitString::from_hex("CAFEBABE"));
        CHECK(embed(cfg, tx, registry, stream.packets[0], msg, led) == 32);
        CHECK(msg.remaining() == 0);
        CHECK(led.embedded_bits == 32);
        CHECK(extract(cfg, rx, registry, stream.packets[0]) == BitString::from_hex("CAFEBABE"));
    }

    SECTION("1000 seeded random packets and messages per per-packet kind") {
        for (std::uint64_t s = 0; s < 1000; ++s) {
            auto stream = make_rtp_stream(codec_by_name("G.711"), 0.06, 3000 + s, registry);
            ChannelConfig cfg;
            switch (s % 3) {
                case 0: cfg = header_channel(); break;
                case 1: cfg = rtp_field_channel(); break;
                default: cfg = watermark_channel(1 + s % 3, 1); break;
            }
            ChannelState tx, rx;
            ChannelLedger led;
            BitString payload = BitString::random(96, 7000 + s);
            CovertMessage msg(payload);
            BitString recovered;
            for (std::int64_t i = 0; i < stream.n; ++i)
                embed(cfg, tx, registry, stream.packets[static_cast<std::size_t>(i)], msg, led, i == 0);
            for (std::int64_t i = 0; i < stream.n; ++i)
                recovered.append(extract(cfg, rx, registry, stream.packets[static_cast<std::size_t>(i)], i == 0));
            std::size_t embedded = payload.size() - msg.remaining();
            REQUIRE(recovered.size() >= embedded);
            CHECK(recovered.slice(0, embedded) == payload.slice(0, embedded));
        }
    }

    SECTION("auth tag: 32-bit tag replaced by the next 32 message bits") {
        auto stream = make_rtp_stream(codec_by_name("G.711"), 0.1, 8, registry);
        auto cfg = auth_channel(32);
        for (auto& p : stream.packets) p.auth_tag = {0x11, 0x22, 0x33, 0x44};
        ChannelState tx, rx;
        ChannelLedger led;
        CovertMessage msg(BitString::from_hex("DEADBEEF0102"));
        embed(cfg, tx, registry, stream.packets[0], msg, led);
        CHECK(stream.packets[0].auth_tag == std::vector<std::uint8_t>{0xDE, 0xAD, 0xBE, 0xEF});
        CHECK(extract(cfg, rx, registry, stream.packets[0]) == BitString::from_hex("DEADBEEF"));
        CHECK(msg.remaining() == 16);
    }

    SECTION("rtcp report embed/extract, 192 bits with the NTP slot") {
        auto compounds = make_rtcp_schedule(5, 20, 9);
        REQUIRE(compounds.size() == 4);
        auto cfg = rtcp_channel(true);
        ChannelState tx, rx;
        ChannelLedger led;
        BitString payload = BitString::random(192 * 4, 321);
        CovertMessage msg(payload);
        BitString recovered;
        for (auto& c : compounds) embed(cfg, tx, registry, c, msg, led);
        for (auto& c : compounds) recovered.append(extract(cfg, rx, registry, c));
        CHECK(recovered == payload);
        CHECK(led.embedded_bits == 192 * 4);
    }

    SECTION("watermark qim round trip and payload LSB effect") {
        auto stream = make_rtp_stream(codec_by_name("G.711"), 0.2, 10, registry);
        auto cfg = watermark_channel(3, 5);
        ChannelState tx, rx;
        ChannelLedger led;
        BitString payload = BitString::random(6, 55);
        CovertMessage msg(payload);
        BitString recovered;
        for (std::int64_t i = 0; i < stream.n; ++i) {
            auto before = stream.packets[static_cast<std::size_t>(i)].payload;
            embed(cfg, tx, registry, stream.packets[static_cast<std::size_t>(i)], msg, led, i == 0);
            auto after = stream.packets[static_cast<std::size_t>(i)].payload;
            for (std::size_t b = 0; b < before.size(); ++b)
                CHECK((before[b] | 1) == (after[b] | 1)); // only sample LSBs may move
        }
        for (std::int64_t i = 0; i < stream.n; ++i)
            recovered.append(extract(cfg, rx, registry, stream.packets[static_cast<std::size_t>(i)], i == 0));
        CHECK(recovered.slice(0, payload.size()) == payload);
    }

    SECTION("watermark abstract mode carries bits without touching samples") {
        auto stream = make_rtp_stream(codec_by_name("G.711"), 0.2, 11, registry);
        auto cfg = watermark_channel(9, 2, WatermarkMode::abstract_rate); // DSSS-like 4.5 b/pkt
        ChannelState tx, rx;
        ChannelLedger led;
        BitString payload = BitString::random(32, 66);
        CovertMessage msg(payload);
        BitString recovered;
        for (std::int64_t i = 0; i < stream.n; ++i) {
            auto before = stream.packets[static_cast<std::size_t>(i)].payload;
            embed(cfg, tx, registry, stream.packets[static_cast<std::size_t>(i)], msg, led, i == 0);
            CHECK(stream.packets[static_cast<std::size_t>(i)].payload == before);
        }
        for (std::int64_t i = 0; i < stream.n; ++i)
            recovered.append(extract(cfg, rx, registry, stream.packets[static_cast<std::size_t>(i)], i == 0));
        CHECK(recovered.slice(0, payload.size()) == payload);
    }
}

TEST_CASE("extraction from an unembedded packet returns carrier bits", "[channels]") {
    auto registry = SlotRegistry::defaults();
    auto stream = make_rtp_stream(codec_by_name("G.711"), 0.1, 21, registry);
    auto cfg = header_channel();
    ChannelState rx;
    BitString carrier = extract(cfg, rx, registry, stream.packets[0]);
    REQUIRE(carrier.size() == 32);
    CHECK(carrier.read_uint(0, 16) == stream.packets[0].slots[0]);
    CHECK(carrier.read_uint(16, 16) == stream.packets[0].slots[1]);
    // a framed covert stream read from raw carrier bits does not decode
    CHECK(frame_decode(carrier).status != FrameStatus::ok);
}

TEST_CASE("channels with disjoint maps do not interfere", "[channels]") {
    auto registry = SlotRegistry::defaults();
    std::vector<ChannelConfig> cfgs = {header_channel(), rtp_field_channel(),
                                       watermark_channel(), auth_channel(32)};
    std::vector<BitString> payloads;
    for (std::uint64_t c = 0; c < cfgs.size(); ++c) payloads.push_back(BitString::random(64, 40 + c));

    auto run_subset = [&](std::uint32_t mask) {
        auto stream = make_rtp_stream(codec_by_name("G.711"), 2, 1234, registry);
        for (auto& p : stream.packets) p.auth_tag = detail::kind_compatible(cfgs[3], p)
                                                        ? std::vector<std::uint8_t>{0, 0, 0, 0}
                                                        : std::vector<std::uint8_t>{};
        std::vector<BitString> out(cfgs.size());
        std::vector<ChannelState> tx(cfgs.size()), rx(cfgs.size());
        std::vector<ChannelLedger> led(cfgs.size());
        std::vector<CovertMessage> msgs;
        for (const auto& p : payloads) msgs.emplace_back(p);
        for (std::int64_t i = 0; i < stream.n; ++i)
            for (std::size_t c = 0; c < cfgs.size(); ++c)
                if (mask & (1u << c))
                    embed(cfgs[c], tx[c], registry, stream.packets[static_cast<std::size_t>(i)],
                          msgs[c], led[c], i == 0);
        for (std::int64_t i = 0; i < stream.n; ++i)
            for (std::size_t c = 0; c < cfgs.size(); ++c)
                if (mask & (1u << c))
                    out[c].append(extract(cfgs[c], rx[c], registry,
                                          stream.packets[static_cast<std::size_t>(i)], i == 0));
        return out;
    };

    // alone, in pairs and all together: each channel's recovered prefix is
    // the same bits it would recover running alone
    for (std::size_t c = 0; c < cfgs.size(); ++c) {
        auto alone = run_subset(1u << c);
        for (std::size_t d = 0; d < cfgs.size(); ++d) {
            if (d == c) continue;
            auto pair = run_subset((1u << c) | (1u << d));
            CHECK(pair[c].slice(0, 64) == alone[c].slice(0, 64));
        }
        auto all = run_subset(0xF);
        CHECK(all[c].slice(0, 64) == alone[c].slice(0, 64));
    }
}

TEST_CASE("bandwidth formulas", "[channels]") {
    SECTION("free/unused fields, Eq-style per-packet rate") {
        CHECK(prbr_ns(32, 32, 0) == 32.0);
        CHECK(prbr_ns(32, 32, 12345) == 32.0);
        CHECK_THAT(prbr_ns(48, 32, 999), Catch::Matchers::WithinAbs(32.016, 1e-12));
        CHECK(prbr_ns(100, 0, 0) == 100.0);
        CHECK_THROWS_AS(prbr_ns(32, 32, -1), std::invalid_argument);
        // limit: the first packet's contribution washes out
        double sb0 = 48, sbj = 32;
        CHECK(std::abs(prbr_ns(sb0, sbj, static_cast<std::int64_t>(10 * sb0)) - sbj) < 0.1);
    }
    SECTION("auth tag rates") {
        CHECK(rbr_srtp(32, 20) == 1600.0);
        CHECK(rbr_srtp(80, 20) == 4000.0);
        CHECK(rbr_srtp(80, 10) == 8000.0);
        CHECK_THROWS_AS(rbr_srtp(32, 0), std::invalid_argument);
    }
    SECTION("rtcp rates") {
        CHECK(prbr_rtcp(1, 1, 160) == 160.0);
        CHECK(prbr_rtcp(2, 1, 160) == 320.0);
        CHECK(prbr_rtcp(0, 5, 160) == 0.0);
        CHECK_THROWS_AS(prbr_rtcp(-1, 1, 160), std::invalid_argument);
        CHECK(rbr_srtcp(80, 108, 540) == 16.0);
        CHECK(rbr_srtcp(80, 0, 540) == 0.0);
        CHECK_THAT(rbr_srtcp(32, 22, 540), Catch::Matchers::WithinAbs(1.304, 5e-4));
        CHECK_THROWS_AS(rbr_srtcp(80, 108, 0), std::invalid_argument);
    }
}
