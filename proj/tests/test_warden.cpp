#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "voipsteg/channels.hpp"
#include "voipsteg/warden.hpp"

using namespace voipsteg;

TEST_CASE("normalization rewrites carriers and spares overt content", "[warden]") {
    auto registry = SlotRegistry::defaults();
    auto stream = make_rtp_stream(codec_by_name("G.711"), 0.2, 61, registry);
    WardenPolicy policy = WardenPolicy::default_active();

    SECTION("listed slots change, payload/seq/ssrc never do") {
        VoipPacket p = stream.packets[3];
        p.padding_flag = true;
        p.padding_count = 4;
        auto payload = p.payload;
        auto seq = p.seq;
        auto ssrc = p.ssrc;
        auto ts_high = p.timestamp >> 9;
        warden_normalize(p, policy, registry);
        CHECK(p.payload == payload);
        CHECK(p.seq == seq);
        CHECK(p.ssrc == ssrc);
        CHECK((p.timestamp >> 9) == ts_high); // only the low 9 bits are fair game
        CHECK(!p.padding_flag);
        CHECK(p.padding_count == 0);
    }
    SECTION("empty policy is the identity") {
        WardenPolicy empty;
        empty.enabled = true;
        empty.strip_padding_extension = false;
        VoipPacket p = stream.packets[4];
        VoipPacket q = p;
        warden_normalize(q, empty, registry);
        CHECK(q.slots == p.slots);
        CHECK(q.timestamp == p.timestamp);
        CHECK(q.payload == p.payload);
    }
    SECTION("auth tags are not stripped by default") {
        CHECK(!policy.strip_auth_tags);
        for (const auto& ref : policy.normalize_slots) CHECK(ref.slot != "auth_tag");
        VoipPacket p = stream.packets[5];
        p.auth_tag = {1, 2, 3, 4};
        warden_normalize(p, policy, registry);
        CHECK(p.auth_tag == std::vector<std::uint8_t>{1, 2, 3, 4});
        // aggressive mode exists behind the explicit flag
        WardenPolicy aggressive = policy;
        aggressive.strip_auth_tags = true;
        warden_normalize(p, aggressive, registry);
        CHECK(p.auth_tag.empty());
    }
    SECTION("normalization destroys an embedded header frame") {
        ChannelConfig cfg;
        cfg.name = "IP/UDP";
        cfg.kind = ChannelKind::header;
        cfg.field_map = {{"ip_id", 0, 16}, {"udp_checksum", 0, 16}};
        ChannelState tx, rx;
        ChannelLedger led;
        BitString secret = BitString::from_hex("0102030405060708");
        CovertMessage msg(frame_encode(secret));
        BitString recovered;
        for (std::int64_t i = 0; i < stream.n; ++i) {
            embed(cfg, tx, registry, stream.packets[static_cast<std::size_t>(i)], msg, led, i == 0);
            warden_normalize(stream.packets[static_cast<std::size_t>(i)], policy, registry);
        }
        for (std::int64_t i = 0; i < stream.n; ++i)
            recovered.append(extract(cfg, rx, registry, stream.packets[static_cast<std::size_t>(i)], i == 0));
        CHECK(frame_decode(recovered).status != FrameStatus::ok);
    }
}

TEST_CASE("policy validation", "[warden]") {
    auto registry = SlotRegistry::defaults();
    WardenPolicy p = WardenPolicy::default_active();
    CHECK_NOTHROW(p.validate(registry));

    WardenPolicy bad_seq = p;
    bad_seq.normalize_slots.push_back({"seq", 0, 16});
    CHECK_THROWS_AS(bad_seq.validate(registry), std::invalid_argument);

    WardenPolicy bad_ssrc = p;
    bad_ssrc.normalize_slots.push_back({"ssrc", 0, 32});
    CHECK_THROWS_AS(bad_ssrc.validate(registry), std::invalid_argument);

    WardenPolicy unknown = p;
    unknown.normalize_slots.push_back({"not_a_slot", 0, 8});
    CHECK_THROWS_AS(unknown.validate(registry), std::invalid_argument);
}

TEST_CASE("expiry filtering against the stream cadence", "[warden]") {
    // LACK packet: 120 ms behind cadence (plus jitter) at the warden
    CHECK(warden_expired(1000000 + 120000, 1000000, 100));
    CHECK(warden_expired(1000000 + 135000, 1000000, 100));
    CHECK(!warden_expired(1000000 + 120000, 1000000, 200));
    // overt packets: at most the jitter cap behind cadence
    for (std::int64_t jitter_us = 0; jitter_us <= 20000; jitter_us += 1000) {
        CHECK(!warden_expired(1000000 + jitter_us, 1000000, 20));
        CHECK(!warden_expired(1000000 + jitter_us, 1000000, 100));
    }
    // threshold 0 disables the filter entirely
    CHECK(!warden_expired(1000000 + 900000, 1000000, 0));
}

TEST_CASE("binomial tail", "[warden]") {
    SECTION("small-n exact value") {
        // X ~ B(10, 0.5): P[X >= 5] = 638/1024
        CHECK_THAT(binomial_upper_tail(5, 10, 0.5),
                   Catch::Matchers::WithinAbs(638.0 / 1024.0, 1e-12));
        CHECK(binomial_upper_tail(0, 10, 0.5) == 1.0);
        CHECK(binomial_upper_tail(11, 10, 0.5) == 0.0);
        CHECK_THAT(binomial_upper_tail(10, 10, 0.5),
                   Catch::Matchers::WithinAbs(1.0 / 1024.0, 1e-12));
    }
    SECTION("degenerate probabilities") {
        CHECK(binomial_upper_tail(1, 100, 0.0) == 0.0);
        CHECK(binomial_upper_tail(50, 100, 1.0) == 1.0);
        CHECK_THROWS_AS(binomial_upper_tail(1, 0, 0.5), std::invalid_argument);
    }
}

TEST_CASE("loss anomaly detector", "[warden]") {
    SECTION("LACK on top of network loss is flagged") {
        // p_N = 1% on 27000 packets expects 270 losses; 405 observed is the
        // composed p_T = 1.495% rate
        auto r = loss_anomaly(405, 27000, 0.01, 0.01);
        CHECK(r.flagged);
        CHECK(r.p_value < 1e-10);
    }
    SECTION("exactly-expected losses are clear") {
        auto r = loss_anomaly(270, 27000, 0.01, 0.01);
        CHECK(!r.flagged);
        CHECK(r.p_value > 0.4);
    }
    SECTION("zero losses are clear under any expectation") {
        CHECK(!loss_anomaly(0, 27000, 0.01, 0.01).flagged);
        CHECK(loss_anomaly(0, 27000, 0.0, 0.01).p_value == 1.0);
    }
    SECTION("false-positive rate stays near alpha over 200 clean calls") {
        const double alpha = 0.05, pn = 0.02;
        const std::int64_t n = 2000;
        int flags = 0;
        for (std::uint64_t call = 0; call < 200; ++call) {
            std::int64_t losses = 0;
            for (std::int64_t i = 0; i < n; ++i)
                if (voipsteg::rng::unit(voipsteg::rng::keyed(call, 4, static_cast<std::uint64_t>(i))) < pn)
                    ++losses;
            if (loss_anomaly(losses, n, pn, alpha).flagged) ++flags;
        }
        auto band = oracles::binomial_band(200, alpha);
        CHECK(static_cast<double>(flags) <= band.mean + 3 * band.sigma);
    }
}
