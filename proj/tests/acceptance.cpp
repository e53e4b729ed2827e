// Acceptance suite: exercises the full laboratory against its pinned
// targets and prints one PASS/FAIL line per criterion. Exits nonzero if any
// criterion fails. Usage: acceptance <path-to-cli> <scenario-dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "voipsteg/analytics.hpp"
#include "voipsteg/calc.hpp"
#include "voipsteg/runner.hpp"

using namespace voipsteg;

namespace {

int g_failures = 0;

void criterion(int num, const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s  criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", num, name.c_str(),
                detail.empty() ? "" : " — ", detail.c_str());
    if (!pass) ++g_failures;
}

std::string run_cli(const std::string& cli, const std::string& args) {
    std::string cmd = cli + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return "<popen failed>";
    std::string out;
    char buf[256];
    while (fgets(buf, sizeof buf, pipe)) out += buf;
    pclose(pipe);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out;
}

bool within_rel(double value, double target, double tol) {
    return std::abs(value - target) <= tol * std::abs(target);
}

std::string fmt(const char* spec, double v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

bool conservation_holds(const CallTrace& t) {
    std::int64_t sum = t.count(Classification::playout) + t.count(Classification::lost) +
                       t.count(Classification::steganogram) + t.count(Classification::dropped);
    return sum == static_cast<std::int64_t>(t.records.size());
}

// ---------------------------------------------------------------------------

void criterion_1_formula_parity(const std::string& cli) {
    struct Case {
        const char* args;
        const char* expect;
    };
    const Case cases[] = {
        {"calc rbr_srtp SB_AT=32 Ip=20", "1600"},
        {"calc lack_prbr r=64000 If=20 pi=0.005", "6.4"},
        {"calc lack_rbr r=64000 pi=0.005", "320"},
        {"calc prbr_rtcp S_CP=1 N_RB=1 S_RB=160", "160"},
    };
    bool pass = true;
    std::string detail;
    for (const auto& c : cases) {
        std::string got = run_cli(cli, c.args);
        if (got != c.expect) {
            pass = false;
            detail += std::string(c.args) + " -> '" + got + "' (want " + c.expect + ") ";
        }
    }
    if (pass) detail = "1600, 6.4, 320, 160 all exact";
    criterion(1, "formula parity (exact)", pass, detail);
}

struct BatchArtifacts {
    BandwidthReport report;
    TrafficMix mix;
    TimeSeries series;
    std::vector<CallResult> results;
};

BatchArtifacts run_table2(const Scenario& sc) {
    BatchArtifacts a;
    a.results = run_batch(sc);
    std::vector<CallTrace> traces;
    for (auto& r : a.results) traces.push_back(r.trace);
    a.report = summarize(traces);
    a.mix = traffic_mix(traces.front());
    std::vector<TimeSeries> all;
    for (const auto& t : traces) all.push_back(flow_timeseries(t, 10));
    a.series = average_timeseries(all);
    return a;
}

void criterion_2_table4(const BatchArtifacts& a, double batch_seconds) {
    bool total_ok = within_rel(a.report.avg_total_bits, 1364170.0, 0.05);
    bool rbr_ok = within_rel(a.report.avg_rbr_bps, 2487.80, 0.05);
    bool prbr_ok = within_rel(a.report.avg_prbr, 50.04, 0.05);
    std::string detail = "total " + fmt("%.0f", a.report.avg_total_bits) + " (target 1364170 ±5%), rbr " +
                         fmt("%.2f", a.report.avg_rbr_bps) + " (2487.80 ±5%), prbr " +
                         fmt("%.2f", a.report.avg_prbr) + " (50.04 ±5%), batch " +
                         fmt("%.1f", batch_seconds) + "s";
    criterion(2, "typical-call averages over 30 calls", total_ok && rbr_ok && prbr_ok, detail);
}

void criterion_3_table5(const BatchArtifacts& a) {
    struct Target {
        const char* name;
        double pct;
    };
    const Target targets[] = {
        {"IP/UDP", 64.11}, {"RTP", 32.055}, {"LACK", 2.633}, {"QIM", 1.202}, {"RTCP", 0.354},
    };
    bool pass = true;
    std::string detail;
    for (const auto& t : targets) {
        double got = -1;
        for (const auto& c : a.report.channels)
            if (c.name == t.name) got = 100.0 * c.fraction;
        bool ok = got >= 0 && std::abs(got - t.pct) <= 1.5;
        pass = pass && ok;
        detail += std::string(t.name) + " " + fmt("%.3f", got) + (ok ? "" : "(!)") + " ";
    }
    criterion(3, "per-method bandwidth fractions (±1.5 pp)", pass, detail);
}

void criterion_4_table3(const BatchArtifacts& a) {
    bool rtp_ok = std::abs(a.mix.rtp_pct - 99.899) <= 0.01;
    bool rtcp_ok = std::abs(a.mix.rtcp_pct - 0.085) <= 0.01;
    bool sig_ok = std::abs(a.mix.signaling_pct - 0.016) <= 0.01;
    std::string detail = "rtp " + fmt("%.3f", a.mix.rtp_pct) + " / rtcp " +
                         fmt("%.3f", a.mix.rtcp_pct) + " / signaling " +
                         fmt("%.3f", a.mix.signaling_pct) + " vs 99.899/0.085/0.016";
    criterion(4, "traffic mix (±0.01 pp)", rtp_ok && rtcp_ok && sig_ok, detail);
}

void criterion_5_timeseries(const BatchArtifacts& a) {
    double lo = 1e18, hi = -1e18, lack_min = 1e18, other_max = -1e18;
    int peaks = 0;
    for (const auto& p : a.series.points) {
        lo = std::min(lo, p.rbr_bps);
        hi = std::max(hi, p.rbr_bps);
        if (p.has_lack) {
            ++peaks;
            lack_min = std::min(lack_min, p.rbr_bps);
        } else {
            other_max = std::max(other_max, p.rbr_bps);
        }
    }
    bool range_ok = lo >= 2400.0 && hi <= 2650.0;
    bool peaks_ok = peaks > 0 && lack_min > other_max;
    std::string detail = "windows in [" + fmt("%.1f", lo) + ", " + fmt("%.1f", hi) +
                         "], " + std::to_string(peaks) + " LACK peaks, min peak " +
                         fmt("%.1f", lack_min) + " > max baseline " + fmt("%.1f", other_max);
    criterion(5, "10s-window RBR stays in [2400, 2650] with LACK peaks", range_ok && peaks_ok, detail);
}

void criterion_6_lack_statistics() {
    // Bernoulli selection rate over >= 1e5 packets
    LackPlan plan{0.005, 120, LackScheduler::bernoulli};
    const std::int64_t n = 200000;
    auto sel = select_packets(n, plan, 20240517);
    double mean = static_cast<double>(n) * plan.pi;
    double sigma = std::sqrt(mean * (1 - plan.pi));
    bool sel_ok = std::abs(static_cast<double>(sel.size()) - mean) <= 3 * sigma;

    // composed loss across a simulated call: what an unaware receiver counts
    // as lost must match the two-source loss model
    Scenario sc = scenario_from_text(R"(
calls = 1
duration_s = 2000
base_seed = 60
[codec]
name = G.711
[network]
base_delay_ms = 30
jitter_ms = 20
loss_pN = 0.01
[jitter_buffer]
depth_ms = 60
[rtcp]
interval_s = 0
[lack]
pi = 0.005
scheduler = bernoulli
inject_delay_ms = 120
message = random
)");
    auto r = run_call(sc, 0);
    std::int64_t rtp_total = r.trace.count_kind(PacketKind::rtp);
    std::int64_t unusable = 0;
    for (const auto& rec : r.trace.records)
        if (rec.kind == PacketKind::rtp && rec.cls != Classification::playout) ++unusable;
    double pt = total_loss(0.01, 0.005);
    double lmean = static_cast<double>(rtp_total) * pt;
    double lsigma = std::sqrt(lmean * (1 - pt));
    bool loss_ok = std::abs(static_cast<double>(unusable) - lmean) <= 3 * lsigma;

    // algebraic round trip
    bool alg_ok = true;
    for (int i = 0; i < 2000; ++i) {
        double pn = (i % 97) * 0.001;
        double pi = (i % 89) * 0.0003;
        alg_ok = alg_ok && std::abs(pi_max(total_loss(pn, pi), pn) - pi) <= 1e-12;
    }

    std::string detail = "selection " + std::to_string(sel.size()) + "/" + std::to_string(n) +
                         " (mean 1000), unusable " + std::to_string(unusable) + " (mean " +
                         fmt("%.1f", lmean) + "), round-trip <= 1e-12";
    criterion(6, "LACK statistical suite (3-sigma)", sel_ok && loss_ok && alg_ok, detail);
}

std::string channel_block(int kind_index) {
    switch (kind_index) {
        case 0:
            return "[channel CH]\nkind = header\nfields = ip_id:0:16, udp_checksum:0:16\n";
        case 1:
            return "[channel CH]\nkind = rtp_field\nfields = timestamp:0:9, padding_count:0:7\n";
        case 2:
            return "[channel CH]\nkind = auth_tag\ntag_bits = 32\ntarget = rtp\n";
        case 3:
            return "[channel CH]\nkind = rtcp_report\ns_cp = 1\nn_rb = 1\ns_rb = 160\nntp_slot = true\n";
        default:
            return "[channel CH]\nkind = watermark\nrate = 0.6\nmode = qim\n";
    }
}

Scenario random_small_scenario(int kind_index, std::uint64_t seed, bool framed, bool warden) {
    // framed runs need room for the 32 framing bits even on the slowest channel
    double duration = (framed ? 3.0 : 1.0) + static_cast<double>(seed % 5) * 0.5;
    std::string text;
    text += "calls = 1\n";
    text += "duration_s = " + std::to_string(duration) + "\n";
    text += "base_seed = " + std::to_string(9000 + seed) + "\n";
    text += "[codec]\nname = G.711\n";
    text += "[network]\nbase_delay_ms = " + std::to_string(10 + seed % 40) + "\njitter_ms = " +
            std::to_string(seed % 21) + "\nloss_pN = 0\n";
    text += "[jitter_buffer]\ndepth_ms = " + std::to_string(30 + seed % 41) + "\n";
    text += "[rtcp]\ninterval_s = " + std::string(kind_index == 3 ? "0.5" : "0") + "\n";
    text += channel_block(kind_index);
    text += std::string("message = random\n") + (framed ? "framed = true\n" : "");
    if (warden) {
        text += "[warden]\nenabled = true\n"
                "normalize = ip_id:0:16, udp_checksum:0:16, timestamp:0:9\n"
                "strip_padding_extension = true\n";
    }
    return scenario_from_text(text);
}

void criterion_7_roundtrip_suite() {
    const char* kind_names[] = {"header", "rtp_field", "auth_tag", "rtcp_report", "watermark"};
    bool pass = true;
    std::string detail;
    int runs = 0;

    // lossless extraction is bit-exact: 1000 seeded scenario/message pairs
    // per channel (unframed random payloads sized to capacity)
    for (int kind = 0; kind < 5 && pass; ++kind) {
        for (std::uint64_t s = 0; s < 1000; ++s) {
            Scenario sc = random_small_scenario(kind, s, /*framed=*/s % 10 == 0, /*warden=*/false);
            auto r = run_call(sc, 0);
            ++runs;
            if (!conservation_holds(r.trace)) {
                pass = false;
                detail = std::string("conservation broke: ") + kind_names[kind] + " seed " +
                         std::to_string(s);
                break;
            }
            const auto& ch = r.channels.at(0);
            bool exact = ch.extracted_stream.size() >= ch.embedded_stream.size() &&
                         ch.extracted_stream.slice(0, ch.embedded_stream.size()) == ch.embedded_stream;
            if (ch.framed) exact = exact && ch.frame_status == FrameStatus::ok;
            if (!exact || ch.ledger.extracted_bits != ch.ledger.embedded_bits) {
                pass = false;
                detail = std::string("lossless extraction broke: ") + kind_names[kind] + " seed " +
                         std::to_string(s);
                break;
            }
        }
    }

    // a normalizing warden must break header/rtp_field frames
    int disrupted = 0, warden_runs = 0;
    for (int kind = 0; kind < 2 && pass; ++kind) {
        for (std::uint64_t s = 0; s < 100; ++s) {
            Scenario sc = random_small_scenario(kind, 5000 + s, /*framed=*/true, /*warden=*/true);
            auto r = run_call(sc, 0);
            ++runs;
            ++warden_runs;
            if (!conservation_holds(r.trace)) {
                pass = false;
                detail = "conservation broke under the warden";
                break;
            }
            if (r.channels.at(0).frame_status != FrameStatus::ok) ++disrupted;
        }
    }
    if (pass && disrupted != warden_runs) {
        pass = false;
        detail = "warden left " + std::to_string(warden_runs - disrupted) + " frames intact";
    }
    if (pass)
        detail = std::to_string(runs) + " runs: extraction bit-exact, " +
                 std::to_string(disrupted) + "/" + std::to_string(warden_runs) +
                 " warden frames disrupted, conservation held";
    criterion(7, "round-trip / warden / conservation suite", pass, detail);
}

void criterion_8_determinism(const Scenario& table2) {
    Scenario sc = table2;
    sc.calls = 2;
    auto run_csvs = [&sc] {
        auto results = run_batch(sc);
        std::vector<CallTrace> traces;
        for (auto& r : results) traces.push_back(r.trace);
        std::string all;
        for (const auto& t : traces) all += trace_to_csv(t);
        auto rep = summarize(traces);
        all += report_to_csv(rep);
        all += traffic_mix_to_csv(traffic_mix(traces.front()));
        all += fractions_to_csv(bandwidth_fractions(rep));
        all += timeseries_to_csv(flow_timeseries(traces.front(), 10));
        return all;
    };
    std::string first = run_csvs();
    std::string second = run_csvs();
    bool pass = first == second && !first.empty();
    criterion(8, "byte-identical CSV replay", pass,
              pass ? std::to_string(first.size()) + " bytes compared equal" : "outputs differ");
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: acceptance <cli-binary> <scenario-dir>\n");
        return 2;
    }
    const std::string cli = argv[1];
    const std::string scenario_dir = argv[2];

    criterion_1_formula_parity(cli);

    Scenario table2 = scenario_from_file(scenario_dir + "/table2.scenario");
    auto t0 = std::chrono::steady_clock::now();
    BatchArtifacts a = run_table2(table2);
    double batch_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    criterion_2_table4(a, batch_s);
    criterion_3_table5(a);
    criterion_4_table3(a);
    criterion_5_timeseries(a);
    criterion_6_lack_statistics();
    criterion_7_roundtrip_suite();
    criterion_8_determinism(table2);

    if (g_failures == 0) {
        std::printf("all acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d acceptance criteria FAILED\n", g_failures);
    return 1;
}
