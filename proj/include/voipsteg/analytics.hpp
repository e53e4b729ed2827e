#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "voipsteg/netsim.hpp"

// Post-run measurement: RBR / PRBR / total covert data and their
// distribution over channels and over time, computed from call traces the
// same way the experiment's tables and figures were.

namespace voipsteg {

// Aggregate covert bandwidth is the plain sum of the subchannel rates.
inline double total_bandwidth(const std::vector<double>& channel_rates) {
    double sum = 0.0;
    for (double r : channel_rates) sum += r;
    return sum;
}

struct ChannelSummary {
    std::string name;
    PacketKind carrier = PacketKind::rtp;
    double avg_bits = 0.0;
    double fraction = 0.0; // of total covert bits
};

struct BandwidthReport {
    int calls = 0;
    double avg_total_bits = 0.0;
    double std_total_bits = 0.0;
    double avg_rbr_bps = 0.0;   // total bits / call duration
    double std_rbr_bps = 0.0;
    double avg_prbr = 0.0;      // total bits / received RTP+RTCP packets
    double std_prbr = 0.0;
    bool fractions_defined = false;
    std::vector<ChannelSummary> channels;
};

namespace detail {

inline double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean(v), s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline PacketKind channel_carrier(const CallTrace& t, std::size_t col) {
    // a channel rides whichever packet kind its bits appear on
    for (const auto& r : t.records)
        if (col < r.embedded_bits.size() && r.embedded_bits[col] > 0) return r.kind;
    return PacketKind::rtp;
}

} // namespace detail

// Averages and spreads across a batch of calls, plus per-channel totals
// and their share of the covert bandwidth.
inline BandwidthReport summarize(const std::vector<CallTrace>& traces) {
    if (traces.empty()) throw std::invalid_argument("summarize: empty call batch");
    BandwidthReport rep;
    rep.calls = static_cast<int>(traces.size());

    std::vector<double> totals, rbrs, prbrs;
    const auto& names = traces.front().channel_names;
    std::vector<double> channel_bits(names.size(), 0.0);

    for (const auto& t : traces) {
        if (t.channel_names != names)
            throw std::invalid_argument("summarize: traces come from different channel sets");
        double total = static_cast<double>(t.total_extracted_bits());
        totals.push_back(total);
        rbrs.push_back(total / t.duration_s);
        std::int64_t received = t.arrived_count(PacketKind::rtp) + t.arrived_count(PacketKind::rtcp);
        prbrs.push_back(received > 0 ? total / static_cast<double>(received) : 0.0);
        for (std::size_t c = 0; c < names.size(); ++c)
            channel_bits[c] += static_cast<double>(t.channel_extracted_bits(c));
    }

    rep.avg_total_bits = detail::mean(totals);
    rep.std_total_bits = detail::sample_std(totals);
    rep.avg_rbr_bps = detail::mean(rbrs);
    rep.std_rbr_bps = detail::sample_std(rbrs);
    rep.avg_prbr = detail::mean(prbrs);
    rep.std_prbr = detail::sample_std(prbrs);

    rep.fractions_defined = rep.avg_total_bits > 0;
    for (std::size_t c = 0; c < names.size(); ++c) {
        ChannelSummary s;
        s.name = names[c];
        s.carrier = detail::channel_carrier(traces.front(), c);
        s.avg_bits = channel_bits[c] / static_cast<double>(traces.size());
        s.fraction = rep.fractions_defined ? s.avg_bits / rep.avg_total_bits : 0.0;
        rep.channels.push_back(std::move(s));
    }
    return rep;
}

struct TrafficMix {
    bool empty = false;
    double rtp_pct = 0.0;
    double rtcp_pct = 0.0;
    double signaling_pct = 0.0;
};

// Share of each traffic type among all packets of the call.
inline TrafficMix traffic_mix(const CallTrace& t) {
    TrafficMix m;
    double total = static_cast<double>(t.records.size());
    if (t.records.empty()) {
        m.empty = true;
        return m;
    }
    m.rtp_pct = 100.0 * static_cast<double>(t.count_kind(PacketKind::rtp)) / total;
    m.rtcp_pct = 100.0 * static_cast<double>(t.count_kind(PacketKind::rtcp)) / total;
    m.signaling_pct = 100.0 * static_cast<double>(t.count_kind(PacketKind::signaling)) / total;
    return m;
}

// Per-method shares of the covert bandwidth; undefined for an all-zero run.
struct BandwidthFractions {
    bool defined = false;
    std::vector<ChannelSummary> channels; // fraction field populated
};

inline BandwidthFractions bandwidth_fractions(const BandwidthReport& rep) {
    BandwidthFractions f;
    f.defined = rep.fractions_defined;
    f.channels = rep.channels;
    return f;
}

struct TimeSeriesPoint {
    double window_start_s = 0.0;
    double window_len_s = 0.0;
    std::int64_t bits = 0;     // covert bits extracted from carriers in this window
    std::int64_t packets = 0;  // RTP+RTCP packets received in this window
    bool has_lack = false;
    double rbr_bps = 0.0;
    double prbr = 0.0;
};

struct TimeSeries {
    double window_s = 0.0;
    std::vector<TimeSeriesPoint> points;
};

// Covert data flow over the call, binned by the carrier's cadence position
// (its nominal send time), which is how the figures' x axis reads. The final
// window may be shorter than the rest when the duration is not a multiple.
inline TimeSeries flow_timeseries(const CallTrace& t, double window_s) {
    if (window_s <= 0) throw std::invalid_argument("flow_timeseries: window must be positive");
    TimeSeries ts;
    ts.window_s = window_s;
    std::size_t n_windows = static_cast<std::size_t>(std::ceil(t.duration_s / window_s - 1e-12));
    if (n_windows == 0) n_windows = 1;
    ts.points.resize(n_windows);
    const std::int64_t window_us = static_cast<std::int64_t>(window_s * 1e6 + 0.5);

    std::size_t lack_col = t.channel_names.size();
    for (std::size_t c = 0; c < t.channel_names.size(); ++c)
        if (t.channel_names[c] == "LACK") lack_col = c;

    for (const auto& r : t.records) {
        if (r.kind == PacketKind::signaling) continue;
        std::size_t w = static_cast<std::size_t>(r.nominal_send_us / window_us);
        if (w >= n_windows) w = n_windows - 1;
        auto& pt = ts.points[w];
        for (std::size_t c = 0; c < r.extracted_bits.size(); ++c) {
            pt.bits += r.extracted_bits[c];
            if (c == lack_col && r.extracted_bits[c] > 0) pt.has_lack = true;
        }
        if (r.arrival_us >= 0 && !r.warden_dropped) ++pt.packets;
    }

    for (std::size_t w = 0; w < n_windows; ++w) {
        auto& pt = ts.points[w];
        pt.window_start_s = static_cast<double>(w) * window_s;
        double len = std::min(window_s, t.duration_s - pt.window_start_s);
        if (len <= 0) len = window_s;
        pt.window_len_s = len;
        pt.rbr_bps = static_cast<double>(pt.bits) / len;
        pt.prbr = pt.packets > 0 ? static_cast<double>(pt.bits) / static_cast<double>(pt.packets) : 0.0;
    }
    return ts;
}

// Point-wise average over equal-shape series (the "average call" view).
inline TimeSeries average_timeseries(const std::vector<TimeSeries>& series) {
    if (series.empty()) throw std::invalid_argument("average_timeseries: empty input");
    TimeSeries avg = series.front();
    for (std::size_t s = 1; s < series.size(); ++s) {
        const auto& src = series[s];
        if (src.points.size() != avg.points.size())
            throw std::invalid_argument("average_timeseries: mismatched series shapes");
        for (std::size_t i = 0; i < avg.points.size(); ++i) {
            avg.points[i].bits += src.points[i].bits;
            avg.points[i].packets += src.points[i].packets;
            avg.points[i].has_lack = avg.points[i].has_lack || src.points[i].has_lack;
        }
    }
    double n = static_cast<double>(series.size());
    for (auto& pt : avg.points) {
        pt.rbr_bps = static_cast<double>(pt.bits) / n / pt.window_len_s;
        pt.prbr = pt.packets > 0 ? static_cast<double>(pt.bits) / static_cast<double>(pt.packets) : 0.0;
    }
    return avg;
}

// ---------------------------------------------------------------------------
// Rendering: aligned text tables in the layout of the experiment's own
// summaries, plus RFC-4180-ish CSV.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline void pad_to(std::string& s, std::size_t width) {
    while (s.size() < width) s += ' ';
}

} // namespace detail

inline std::string render_traffic_mix(const TrafficMix& m) {
    std::string out;
    out += "Type of traffic      Percent [%]\n";
    out += "-----------------    -----------\n";
    if (m.empty) {
        out += "(empty trace)\n";
        return out;
    }
    out += "Signaling messages   " + detail::fmt("%10.3f", m.signaling_pct) + "\n";
    out += "RTP packets          " + detail::fmt("%10.3f", m.rtp_pct) + "\n";
    out += "RTCP reports         " + detail::fmt("%10.3f", m.rtcp_pct) + "\n";
    return out;
}

inline std::string render_bandwidth_report(const BandwidthReport& r) {
    std::string out;
    out += "Measure                              Value          Std dev\n";
    out += "---------------------------------    -----------    ---------\n";
    out += "Average total covert data [bits]     " + detail::fmt("%-12.1f", r.avg_total_bits) +
           "   " + detail::fmt("%.3f", r.std_total_bits) + "\n";
    out += "Average RBR [bits/s]                 " + detail::fmt("%-12.2f", r.avg_rbr_bps) +
           "   " + detail::fmt("%.3f", r.std_rbr_bps) + "\n";
    out += "Average PRBR [bits/packet]           " + detail::fmt("%-12.2f", r.avg_prbr) +
           "   " + detail::fmt("%.3f", r.std_prbr) + "\n";
    return out;
}

inline std::string render_fractions(const BandwidthFractions& f) {
    std::string out;
    out += "Carrier         Method               Bandwidth fraction [%]\n";
    out += "------------    -----------------    ----------------------\n";
    if (!f.defined) {
        out += "(no covert data extracted; fractions undefined)\n";
        return out;
    }
    for (const auto& c : f.channels) {
        std::string carrier = c.carrier == PacketKind::rtcp ? "RTCP reports" : "RTP packets";
        detail::pad_to(carrier, 16);
        std::string name = c.name;
        detail::pad_to(name, 21);
        out += carrier + name + detail::fmt("%10.3f", 100.0 * c.fraction) + "\n";
    }
    return out;
}

inline std::string timeseries_to_csv(const TimeSeries& ts) {
    std::string out = "window_start_s,rbr_bps,prbr_bits_per_packet\n";
    char buf[96];
    for (const auto& p : ts.points) {
        std::snprintf(buf, sizeof buf, "%.3f,%.6f,%.6f\n", p.window_start_s, p.rbr_bps, p.prbr);
        out += buf;
    }
    return out;
}

inline std::string traffic_mix_to_csv(const TrafficMix& m) {
    std::string out = "type,percent\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "signaling,%.6f\nrtp,%.6f\nrtcp,%.6f\n",
                  m.signaling_pct, m.rtp_pct, m.rtcp_pct);
    out += buf;
    return out;
}

inline std::string report_to_csv(const BandwidthReport& r) {
    std::string out = "measure,value,std_dev\n";
    char buf[96];
    std::snprintf(buf, sizeof buf, "total_covert_bits,%.3f,%.6f\n", r.avg_total_bits, r.std_total_bits);
    out += buf;
    std::snprintf(buf, sizeof buf, "rbr_bps,%.6f,%.6f\n", r.avg_rbr_bps, r.std_rbr_bps);
    out += buf;
    std::snprintf(buf, sizeof buf, "prbr_bits_per_packet,%.6f,%.6f\n", r.avg_prbr, r.std_prbr);
    out += buf;
    return out;
}

inline std::string fractions_to_csv(const BandwidthFractions& f) {
    std::string out = "method,carrier,avg_bits,fraction_pct\n";
    char buf[128];
    for (const auto& c : f.channels) {
        std::snprintf(buf, sizeof buf, "%s,%s,%.3f,%.6f\n", c.name.c_str(),
                      c.carrier == PacketKind::rtcp ? "rtcp" : "rtp", c.avg_bits,
                      f.defined ? 100.0 * c.fraction : 0.0);
        out += buf;
    }
    return out;
}

} // namespace voipsteg
