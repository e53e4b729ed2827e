#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "voipsteg/channels.hpp"
#include "voipsteg/lack.hpp"
#include "voipsteg/netsim.hpp"
#include "voipsteg/rational.hpp"
#include "voipsteg/warden.hpp"

// Scenario files: a hand-editable key-value format with [section] headers
// and # comments. One file pins everything a run needs — codec, duration,
// channel set, LACK plan, network conditions, warden policy and seeds — so
// experiments replay bit-identically from the file alone.

namespace voipsteg {

struct MessageSpec {
    enum class Source { random, hex, file } source = Source::random;
    std::string arg;
    bool framed = false;

    static MessageSpec parse(const std::string& text) {
        MessageSpec m;
        if (text == "random") { m.source = Source::random; return m; }
        if (text.rfind("hex:", 0) == 0) { m.source = Source::hex; m.arg = text.substr(4); return m; }
        if (text.rfind("file:", 0) == 0) { m.source = Source::file; m.arg = text.substr(5); return m; }
        throw std::invalid_argument("message must be 'random', 'hex:<digits>' or 'file:<path>': " + text);
    }
};

struct ChannelSpec {
    ChannelConfig config;
    MessageSpec message;
};

struct Scenario {
    int calls = 30;
    double duration_s = 540.0;
    std::uint64_t base_seed = 1;
    bool lack_aware = true;

    CodecProfile codec = codec_by_name("G.711");
    NetworkModel network;
    JitterBuffer buffer;
    DelayBudget budget;
    double rtcp_interval_s = 5.0; // 0 disables RTCP
    SlotRegistry slots = SlotRegistry::defaults();

    std::vector<ChannelSpec> channels;

    LackPlan lack;           // pi == 0 disables LACK
    MessageSpec lack_message;

    WardenPolicy warden;

    std::uint64_t call_seed(int call_index) const {
        return rng::keyed(base_seed, rng::kStreamCall, static_cast<std::uint64_t>(call_index));
    }

    LossModel loss_model() const {
        return {network.loss_pn, lack.pi, codec.loss_tolerance};
    }

    const ChannelSpec* find_channel(ChannelKind kind) const {
        for (const auto& c : channels)
            if (c.config.kind == kind) return &c;
        return nullptr;
    }

    // Collects every violated constraint instead of stopping at the first;
    // the CLI reports them all in one pass.
    std::vector<std::string> validate() const;
};

namespace detail {

inline int builtin_field_width(const std::string& slot) {
    if (slot == "seq") return 16;
    if (slot == "timestamp") return 32;
    if (slot == "ssrc") return 32;
    if (slot == "padding_count") return 8;
    if (slot == "ntp_ts") return 32;
    return -1;
}

inline bool ranges_overlap(const FieldRef& a, const FieldRef& b) {
    return a.slot == b.slot && a.lsb < b.lsb + b.width && b.lsb < a.lsb + a.width;
}

} // namespace detail

inline std::vector<std::string> Scenario::validate() const {
    std::vector<std::string> errs;
    auto check = [&](bool ok, const std::string& msg) { if (!ok) errs.push_back(msg); };

    try { codec.validate(); } catch (const std::exception& e) { errs.emplace_back(e.what()); }
    try { network.validate(); } catch (const std::exception& e) { errs.emplace_back(e.what()); }

    check(calls >= 1, "calls must be >= 1");
    check(duration_s > 0, "duration_s must be positive");
    check(rtcp_interval_s >= 0, "rtcp interval must be >= 0 (0 disables RTCP)");
    check(buffer.depth_ms > 0, "jitter buffer depth must be positive");

    // per-channel constraints
    std::map<std::string, int> names;
    int watermark_count = 0, rtcp_count = 0, auth_rtp = 0, auth_rtcp = 0;
    for (const auto& c : channels) {
        try { c.config.validate(); } catch (const std::exception& e) { errs.emplace_back(e.what()); }
        if (++names[c.config.name] == 2)
            errs.push_back("duplicate channel name: " + c.config.name);
        if (c.config.kind == ChannelKind::watermark && ++watermark_count == 2)
            errs.push_back("at most one watermark channel may be configured");
        if (c.config.kind == ChannelKind::rtcp_report && ++rtcp_count == 2)
            errs.push_back("at most one rtcp_report channel may be configured");
        if (c.config.kind == ChannelKind::auth_tag) {
            int& n = c.config.auth_target == PacketKind::rtp ? auth_rtp : auth_rtcp;
            if (++n == 2)
                errs.push_back("at most one auth_tag channel per target (the tag is one field)");
        }
        if (rtcp_interval_s <= 0 &&
            (c.config.kind == ChannelKind::rtcp_report ||
             (c.config.kind == ChannelKind::auth_tag && c.config.auth_target == PacketKind::rtcp)))
            errs.push_back("channel '" + c.config.name + "' needs rtcp.interval_s > 0");

        // slot names and bit ranges must resolve
        auto check_refs = [&](const std::vector<FieldRef>& refs) {
            for (const auto& ref : refs) {
                int width = detail::builtin_field_width(ref.slot);
                if (width < 0) {
                    int idx = slots.find(ref.slot);
                    if (idx < 0) {
                        errs.push_back("channel '" + c.config.name + "': unknown slot '" + ref.slot + "'");
                        continue;
                    }
                    width = slots.slots()[static_cast<std::size_t>(idx)].width;
                }
                if (ref.lsb < 0 || ref.width <= 0 || ref.lsb + ref.width > width)
                    errs.push_back("channel '" + c.config.name + "': bit range " +
                                   std::to_string(ref.lsb) + "+" + std::to_string(ref.width) +
                                   " exceeds slot '" + ref.slot + "' (" + std::to_string(width) + " bits)");
                if (ref.slot == "seq" || ref.slot == "ssrc")
                    errs.push_back("channel '" + c.config.name + "': slot '" + ref.slot +
                                   "' carries overt stream identity and is not writable mid-stream");
            }
        };
        if (c.config.kind == ChannelKind::header || c.config.kind == ChannelKind::rtp_field) {
            check_refs(c.config.field_map);
            // initial-value fields are legitimate carriers on the first packet
            for (const auto& ref : c.config.first_packet_extra) {
                int width = detail::builtin_field_width(ref.slot);
                if (width < 0) {
                    int idx = slots.find(ref.slot);
                    width = idx < 0 ? -1 : slots.slots()[static_cast<std::size_t>(idx)].width;
                }
                if (width < 0)
                    errs.push_back("channel '" + c.config.name + "': unknown slot '" + ref.slot + "'");
                else if (ref.lsb < 0 || ref.width <= 0 || ref.lsb + ref.width > width)
                    errs.push_back("channel '" + c.config.name + "': first-packet bit range exceeds slot '" +
                                   ref.slot + "'");
            }
        }
    }

    // channels claiming overlapping bits would silently corrupt each other's
    // measurements; reject at load, never at embed time
    for (std::size_t i = 0; i < channels.size(); ++i) {
        for (std::size_t j = i + 1; j < channels.size(); ++j) {
            const auto& a = channels[i].config;
            const auto& b = channels[j].config;
            auto field_channels = [](const ChannelConfig& c) {
                return c.kind == ChannelKind::header || c.kind == ChannelKind::rtp_field;
            };
            if (!field_channels(a) || !field_channels(b)) continue;
            for (const auto& ra : a.field_map)
                for (const auto& rb : b.field_map)
                    if (detail::ranges_overlap(ra, rb))
                        errs.push_back("channels '" + a.name + "' and '" + b.name +
                                       "' claim overlapping bits of slot '" + ra.slot + "'");
        }
    }

    if (lack.pi > 0) {
        try {
            lack.validate(buffer, loss_model());
        } catch (const std::exception& e) {
            errs.emplace_back(e.what());
        }
    }

    if (warden.enabled) {
        try { warden.validate(slots); } catch (const std::exception& e) { errs.emplace_back(e.what()); }
    }
    return errs;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct ScenarioEntry {
    std::string section; // "" for top level, "channel <name>" for channels
    std::string key;
    std::string value;
    int line = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) { out.push_back(trim(cur)); cur.clear(); }
        else cur += c;
    }
    out.push_back(trim(cur));
    return out;
}

inline double to_number(const std::string& v, const std::string& what) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw std::invalid_argument(what + ": not a number: '" + v + "'");
    }
}

inline std::int64_t to_int(const std::string& v, const std::string& what) {
    try {
        std::size_t pos = 0;
        long long n = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (...) {
        throw std::invalid_argument(what + ": not an integer: '" + v + "'");
    }
}

inline bool to_bool(const std::string& v, const std::string& what) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument(what + ": not a boolean: '" + v + "'");
}

// "slot:lsb:width" with "slot" meaning the whole slot when ranges are omitted
inline FieldRef parse_field_ref(const std::string& text, const SlotRegistry& registry) {
    auto parts = split(text, ':');
    FieldRef ref;
    ref.slot = parts[0];
    if (parts.size() == 1) {
        int width = builtin_field_width(ref.slot);
        if (width < 0) {
            int idx = registry.find(ref.slot);
            width = idx < 0 ? -1 : registry.slots()[static_cast<std::size_t>(idx)].width;
        }
        if (width < 0) throw std::invalid_argument("unknown slot in field list: " + ref.slot);
        ref.lsb = 0;
        ref.width = width;
    } else if (parts.size() == 3) {
        ref.lsb = static_cast<int>(to_int(parts[1], "field lsb"));
        ref.width = static_cast<int>(to_int(parts[2], "field width"));
    } else {
        throw std::invalid_argument("field ref must be 'slot' or 'slot:lsb:width': " + text);
    }
    return ref;
}

// Exact decimal-to-rational for the watermark rate ("0.6" -> 3/5).
inline void parse_rate(const std::string& text, std::int64_t& num, std::int64_t& den) {
    Rational r = Rational::parse(text);
    num = r.num();
    den = r.den();
}

} // namespace detail

inline std::vector<ScenarioEntry> scenario_entries_from_text(const std::string& text) {
    std::vector<ScenarioEntry> entries;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("line " + std::to_string(lineno) + ": unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key = value");
        entries.push_back({section, detail::trim(line.substr(0, eq)),
                           detail::trim(line.substr(eq + 1)), lineno});
    }
    return entries;
}

// Keys accepted for CLI/sweep overrides, addressed as "section.key".
inline const std::vector<std::string>& sweep_knobs() {
    static const std::vector<std::string> knobs = {
        "duration_s",           "lack.pi",           "lack.inject_delay_ms",
        "jitter_buffer.depth_ms", "rtcp.interval_s", "network.loss_pN",
        "network.jitter_ms",    "network.base_delay_ms", "warden.drop_expired_threshold_ms",
    };
    return knobs;
}

inline Scenario scenario_from_entries(std::vector<ScenarioEntry> entries) {
    Scenario sc;
    sc.channels.clear();

    // slot registry first: field refs elsewhere resolve against it
    for (const auto& e : entries)
        if (e.section == "slots") sc.slots.add(e.key, static_cast<int>(detail::to_int(e.value, e.key)));

    std::map<std::string, std::size_t> channel_index;
    bool tolerance_set = false;
    for (const auto& e : entries) {
        const std::string where = "line " + std::to_string(e.line) + " (" + e.key + ")";
        try {
            if (e.section.empty()) {
                if (e.key == "calls") sc.calls = static_cast<int>(detail::to_int(e.value, where));
                else if (e.key == "duration_s") sc.duration_s = detail::to_number(e.value, where);
                else if (e.key == "base_seed") sc.base_seed = static_cast<std::uint64_t>(detail::to_int(e.value, where));
                else if (e.key == "lack_aware_receiver") sc.lack_aware = detail::to_bool(e.value, where);
                else throw std::invalid_argument("unknown top-level key: " + e.key);
            } else if (e.section == "codec") {
                if (e.key == "name") sc.codec = codec_by_name(e.value);
                else if (e.key == "rate_bps") sc.codec.rate_bps = detail::to_int(e.value, where);
                else if (e.key == "frame_interval_ms") sc.codec.frame_interval_ms = detail::to_int(e.value, where);
                else if (e.key == "payload_bytes") sc.codec.payload_bytes = detail::to_int(e.value, where);
                else if (e.key == "loss_tolerance") { sc.codec.loss_tolerance = detail::to_number(e.value, where); tolerance_set = true; }
                else if (e.key == "plc") sc.codec.plc = detail::to_bool(e.value, where);
                else throw std::invalid_argument("unknown codec key: " + e.key);
            } else if (e.section == "network") {
                if (e.key == "base_delay_ms") sc.network.base_delay_ms = detail::to_int(e.value, where);
                else if (e.key == "jitter_ms") sc.network.jitter_ms = detail::to_int(e.value, where);
                else if (e.key == "loss_pN") sc.network.loss_pn = detail::to_number(e.value, where);
                else throw std::invalid_argument("unknown network key: " + e.key);
            } else if (e.section == "jitter_buffer") {
                if (e.key == "depth_ms") sc.buffer.depth_ms = detail::to_int(e.value, where);
                else throw std::invalid_argument("unknown jitter_buffer key: " + e.key);
            } else if (e.section == "delay_budget") {
                if (e.key == "d1_ms") sc.budget.codec_processing_d1_ms = detail::to_int(e.value, where);
                else if (e.key == "d2_ms") sc.budget.codec_algorithm_d2_ms = detail::to_int(e.value, where);
                else if (e.key == "d3_ms") sc.budget.packetization_d3_ms = detail::to_int(e.value, where);
                else throw std::invalid_argument("unknown delay_budget key: " + e.key);
            } else if (e.section == "rtcp") {
                if (e.key == "interval_s") sc.rtcp_interval_s = detail::to_number(e.value, where);
                else throw std::invalid_argument("unknown rtcp key: " + e.key);
            } else if (e.section == "slots") {
                // handled in the first pass
            } else if (e.section == "lack") {
                if (e.key == "pi") sc.lack.pi = detail::to_number(e.value, where);
                else if (e.key == "inject_delay_ms") sc.lack.inject_delay_ms = detail::to_int(e.value, where);
                else if (e.key == "scheduler") {
                    if (e.value == "periodic") sc.lack.scheduler = LackScheduler::periodic;
                    else if (e.value == "bernoulli") sc.lack.scheduler = LackScheduler::bernoulli;
                    else throw std::invalid_argument("scheduler must be periodic or bernoulli");
                }
                else if (e.key == "message") sc.lack_message = MessageSpec::parse(e.value);
                else if (e.key == "framed") sc.lack_message.framed = detail::to_bool(e.value, where);
                else throw std::invalid_argument("unknown lack key: " + e.key);
            } else if (e.section == "warden") {
                if (e.key == "enabled") sc.warden.enabled = detail::to_bool(e.value, where);
                else if (e.key == "normalize") {
                    sc.warden.normalize_slots.clear();
                    if (!e.value.empty())
                        for (const auto& part : detail::split(e.value, ','))
                            if (!part.empty())
                                sc.warden.normalize_slots.push_back(detail::parse_field_ref(part, sc.slots));
                }
                else if (e.key == "strip_padding_extension") sc.warden.strip_padding_extension = detail::to_bool(e.value, where);
                else if (e.key == "strip_auth_tags") sc.warden.strip_auth_tags = detail::to_bool(e.value, where);
                else if (e.key == "drop_expired_threshold_ms") sc.warden.drop_expired_threshold_ms = detail::to_int(e.value, where);
                else if (e.key == "loss_alarm_alpha") sc.warden.loss_alarm_alpha = detail::to_number(e.value, where);
                else if (e.key == "seed") sc.warden.seed = static_cast<std::uint64_t>(detail::to_int(e.value, where));
                else throw std::invalid_argument("unknown warden key: " + e.key);
            } else if (e.section.rfind("channel ", 0) == 0 || e.section == "channel") {
                std::string name = e.section == "channel" ? "channel" : detail::trim(e.section.substr(8));
                auto it = channel_index.find(name);
                if (it == channel_index.end()) {
                    ChannelSpec spec;
                    spec.config.name = name;
                    channel_index[name] = sc.channels.size();
                    sc.channels.push_back(std::move(spec));
                    it = channel_index.find(name);
                }
                ChannelSpec& ch = sc.channels[it->second];
                ChannelConfig& cfg = ch.config;
                if (e.key == "kind") {
                    if (e.value == "header") cfg.kind = ChannelKind::header;
                    else if (e.value == "rtp_field") cfg.kind = ChannelKind::rtp_field;
                    else if (e.value == "auth_tag") cfg.kind = ChannelKind::auth_tag;
                    else if (e.value == "rtcp_report") cfg.kind = ChannelKind::rtcp_report;
                    else if (e.value == "watermark") cfg.kind = ChannelKind::watermark;
                    else throw std::invalid_argument("unknown channel kind: " + e.value);
                }
                else if (e.key == "fields") {
                    cfg.field_map.clear();
                    for (const auto& part : detail::split(e.value, ','))
                        if (!part.empty()) cfg.field_map.push_back(detail::parse_field_ref(part, sc.slots));
                }
                else if (e.key == "first_packet_fields") {
                    cfg.first_packet_extra.clear();
                    for (const auto& part : detail::split(e.value, ','))
                        if (!part.empty()) cfg.first_packet_extra.push_back(detail::parse_field_ref(part, sc.slots));
                }
                else if (e.key == "tag_bits") cfg.auth_tag_bits = static_cast<int>(detail::to_int(e.value, where));
                else if (e.key == "target") {
                    if (e.value == "rtp") cfg.auth_target = PacketKind::rtp;
                    else if (e.value == "rtcp") cfg.auth_target = PacketKind::rtcp;
                    else throw std::invalid_argument("auth target must be rtp or rtcp");
                }
                else if (e.key == "s_cp") cfg.rtcp_scp = static_cast<int>(detail::to_int(e.value, where));
                else if (e.key == "n_rb") cfg.rtcp_nrb = static_cast<int>(detail::to_int(e.value, where));
                else if (e.key == "s_rb") cfg.rtcp_srb = static_cast<int>(detail::to_int(e.value, where));
                else if (e.key == "ntp_slot") cfg.rtcp_use_ntp_slot = detail::to_bool(e.value, where);
                else if (e.key == "rate") detail::parse_rate(e.value, cfg.wm_rate_num, cfg.wm_rate_den);
                else if (e.key == "mode") {
                    if (e.value == "qim") cfg.wm_mode = WatermarkMode::qim;
                    else if (e.value == "abstract") cfg.wm_mode = WatermarkMode::abstract_rate;
                    else throw std::invalid_argument("watermark mode must be qim or abstract");
                }
                else if (e.key == "message") {
                    bool framed = ch.message.framed;
                    ch.message = MessageSpec::parse(e.value);
                    ch.message.framed = framed;
                }
                else if (e.key == "framed") ch.message.framed = detail::to_bool(e.value, where);
                else throw std::invalid_argument("unknown channel key: " + e.key);
            } else {
                throw std::invalid_argument("unknown section: [" + e.section + "]");
            }
        } catch (const std::invalid_argument& err) {
            throw std::invalid_argument("scenario line " + std::to_string(e.line) + ": " + err.what());
        }
    }
    // PLC lifts the loss tolerance unless the file pinned one explicitly
    if (sc.codec.plc && !tolerance_set) sc.codec.loss_tolerance = 0.05;
    return sc;
}

// Overrides address entries as "section.key" (top level: plain "key").
inline void apply_override(std::vector<ScenarioEntry>& entries, const std::string& dotted,
                           const std::string& value) {
    std::string section, key = dotted;
    std::size_t dot = dotted.rfind('.');
    if (dot != std::string::npos) {
        section = dotted.substr(0, dot);
        key = dotted.substr(dot + 1);
    }
    for (auto& e : entries) {
        if (e.section == section && e.key == key) {
            e.value = value;
            return;
        }
    }
    entries.push_back({section, key, value, 0});
}

inline Scenario scenario_from_text(const std::string& text) {
    return scenario_from_entries(scenario_entries_from_text(text));
}

inline Scenario scenario_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return scenario_from_text(ss.str());
}

inline std::string scenario_file_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace voipsteg
