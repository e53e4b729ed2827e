// Operator entry point: run scenario batches, evaluate the closed-form
// bandwidth expressions, and sweep scenario knobs. All outputs are
// deterministic functions of the scenario file and its declared seeds.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "voipsteg/analytics.hpp"
#include "voipsteg/calc.hpp"
#include "voipsteg/runner.hpp"
#include "voipsteg/scenario.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::string frame_status_name(voipsteg::FrameStatus s) {
    switch (s) {
        case voipsteg::FrameStatus::ok: return "ok";
        case voipsteg::FrameStatus::truncated: return "truncated";
        case voipsteg::FrameStatus::crc_mismatch: return "crc_mismatch";
    }
    return "?";
}

struct RunOptions {
    std::string scenario_path;
    std::string out_dir = "out";
    int calls_override = -1;
    long long seed_override = -1;
    double window_s = 10.0;
    std::string traces = "first"; // first | all | none
    std::vector<std::string> sets;
};

int cmd_run(const RunOptions& opt) {
    std::string text = voipsteg::scenario_file_text(opt.scenario_path);
    auto entries = voipsteg::scenario_entries_from_text(text);
    for (const auto& s : opt.sets) {
        std::size_t eq = s.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: --set expects key=value, got '" << s << "'\n";
            return 2;
        }
        voipsteg::apply_override(entries, s.substr(0, eq), s.substr(eq + 1));
    }
    if (opt.calls_override > 0)
        voipsteg::apply_override(entries, "calls", std::to_string(opt.calls_override));
    if (opt.seed_override >= 0)
        voipsteg::apply_override(entries, "base_seed", std::to_string(opt.seed_override));

    voipsteg::Scenario sc = voipsteg::scenario_from_entries(entries);
    auto errs = sc.validate();
    if (!errs.empty()) {
        std::cerr << "scenario validation failed (" << errs.size() << " violation"
                  << (errs.size() == 1 ? "" : "s") << "):\n";
        for (const auto& e : errs) std::cerr << "  - " << e << "\n";
        return 1;
    }

    std::filesystem::create_directories(opt.out_dir);
    const std::filesystem::path out(opt.out_dir);

    auto results = voipsteg::run_batch(sc);
    std::vector<voipsteg::CallTrace> traces;
    traces.reserve(results.size());
    for (auto& r : results) traces.push_back(r.trace);

    auto report = voipsteg::summarize(traces);
    auto mix = voipsteg::traffic_mix(traces.front());
    auto fractions = voipsteg::bandwidth_fractions(report);
    std::vector<voipsteg::TimeSeries> series;
    series.reserve(traces.size());
    for (const auto& t : traces) series.push_back(voipsteg::flow_timeseries(t, opt.window_s));
    auto avg_series = voipsteg::average_timeseries(series);

    // manifest first: everything needed to replay this run bit-identically
    {
        std::string m;
        m += "artifact_version = " + std::string(kVersion) + "\n";
        m += "scenario = " + opt.scenario_path + "\n";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(fnv1a64(text)));
        m += "scenario_fnv1a64 = " + std::string(buf) + "\n";
        for (const auto& s : opt.sets) m += "override = " + s + "\n";
        m += "calls = " + std::to_string(sc.calls) + "\n";
        m += "base_seed = " + std::to_string(sc.base_seed) + "\n";
        for (int c = 0; c < sc.calls; ++c)
            m += "call_seed_" + std::to_string(c) + " = " + std::to_string(sc.call_seed(c)) + "\n";
        write_file(out / "manifest.txt", m);
    }

    std::string txt;
    txt += "== traffic mix (averaged call) ==\n" + voipsteg::render_traffic_mix(mix) + "\n";
    txt += "== covert bandwidth (" + std::to_string(sc.calls) + " calls) ==\n" +
           voipsteg::render_bandwidth_report(report) + "\n";
    txt += "== covert bandwidth fractions ==\n" + voipsteg::render_fractions(fractions);
    if (results.front().lack_active) {
        const auto& lk = results.front().lack;
        std::int64_t recovered = 0;
        for (const auto& a : lk.audit) recovered += a.recovered ? 1 : 0;
        txt += "\n== LACK ==\n";
        txt += "selected packets per call: " + std::to_string(lk.audit.size()) + "\n";
        txt += "recovered (call 1): " + std::to_string(recovered) + "\n";
        txt += std::string("active p_i bound: ") +
               (results.front().pi_bound == voipsteg::LossModel::Bound::network_headroom
                    ? "network headroom"
                    : "codec tolerance") + "\n";
        txt += std::string("delay budget exceeded: ") +
               (traces.front().delay_budget_exceeded ? "yes" : "no") + "\n";
    }
    std::cout << txt;
    write_file(out / "report.txt", txt);

    write_file(out / "summary.csv", voipsteg::report_to_csv(report));
    write_file(out / "traffic_mix.csv", voipsteg::traffic_mix_to_csv(mix));
    write_file(out / "fractions.csv", voipsteg::fractions_to_csv(fractions));
    write_file(out / "timeseries.csv", voipsteg::timeseries_to_csv(avg_series));

    {
        std::string csv = "call,channel,embedded_bits,extracted_bits,framed,frame_status\n";
        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto& r = results[i];
            for (const auto& ch : r.channels) {
                csv += std::to_string(i) + "," + ch.name + "," +
                       std::to_string(ch.ledger.embedded_bits) + "," +
                       std::to_string(ch.ledger.extracted_bits) + "," +
                       (ch.framed ? "1" : "0") + "," +
                       (ch.framed ? frame_status_name(ch.frame_status) : "") + "\n";
            }
            if (r.lack_active) {
                csv += std::to_string(i) + ",LACK," +
                       std::to_string(r.lack.ledger.embedded_bits) + "," +
                       std::to_string(r.lack.ledger.extracted_bits) + "," +
                       (r.lack.framed ? "1" : "0") + "," +
                       (r.lack.framed ? frame_status_name(r.lack.frame_status) : "") + "\n";
            }
        }
        write_file(out / "ledger.csv", csv);
    }

    if (opt.traces != "none") {
        std::size_t limit = opt.traces == "all" ? results.size() : 1;
        for (std::size_t i = 0; i < limit && i < results.size(); ++i)
            write_file(out / ("trace_call" + std::to_string(i + 1) + ".csv"),
                       voipsteg::trace_to_csv(results[i].trace));
    }
    if (results.front().lack_active) {
        std::string csv = "index,nominal_send_us,inject_delay_us,padding,recovered\n";
        for (const auto& a : results.front().lack.audit)
            csv += std::to_string(a.index) + "," + std::to_string(a.nominal_send_us) + "," +
                   std::to_string(a.inject_delay_us) + "," + (a.padding ? "1" : "0") + "," +
                   (a.recovered ? "1" : "0") + "\n";
        write_file(out / "lack_audit_call1.csv", csv);
    }

    std::cout << "\nwrote " << out.string() << "/{manifest.txt,report.txt,*.csv}\n";
    return 0;
}

int cmd_calc(const std::string& formula, const std::vector<std::string>& args) {
    std::map<std::string, std::string> kv;
    for (const auto& a : args) {
        std::size_t eq = a.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: calc parameters take the form name=value, got '" << a << "'\n";
            return 2;
        }
        kv[a.substr(0, eq)] = a.substr(eq + 1);
    }
    try {
        std::cout << voipsteg::calc::eval(formula, kv).to_decimal_string() << "\n";
    } catch (const voipsteg::calc::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

int cmd_sweep(const std::string& scenario_path, const std::string& param,
              const std::string& values_list, const std::string& out_path, int calls_override) {
    const auto& knobs = voipsteg::sweep_knobs();
    bool known = false;
    for (const auto& k : knobs) known = known || k == param;
    if (!known) {
        std::string all;
        for (const auto& k : knobs) all += (all.empty() ? "" : ", ") + k;
        std::cerr << "error: '" << param << "' is not a sweepable knob (known: " << all << ")\n";
        return 2;
    }

    std::vector<std::string> values;
    {
        std::string cur;
        for (char c : values_list) {
            if (c == ',') { values.push_back(cur); cur.clear(); }
            else if (c != ' ') cur += c;
        }
        if (!cur.empty()) values.push_back(cur);
        for (const auto& v : values) {
            try {
                (void)voipsteg::Rational::parse(v);
            } catch (...) {
                std::cerr << "error: sweep value is not numeric: '" << v << "'\n";
                return 2;
            }
        }
    }

    std::string text = voipsteg::scenario_file_text(scenario_path);
    std::string csv = "param,value,avg_total_bits,avg_rbr_bps,avg_prbr,playout_loss_rate";
    bool header_channels_written = false;
    std::string rows;

    for (const auto& v : values) {
        auto entries = voipsteg::scenario_entries_from_text(text);
        voipsteg::apply_override(entries, param, v);
        if (calls_override > 0)
            voipsteg::apply_override(entries, "calls", std::to_string(calls_override));
        voipsteg::Scenario sc = voipsteg::scenario_from_entries(entries);
        auto errs = sc.validate();
        if (!errs.empty()) {
            std::cerr << "scenario invalid at " << param << "=" << v << ":\n";
            for (const auto& e : errs) std::cerr << "  - " << e << "\n";
            return 1;
        }
        auto results = voipsteg::run_batch(sc);
        std::vector<voipsteg::CallTrace> traces;
        for (auto& r : results) traces.push_back(r.trace);
        auto rep = voipsteg::summarize(traces);

        if (!header_channels_written) {
            for (const auto& ch : rep.channels) csv += ",rbr_" + ch.name;
            csv += "\n";
            header_channels_written = true;
        }

        double lost = 0, generated = 0;
        for (const auto& t : traces) {
            for (const auto& r : t.records) {
                if (r.kind != voipsteg::PacketKind::rtp) continue;
                generated += 1;
                if (r.cls != voipsteg::Classification::playout) lost += 1;
            }
        }
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s,%s,%.3f,%.6f,%.6f,%.8f", param.c_str(), v.c_str(),
                      rep.avg_total_bits, rep.avg_rbr_bps, rep.avg_prbr,
                      generated > 0 ? lost / generated : 0.0);
        rows += buf;
        for (const auto& ch : rep.channels) {
            std::snprintf(buf, sizeof buf, ",%.6f", ch.avg_bits / sc.duration_s);
            rows += buf;
        }
        rows += "\n";
    }
    if (!header_channels_written) csv += "\n"; // empty range: header only
    csv += rows;

    if (out_path.empty()) {
        std::cout << csv;
    } else {
        std::filesystem::path p(out_path);
        if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
        write_file(p, csv);
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"VoIP covert-channel laboratory"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    RunOptions run_opt;
    auto* run = app.add_subcommand("run", "simulate a scenario batch and write reports");
    run->add_option("scenario", run_opt.scenario_path, "scenario file")->required();
    run->add_option("--calls", run_opt.calls_override, "override the number of calls");
    run->add_option("--seed", run_opt.seed_override, "override the base seed");
    run->add_option("--out", run_opt.out_dir, "output directory (default: out)");
    run->add_option("--window", run_opt.window_s, "time-series window in seconds (default: 10)");
    run->add_option("--traces", run_opt.traces, "per-packet trace dumps: first|all|none")
        ->check(CLI::IsMember({"first", "all", "none"}));
    run->add_option("--set", run_opt.sets, "override a scenario key, e.g. --set lack.pi=0.002");

    std::string calc_formula;
    std::vector<std::string> calc_args;
    auto* calc = app.add_subcommand("calc", "evaluate one bandwidth/loss formula exactly");
    calc->add_option("formula", calc_formula, "formula name")->required();
    calc->add_option("params", calc_args, "named parameters, e.g. SB_AT=32 Ip=20");

    std::string sweep_path, sweep_param, sweep_values, sweep_out;
    int sweep_calls = -1;
    auto* sweep = app.add_subcommand("sweep", "run a batch per parameter value, emit CSV");
    sweep->add_option("scenario", sweep_path, "scenario file")->required();
    sweep->add_option("--param", sweep_param, "scenario knob to sweep")->required();
    sweep->add_option("--values", sweep_values, "comma-separated values")->required();
    sweep->add_option("--out", sweep_out, "CSV output path (default: stdout)");
    sweep->add_option("--calls", sweep_calls, "override the number of calls per value");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_opt);
        if (calc->parsed()) return cmd_calc(calc_formula, calc_args);
        if (sweep->parsed()) return cmd_sweep(sweep_path, sweep_param, sweep_values, sweep_out, sweep_calls);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
