#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "voipsteg/rational.hpp"

// Formula calculator behind `calc`: evaluates each closed-form bandwidth and
// loss expression in exact rational arithmetic, for desk-check parity with
// the simulator's floating-point path.

namespace voipsteg::calc {

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

namespace detail {

class Params {
public:
    Params(const std::string& formula, const std::map<std::string, std::string>& kv)
        : formula_(formula), kv_(kv) {}

    Rational get(const std::string& name) const {
        auto it = kv_.find(name);
        if (it == kv_.end())
            throw UsageError("calc " + formula_ + ": missing parameter '" + name + "'");
        try {
            return Rational::parse(it->second);
        } catch (const std::exception&) {
            throw UsageError("calc " + formula_ + ": parameter '" + name +
                             "' is not a number: " + it->second);
        }
    }

    std::vector<Rational> get_list(const std::string& name) const {
        auto it = kv_.find(name);
        if (it == kv_.end())
            throw UsageError("calc " + formula_ + ": missing parameter '" + name + "'");
        std::vector<Rational> out;
        std::string cur;
        auto flush = [&] {
            if (!cur.empty()) {
                out.push_back(Rational::parse(cur));
                cur.clear();
            }
        };
        try {
            for (char c : it->second) {
                if (c == ',') flush();
                else if (c != ' ') cur += c;
            }
            flush();
        } catch (const std::exception&) {
            throw UsageError("calc " + formula_ + ": '" + name + "' must be a comma-separated list");
        }
        return out;
    }

private:
    std::string formula_;
    const std::map<std::string, std::string>& kv_;
};

} // namespace detail

inline const std::vector<std::string>& formula_names() {
    static const std::vector<std::string> names = {
        "prbr_ns", "rbr_srtp", "prbr_rtcp", "rbr_srtcp", "total_loss",
        "pi_max",  "lack_prbr", "lack_rbr",  "lack_total", "total_bandwidth",
    };
    return names;
}

inline Rational eval(const std::string& formula, const std::map<std::string, std::string>& kv) {
    detail::Params p(formula, kv);
    const Rational one(1);

    if (formula == "prbr_ns") {
        Rational sb0 = p.get("SB0"), sbj = p.get("SBj"), l = p.get("l");
        if (l < Rational(0)) throw UsageError("calc prbr_ns: l must be >= 0");
        return (sb0 + l * sbj) / (l + one);
    }
    if (formula == "rbr_srtp") {
        Rational sb_at = p.get("SB_AT"), ip = p.get("Ip");
        if (ip <= Rational(0)) throw UsageError("calc rbr_srtp: Ip must be positive");
        return sb_at * Rational(1000) / ip;
    }
    if (formula == "prbr_rtcp") {
        Rational scp = p.get("S_CP"), nrb = p.get("N_RB"), srb = p.get("S_RB");
        if (scp < Rational(0) || nrb < Rational(0) || srb < Rational(0))
            throw UsageError("calc prbr_rtcp: counts must be >= 0");
        return scp * nrb * srb;
    }
    if (formula == "rbr_srtcp") {
        Rational sb_at = p.get("SB_AT"), l = p.get("l"), t = p.get("T");
        if (t <= Rational(0)) throw UsageError("calc rbr_srtcp: T must be positive");
        return sb_at * l / t;
    }
    if (formula == "total_loss") {
        Rational pn = p.get("pN"), pi = p.get("pi");
        if (pn < Rational(0) || one < pn || pi < Rational(0) || one < pi)
            throw UsageError("calc total_loss: probabilities must be in [0,1]");
        return one - (one - pn) * (one - pi);
    }
    if (formula == "pi_max") {
        Rational pt = p.get("pT"), pn = p.get("pN");
        if (pn < Rational(0) || !(pn < one)) throw UsageError("calc pi_max: pN must be in [0,1)");
        if (pt < pn) throw UsageError("calc pi_max: pT < pN (network already exceeds the budget)");
        return (pt - pn) / (one - pn);
    }
    if (formula == "lack_prbr") {
        Rational r = p.get("r"), if_ms = p.get("If"), pi = p.get("pi");
        return r * if_ms / Rational(1000) * pi;
    }
    if (formula == "lack_rbr") {
        return p.get("r") * p.get("pi");
    }
    if (formula == "lack_total") {
        return p.get("d") * p.get("r") * p.get("pi");
    }
    if (formula == "total_bandwidth") {
        Rational sum(0);
        for (const auto& r : p.get_list("rates")) sum = sum + r;
        return sum;
    }

    std::string known;
    for (const auto& n : formula_names()) known += (known.empty() ? "" : ", ") + n;
    throw UsageError("unknown formula '" + formula + "' (known: " + known + ")");
}

} // namespace voipsteg::calc
