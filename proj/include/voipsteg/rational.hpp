#pragma once

#include <cstdint>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <string>

// Exact rational arithmetic for the formula calculator. The worked values
// in the bandwidth equations are small rationals; evaluating them exactly
// sidesteps any question of floating-point formatting when the CLI prints
// desk-check results.

namespace voipsteg {

class Rational {
public:
    Rational() = default;
    Rational(std::int64_t n) : num_(n), den_(1) {}
    Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) {
        if (d == 0) throw std::domain_error("rational division by zero");
        normalize();
    }

    // Parses integers and plain decimals ("0.005", "-32", "1600.").
    static Rational parse(const std::string& text) {
        if (text.empty()) throw std::invalid_argument("empty number");
        std::size_t i = 0;
        bool neg = false;
        if (text[i] == '+' || text[i] == '-') { neg = text[i] == '-'; ++i; }
        std::int64_t num = 0, den = 1;
        bool seen_digit = false, seen_dot = false;
        for (; i < text.size(); ++i) {
            char c = text[i];
            if (c == '.') {
                if (seen_dot) throw std::invalid_argument("malformed number: " + text);
                seen_dot = true;
            } else if (c >= '0' && c <= '9') {
                num = mul_checked(num, 10);
                num += c - '0';
                if (seen_dot) den = mul_checked(den, 10);
                seen_digit = true;
            } else {
                throw std::invalid_argument("malformed number: " + text);
            }
        }
        if (!seen_digit) throw std::invalid_argument("malformed number: " + text);
        return Rational(neg ? -num : num, den);
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return Rational(add_checked(mul_checked(a.num_, b.den_), mul_checked(b.num_, a.den_)),
                        mul_checked(a.den_, b.den_));
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return a + Rational(-b.num_, b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return Rational(mul_checked(a.num_, b.num_), mul_checked(a.den_, b.den_));
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw std::domain_error("rational division by zero");
        return Rational(mul_checked(a.num_, b.den_), mul_checked(a.den_, b.num_));
    }
    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator<(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
    }
    friend bool operator<=(const Rational& a, const Rational& b) { return a < b || a == b; }

    // Exact decimal when the reduced denominator is 2^a * 5^b, otherwise
    // rounded to `sig` significant digits.
    std::string to_decimal_string(int sig = 12) const {
        if (num_ == 0) return "0";
        std::int64_t d = den_;
        int twos = 0, fives = 0;
        while (d % 2 == 0) { d /= 2; ++twos; }
        while (d % 5 == 0) { d /= 5; ++fives; }
        if (d == 1) return exact_decimal(twos, fives);
        return rounded_decimal(sig);
    }

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;

    void normalize() {
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
        if (num_ == 0) den_ = 1;
    }

    static std::int64_t mul_checked(std::int64_t a, std::int64_t b) {
        std::int64_t r;
        if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("rational overflow");
        return r;
    }
    static std::int64_t add_checked(std::int64_t a, std::int64_t b) {
        std::int64_t r;
        if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("rational overflow");
        return r;
    }

    // Scale so the denominator becomes a power of ten, then place the point.
    std::string exact_decimal(int twos, int fives) const {
        __int128 n = num_ < 0 ? -static_cast<__int128>(num_) : static_cast<__int128>(num_);
        int tens = twos > fives ? twos : fives;
        for (int i = 0; i < twos - fives; ++i) n *= 5;
        for (int i = 0; i < fives - twos; ++i) n *= 2;
        std::string digits;
        if (n == 0) digits = "0";
        while (n > 0) { digits.insert(digits.begin(), static_cast<char>('0' + static_cast<int>(n % 10))); n /= 10; }
        while (static_cast<int>(digits.size()) <= tens) digits.insert(digits.begin(), '0');
        std::string out = digits.substr(0, digits.size() - tens);
        if (tens > 0) {
            std::string frac = digits.substr(digits.size() - tens);
            while (!frac.empty() && frac.back() == '0') frac.pop_back();
            if (!frac.empty()) out += "." + frac;
        }
        return (num_ < 0 ? "-" : "") + out;
    }

    std::string rounded_decimal(int sig) const {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.*g", sig, to_double());
        return buf;
    }
};

} // namespace voipsteg
