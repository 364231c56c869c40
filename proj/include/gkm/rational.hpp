#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gkm {

/** Exact rational number, always kept in lowest terms by GMP. */
using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;
using Integer = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                              boost::multiprecision::et_off>;

class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

inline Integer numer(const Rational& q) { return boost::multiprecision::numerator(q); }
inline Integer denom(const Rational& q) { return boost::multiprecision::denominator(q); }

inline bool is_zero(const Rational& q) { return q.sign() == 0; }
inline bool is_integer(const Rational& q) { return denom(q) == 1; }

/** Accepts "p", "-p", "p/q". Whitespace around the value is ignored. */
inline Rational parse_rational(std::string_view text) {
    std::string s(text);
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    if (b == std::string::npos) throw ParseError("empty rational");
    s = s.substr(b, e - b + 1);
    auto slash = s.find('/');
    auto valid_int = [](const std::string& t) {
        if (t.empty()) return false;
        std::size_t k = (t[0] == '-' || t[0] == '+') ? 1 : 0;
        if (k == t.size()) return false;
        for (; k < t.size(); ++k)
            if (t[k] < '0' || t[k] > '9') return false;
        return true;
    };
    std::string num = slash == std::string::npos ? s : s.substr(0, slash);
    std::string den = slash == std::string::npos ? "1" : s.substr(slash + 1);
    if (!valid_int(num) || !valid_int(den) || den[0] == '-')
        throw ParseError("malformed rational '" + s + "'");
    if (num[0] == '+') num = num.substr(1);
    if (den[0] == '+') den = den.substr(1);
    Integer d(den);
    if (d == 0) throw ParseError("zero denominator in '" + s + "'");
    return Rational(Integer(num), d);
}

inline std::string to_string(const Rational& q) {
    if (is_integer(q)) return numer(q).str();
    return numer(q).str() + "/" + denom(q).str();
}

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

/** Decimal rendering with 12 significant digits; advisory only. */
inline std::string to_decimal(const Rational& q) {
    std::ostringstream os;
    os.precision(12);
    os << to_double(q);
    return os.str();
}

inline Rational rpow(const Rational& base, int e) {
    Rational out(1);
    Rational b = e >= 0 ? base : Rational(1) / base;
    for (int k = 0; k < std::abs(e); ++k) out *= b;
    return out;
}

/** Nearest rational with the given denominator (round half up). */
inline Rational snap(long double x, std::int64_t den) {
    long double scaled = std::floor(x * static_cast<long double>(den) + 0.5L);
    return Rational(Integer(static_cast<long long>(scaled)), Integer(den));
}

inline Rational rmin(const Rational& a, const Rational& b) { return a < b ? a : b; }
inline Rational rmax(const Rational& a, const Rational& b) { return a < b ? b : a; }

/** Smallest integer n with n >= q. */
inline Integer ceil_int(const Rational& q) {
    Integer n = numer(q), d = denom(q);
    Integer f = n / d;
    if (f * d != n && q.sign() > 0) f += 1;
    return f;
}

// SplitMix64 finalizer; used for labeled sub-seed derivation.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/** Derives an independent sub-seed from a master seed and a fixed label. */
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char ch : label) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    return mix64(seed ^ mix64(h));
}

} // namespace gkm
