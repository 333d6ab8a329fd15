#ifndef ERGOALG_RATIONAL_HPP
#define ERGOALG_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

#include "errors.hpp"

namespace ergo {

// Exact reduced fraction with arbitrary-precision integers. cpp_rational
// keeps gcd(|num|, den) = 1 and den > 0 as a class invariant, which is
// exactly the canonical form all measures in this library rely on.
using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

inline Int rat_num(const Rat& r) { return numerator(r); }
inline Int rat_den(const Rat& r) { return denominator(r); }

// Parses "p/q" (or a bare integer "p"). Whitespace is not accepted.
inline Rat parse_rat(const std::string& s) {
    if (s.empty()) throw parse_error("empty rational literal");
    auto bad = [&] { throw parse_error("malformed rational literal: '" + s + "'"); };
    auto check_int = [&](const std::string& t) {
        if (t.empty()) bad();
        std::size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
        if (i == t.size()) bad();
        for (; i < t.size(); ++i)
            if (t[i] < '0' || t[i] > '9') bad();
    };
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) {
            check_int(s);
            return Rat(Int(s));
        }
        std::string num = s.substr(0, slash), den = s.substr(slash + 1);
        check_int(num);
        check_int(den);
        Int d(den);
        if (d == 0) throw parse_error("zero denominator in '" + s + "'");
        return Rat(Int(num), d);
    } catch (const parse_error&) {
        throw;
    } catch (...) {
        bad();
    }
    return Rat(); // unreachable
}

// Always emits the two-part "p/q" form ("0/1", "3/1", "-1/2", ...).
inline std::string rat_str(const Rat& r) {
    return rat_num(r).str() + "/" + rat_den(r).str();
}

inline Rat rat(long p, long q) { return Rat(Int(p), Int(q)); }

// Nearest multiple of `grid`; exact halves round down. Deterministic
// rounding used by the m-step approximation.
inline Rat round_to_grid(const Rat& x, const Rat& grid) {
    Rat q = x / grid;
    Int fl = rat_num(q) / rat_den(q); // truncation toward zero
    if (q < 0 && Rat(fl) != q) --fl;  // floor
    Rat frac = q - Rat(fl);
    Int k = (frac > Rat(1, 2)) ? fl + 1 : fl;
    return Rat(k) * grid;
}

} // namespace ergo

#endif
