#pragma once

#include <cmath>
#include <string>

#include "oscmap/errors.hpp"

namespace oscmap {

/// Value and first three derivatives of a scalar function at a point,
/// propagated through arithmetic by truncated-Taylor (Leibniz / Faa di Bruno)
/// rules. This is the substrate for the Schwarzian derivative, which needs
/// the third derivative of the phase to machine precision.
struct Jet3 {
    double v0 = 0.0;  ///< f(t)
    double v1 = 0.0;  ///< f'(t)
    double v2 = 0.0;  ///< f''(t)
    double v3 = 0.0;  ///< f'''(t)

    static constexpr Jet3 constant(double c) { return {c, 0.0, 0.0, 0.0}; }
    static constexpr Jet3 variable(double t) { return {t, 1.0, 0.0, 0.0}; }
};

constexpr Jet3 operator+(const Jet3& a, const Jet3& b) {
    return {a.v0 + b.v0, a.v1 + b.v1, a.v2 + b.v2, a.v3 + b.v3};
}

constexpr Jet3 operator-(const Jet3& a, const Jet3& b) {
    return {a.v0 - b.v0, a.v1 - b.v1, a.v2 - b.v2, a.v3 - b.v3};
}

constexpr Jet3 operator-(const Jet3& a) { return {-a.v0, -a.v1, -a.v2, -a.v3}; }

/// Leibniz rule truncated at order 3.
constexpr Jet3 operator*(const Jet3& a, const Jet3& b) {
    return {a.v0 * b.v0,
            a.v1 * b.v0 + a.v0 * b.v1,
            a.v2 * b.v0 + 2.0 * a.v1 * b.v1 + a.v0 * b.v2,
            a.v3 * b.v0 + 3.0 * a.v2 * b.v1 + 3.0 * a.v1 * b.v2 + a.v0 * b.v3};
}

/// Division by back-substitution into the Leibniz rule for a = c * b.
inline Jet3 operator/(const Jet3& a, const Jet3& b) {
    if (b.v0 == 0.0) throw EvalDomainError("division by zero");
    Jet3 c;
    c.v0 = a.v0 / b.v0;
    c.v1 = (a.v1 - c.v0 * b.v1) / b.v0;
    c.v2 = (a.v2 - c.v0 * b.v2 - 2.0 * c.v1 * b.v1) / b.v0;
    c.v3 = (a.v3 - c.v0 * b.v3 - 3.0 * c.v1 * b.v2 - 3.0 * c.v2 * b.v1) / b.v0;
    return c;
}

constexpr Jet3 operator+(const Jet3& a, double b) { return {a.v0 + b, a.v1, a.v2, a.v3}; }
constexpr Jet3 operator+(double a, const Jet3& b) { return b + a; }
constexpr Jet3 operator-(const Jet3& a, double b) { return {a.v0 - b, a.v1, a.v2, a.v3}; }
constexpr Jet3 operator-(double a, const Jet3& b) { return {a - b.v0, -b.v1, -b.v2, -b.v3}; }
constexpr Jet3 operator*(const Jet3& a, double b) {
    return {a.v0 * b, a.v1 * b, a.v2 * b, a.v3 * b};
}
constexpr Jet3 operator*(double a, const Jet3& b) { return b * a; }
inline Jet3 operator/(const Jet3& a, double b) {
    if (b == 0.0) throw EvalDomainError("division by zero");
    return {a.v0 / b, a.v1 / b, a.v2 / b, a.v3 / b};
}
inline Jet3 operator/(double a, const Jet3& b) { return Jet3::constant(a) / b; }

/// Faa di Bruno through order 3: r = f(u) given the derivatives f0..f3 of f
/// at u.v0.
constexpr Jet3 compose(const Jet3& u, double f0, double f1, double f2, double f3) {
    return {f0,
            f1 * u.v1,
            f1 * u.v2 + f2 * u.v1 * u.v1,
            f1 * u.v3 + 3.0 * f2 * u.v1 * u.v2 + f3 * u.v1 * u.v1 * u.v1};
}

inline Jet3 sin(const Jet3& u) {
    const double s = std::sin(u.v0), c = std::cos(u.v0);
    return compose(u, s, c, -s, -c);
}

inline Jet3 cos(const Jet3& u) {
    const double s = std::sin(u.v0), c = std::cos(u.v0);
    return compose(u, c, -s, -c, s);
}

inline Jet3 tan(const Jet3& u) {
    // All derivatives expressed through T = tan(u): T' = 1 + T^2.
    const double t = std::tan(u.v0);
    const double d1 = 1.0 + t * t;
    return compose(u, t, d1, 2.0 * t * d1, (2.0 + 6.0 * t * t) * d1);
}

inline Jet3 atan(const Jet3& u) {
    const double w = 1.0 + u.v0 * u.v0;
    return compose(u, std::atan(u.v0), 1.0 / w, -2.0 * u.v0 / (w * w),
                   (6.0 * u.v0 * u.v0 - 2.0) / (w * w * w));
}

inline Jet3 exp(const Jet3& u) {
    const double e = std::exp(u.v0);
    return compose(u, e, e, e, e);
}

inline Jet3 tanh(const Jet3& u) {
    const double t = std::tanh(u.v0);
    const double d1 = 1.0 - t * t;
    return compose(u, t, d1, -2.0 * t * d1, (6.0 * t * t - 2.0) * d1);
}

inline Jet3 sqrt(const Jet3& u) {
    if (u.v0 <= 0.0)
        throw EvalDomainError("sqrt of a non-positive value (" + std::to_string(u.v0) + ")");
    const double s = std::sqrt(u.v0);
    return compose(u, s, 0.5 / s, -0.25 / (u.v0 * s), 0.375 / (u.v0 * u.v0 * s));
}

inline Jet3 log(const Jet3& u) {
    if (u.v0 <= 0.0)
        throw EvalDomainError("log of a non-positive value (" + std::to_string(u.v0) + ")");
    const double w = u.v0;
    return compose(u, std::log(w), 1.0 / w, -1.0 / (w * w), 2.0 / (w * w * w));
}

/// Integer power by repeated multiplication; keeps negative bases in-domain.
inline Jet3 pow_int(const Jet3& u, long long n) {
    if (n < 0) return Jet3::constant(1.0) / pow_int(u, -n);
    Jet3 r = Jet3::constant(1.0);
    Jet3 base = u;
    while (n > 0) {
        if (n & 1) r = r * base;
        base = base * base;
        n >>= 1;
    }
    return r;
}

/// Real power; requires a positive base.
inline Jet3 pow(const Jet3& u, double p) {
    if (u.v0 <= 0.0)
        throw EvalDomainError("pow with non-integer exponent requires a positive base (base " +
                              std::to_string(u.v0) + ")");
    const double f0 = std::pow(u.v0, p);
    const double f1 = p * f0 / u.v0;
    const double f2 = (p - 1.0) * f1 / u.v0;
    const double f3 = (p - 2.0) * f2 / u.v0;
    return compose(u, f0, f1, f2, f3);
}

/// Jet-valued exponent: u^w = exp(w * log(u)); requires a positive base.
inline Jet3 pow(const Jet3& u, const Jet3& w) {
    return exp(w * log(u));
}

/// Schwarzian derivative from a phase jet: f'''/f' - (3/2) (f''/f')^2.
inline double schwarzian(const Jet3& j, double first_derivative_floor = 1e-12) {
    if (std::abs(j.v1) < first_derivative_floor)
        throw ZeroFirstDerivative("first derivative " + std::to_string(j.v1) +
                                  " below floor " + std::to_string(first_derivative_floor));
    const double r = j.v2 / j.v1;
    return j.v3 / j.v1 - 1.5 * r * r;
}

}  // namespace oscmap
