#pragma once
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "astat/quadrature.hpp"

namespace astat {

struct AiryValue {
    double ai;
    double ai_prime;
};

inline constexpr double kAiryLo = -40.0;
inline constexpr double kAiryHi = 200.0;

namespace detail {

// Neumaier summation in long double
struct Acc {
    long double s = 0, c = 0;
    void add(long double v) {
        long double t = s + v;
        if (std::fabs(s) >= std::fabs(v)) c += (s - t) + v;
        else c += (v - t) + s;
        s = t;
    }
    long double value() const { return s + c; }
};

inline AiryValue airy_maclaurin(double xd) {
    const long double c1 = 0.355028053887817239260063186004183176L;
    const long double c2 = 0.258819403792806798405183560189203963L;
    const long double x = xd, x2 = x * x, x3 = x2 * x;
    Acc f, g, fp, gp;
    long double tf = 1, tg = x;
    f.add(tf);
    g.add(tg);
    gp.add(1);
    for (int k = 1; k < 200; ++k) {
        fp.add(tf * x2 / (3 * k - 1));
        gp.add(tg * x2 / (3 * k));
        tf *= x3 / ((3.0L * k - 1) * (3.0L * k));
        tg *= x3 / ((3.0L * k) * (3.0L * k + 1));
        f.add(tf);
        g.add(tg);
        if (std::fabs(tf) + std::fabs(tg) < 1e-24L * (1 + std::fabs(f.value()) + std::fabs(g.value())) && k > 3) break;
    }
    return {static_cast<double>(c1 * f.value() - c2 * g.value()),
            static_cast<double>(c1 * fp.value() - c2 * gp.value())};
}

// e^{z} K_nu(z) by the trapezoid rule on int_0^inf exp(-z(cosh t - 1)) cosh(nu t) dt
inline double scaled_bessel_k(double nu, double z) {
    double h = std::min(0.2, 0.6 / std::sqrt(z));
    double tmax = std::acosh(1.0 + 45.0 / z);
    double s = 0.5;
    for (int k = 1;; ++k) {
        double t = k * h;
        if (t > tmax) break;
        double sh = std::sinh(0.5 * t);
        s += std::exp(-2.0 * z * sh * sh) * std::cosh(nu * t);
    }
    return s * h;
}

inline AiryValue airy_positive(double x) {
    double zeta = 2.0 / 3.0 * x * std::sqrt(x);
    double e = std::exp(-zeta);
    double k13 = scaled_bessel_k(1.0 / 3.0, zeta);
    double k23 = scaled_bessel_k(2.0 / 3.0, zeta);
    double ai = e * std::sqrt(x / 3.0) * k13 / std::numbers::pi;
    double aip = -e * x * k23 / (std::numbers::pi * std::sqrt(3.0));
    return {ai, aip};
}

// oscillatory expansion for x -> -infinity
inline AiryValue airy_negative(double x) {
    double z = -x;
    double zeta = 2.0 / 3.0 * z * std::sqrt(z);
    double P = 0, Q = 0, R = 0, S = 0;
    double u = 1.0, pw = 1.0, last = 1e300;
    for (int k = 0; k < 200; ++k) {
        if (k > 0) u *= (6.0 * k - 5) * (6.0 * k - 3) * (6.0 * k - 1) / ((2.0 * k - 1) * 216.0 * k);
        double v = -(6.0 * k + 1) / (6.0 * k - 1) * u;
        double term = u * pw;
        if (std::abs(term) > last) break;
        last = std::abs(term);
        double sgn = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
        if (k % 2 == 0) {
            P += sgn * term;
            R += sgn * v * pw;
        } else {
            Q += sgn * term;
            S += sgn * v * pw;
        }
        if (last < 1e-18) break;
        pw /= zeta;
    }
    double th = zeta - 0.25 * std::numbers::pi;
    double c = std::cos(th), s = std::sin(th);
    double a = 1.0 / std::sqrt(std::numbers::pi);
    double q = std::pow(z, 0.25);
    return {a / q * (c * P + s * Q), a * q * (s * R - c * S)};
}

}  // namespace detail

inline AiryValue airy_ai(double x) {
    if (!(x >= kAiryLo && x <= kAiryHi)) throw std::domain_error("airy_ai: argument outside [-40, 200]");
    if (x > 2.0) return detail::airy_positive(x);
    if (x < -8.0) return detail::airy_negative(x);
    return detail::airy_maclaurin(x);
}

// int_{-inf}^{-T} Ai, T large, via repeated integration by parts with Ai'' = x Ai
inline double airy_integral_below(double T) {
    auto a = airy_ai(-T);
    double x = -T, sum = 0.0, c = 1.0, last = 1e300;
    for (int j = 0; j < 60; ++j) {
        double k = 3.0 * j;
        double term = c * (a.ai_prime * std::pow(x, -k - 1) + (k + 1) * a.ai * std::pow(x, -k - 2));
        if (std::abs(term) > last) break;
        sum += term;
        last = std::abs(term);
        c *= (k + 1) * (k + 2);
    }
    return sum;
}

// int_s^inf Ai(shift + x) e^{c x} dx
inline double airy_tail(double s, double c, double shift) {
    double sum = 0.0, x = s;
    double peak = std::max(0.0, c) * std::max(0.0, c);
    if (shift + s >= kAiryHi) return 0.0;  // Ai below 1e-1800 there
    for (int it = 0; it < 100000; ++it) {
        double y = shift + x;
        double w = y < 0 ? 0.5 : 1.0;
        if (y + w > kAiryHi) {
            if (y + 1e-9 >= kAiryHi) break;
            w = kAiryHi - y;
        }
        double piece = gl_integrate([&](double u) { return airy_ai(shift + u).ai * std::exp(c * u); }, x, x + w, 20);
        sum += piece;
        x += w;
        if (shift + x > peak + 1.0 && std::abs(piece) <= 1e-18 * std::max(std::abs(sum), 1e-300)) return sum;
    }
    if (shift + x < kAiryHi - 1e-9) throw std::runtime_error("airy_tail: truncation bound not reached");
    return sum;
}

// tails int_{s_i}^inf Ai(shift+x) e^{cx} dx for many s_i; gaps filled cumulatively
inline std::vector<double> airy_tail_batch(const std::vector<double>& s, double c, double shift) {
    std::vector<double> out(s.size());
    if (s.empty()) return out;
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    double acc = airy_tail(s[idx[0]], c, shift);
    out[idx[0]] = acc;
    auto f = [&](double u) { return shift + u > kAiryHi ? 0.0 : airy_ai(shift + u).ai * std::exp(c * u); };
    for (std::size_t k = 1; k < idx.size(); ++k) {
        double a = s[idx[k]], b = s[idx[k - 1]];
        int n = std::max(1, static_cast<int>(std::ceil((b - a) / 0.5)));
        for (int j = 0; j < n; ++j) acc += gl_integrate(f, a + (b - a) * j / n, a + (b - a) * (j + 1) / n, 12);
        out[idx[k]] = acc;
    }
    return out;
}

// int_0^inf e^{-x(r1-r2)} Ai(r1^2+s1+x) Ai(r2^2+s2+x) dx
inline double airy_product_tail(double s1, double s2, double r1, double r2) {
    double a = r1 * r1 + s1, b = r2 * r2 + s2;
    if (r1 == r2 && std::abs(a - b) >= 1e-3) {
        auto A = airy_ai(a), B = airy_ai(b);
        return (A.ai * B.ai_prime - A.ai_prime * B.ai) / (a - b);
    }
    if (r1 == r2 && a == b) {
        auto A = airy_ai(a);
        return A.ai_prime * A.ai_prime - a * A.ai * A.ai;
    }
    double d = r1 - r2, sum = 0.0, x = 0.0;
    auto f = [&](double u) { return std::exp(-u * d) * airy_ai(a + u).ai * airy_ai(b + u).ai; };
    for (int it = 0; it < 100000; ++it) {
        double lo = std::min(a, b) + x, hi = std::max(a, b) + x;
        double w = lo < 0 ? 0.5 : 1.0;
        if (hi + w > kAiryHi) break;
        double piece = gl_integrate(f, x, x + w, 20);
        sum += piece;
        x += w;
        if (lo + w > 0.0 && std::abs(piece) <= 1e-18 * std::max(std::abs(sum), 1e-300)) return sum;
    }
    if (std::max(a, b) + x < kAiryHi - 1.0) throw std::runtime_error("airy_product_tail: truncation bound not reached");
    return sum;
}

struct HermitePoint {
    double t;
    long n;
    double x;
    double alpha;
    double beta;
};

// log|H_n(x)| and sign for the orthonormal Hermite polynomials w.r.t. e^{-x^2/2}
inline std::pair<double, int> log_hermite(long n, double x) {
    double h0 = std::pow(2.0 * std::numbers::pi, -0.25);
    double hm1 = 0.0, h = h0, logscale = 0.0;
    for (long k = 0; k < n; ++k) {
        double hn = (x * h - std::sqrt(static_cast<double>(k)) * hm1) / std::sqrt(static_cast<double>(k + 1));
        hm1 = h;
        h = hn;
        double m = std::abs(h);
        if (m > 1e100 || (m < 1e-100 && m > 0)) {
            logscale += std::log(m);
            hm1 /= m;
            h /= m;
        }
    }
    if (h == 0.0) return {-INFINITY, 0};
    return {logscale + std::log(std::abs(h)), h > 0 ? 1 : -1};
}

inline HermitePoint hermite_alpha_beta(double t, double r, double s) {
    if (!(t > 0) || t > 1e5) throw std::domain_error("hermite_alpha_beta: t outside (0, 1e5]");
    double c = std::cbrt(t), q = std::pow(2.0 * std::numbers::pi, 0.25);
    double nt = t + 2.0 * c * c * r;
    long n = std::lround(nt);
    if (n < 0) throw std::domain_error("hermite_alpha_beta: negative index");
    double x = 2.0 * std::sqrt(t) + 2.0 * std::pow(t, 1.0 / 6.0) * r + std::pow(t, -1.0 / 6.0) * s;
    auto [lh, sg] = log_hermite(n, x);
    double lt = std::log(t), lf = 0.5 * std::lgamma(n + 1.0);
    double la = -0.5 * t + std::sqrt(t) * x - 0.5 * (n + 1) * lt + lf - 0.5 * x * x + lh;
    HermitePoint p{t, n, x, 0.0, 0.0};
    p.alpha = sg * c / q * std::exp(la);
    // residue of the contour definition: index n-1, not n
    if (n > 0) {
        auto [lg, sb] = log_hermite(n - 1, x);
        double lb = 0.5 * t - std::sqrt(t) * x + 0.5 * (n - 1) * lt - 0.5 * std::lgamma(static_cast<double>(n)) + lg;
        if (lb > 700) throw std::overflow_error("hermite_alpha_beta: log accumulator overflow");
        p.beta = -sb * c * q * std::exp(lb);
    }
    if (la > 700) throw std::overflow_error("hermite_alpha_beta: log accumulator overflow");
    return p;
}

}  // namespace astat
