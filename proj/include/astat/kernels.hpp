#pragma once
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "astat/quadrature.hpp"
#include "astat/scaling.hpp"
#include "astat/specfun.hpp"

namespace astat {

inline double v_heat(double r1, double s1, double r2, double s2) {
    if (!(r2 > r1)) throw std::invalid_argument("v_heat: need r2 > r1");
    double d = r2 - r1, u = s2 - s1;
    return std::exp(-u * u / (4.0 * d)) / std::sqrt(4.0 * std::numbers::pi * d);
}

inline double conj_factor(double r1, double s1, double r2, double s2) {
    return std::exp(2.0 / 3.0 * (r2 * r2 * r2 - r1 * r1 * r1) + r2 * s2 - r1 * s1);
}

// Airy-integral form of the heat kernel, integrated over the whole line
inline double v_airy_rep(double r1, double s1, double r2, double s2) {
    if (!(r2 > r1)) throw std::invalid_argument("v_airy_rep: need r2 > r1");
    double a = r1 * r1 + s1, b = r2 * r2 + s2, d = r2 - r1;
    double lo = std::max(-38.0 / d, kAiryLo - std::min(a, b));
    auto f = [&](double x) { return std::exp(x * d) * airy_ai(a + x).ai * airy_ai(b + x).ai; };
    double sum = 0.0;
    int n = std::max(1, static_cast<int>(std::ceil(-lo / 0.25)));
    for (int k = 0; k < n; ++k) sum += gl_integrate(f, lo - lo * k / n, lo - lo * (k + 1) / n, 12);
    return conj_factor(r1, s1, r2, s2) * (sum + airy_product_tail(s1, s2, r1, r2));
}

inline double k_conj(double r1, double s1, double r2, double s2) {
    return conj_factor(r1, s1, r2, s2) * airy_product_tail(s1, s2, r1, r2);
}

// f*(s) at label r; f_step = 1 + f*
inline double fstar(double r, double s) {
    return -std::exp(-2.0 / 3.0 * r * r * r) * airy_tail(s, -r, r * r);
}

inline double f_step(double r, double s) { return 1.0 + fstar(r, s); }

inline double g_step(double r, double s, double delta) {
    if (!(delta >= 0)) throw std::invalid_argument("g_step: delta must be >= 0");
    double e = std::exp(delta * delta * delta / 3.0 + r * delta * delta - s * delta);
    return e - std::exp(2.0 / 3.0 * r * r * r - delta * s) * airy_tail(s, r + delta, r * r);
}

inline double g_stat(double r, double s) { return g_step(r, s, 0.0); }

inline std::vector<double> fstar_batch(double r, const std::vector<double>& s) {
    auto t = airy_tail_batch(s, -r, r * r);
    double c = -std::exp(-2.0 / 3.0 * r * r * r);
    for (auto& v : t) v *= c;
    return t;
}

inline std::vector<double> g_step_batch(double r, const std::vector<double>& s, double delta) {
    auto t = airy_tail_batch(s, r + delta, r * r);
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        out[i] = std::exp(delta * delta * delta / 3.0 + r * delta * delta - s[i] * delta) -
                 std::exp(2.0 / 3.0 * r * r * r - delta * s[i]) * t[i];
    return out;
}

// s1 + e^{(2/3)r^3} int_{s1}^inf dx int_x^inf dy Ai(r^2+y) e^{ry}, outer integral over GL panels
inline double R_stat(double r, double s1) {
    const auto& gl = gauss_legendre(16);
    double sum = 0.0, x = s1;
    double peak = std::max(0.0, r) * std::max(0.0, r);
    for (int it = 0; it < 10000; ++it) {
        double w = (r * r + x < 0) ? 0.5 : 1.0;
        if (r * r + x + w > kAiryHi) break;
        std::vector<double> nodes(16);
        for (int i = 0; i < 16; ++i) nodes[i] = x + 0.5 * w * (gl.x[i] + 1.0);
        auto inner = airy_tail_batch(nodes, r, r * r);
        double piece = 0.0;
        for (int i = 0; i < 16; ++i) piece += 0.5 * w * gl.w[i] * inner[i];
        sum += piece;
        x += w;
        if (r * r + x > peak + 1.0 && std::abs(piece) <= 1e-18 * std::max(std::abs(sum), 1e-300)) break;
    }
    return s1 + std::exp(2.0 / 3.0 * r * r * r) * sum;
}

struct StationaryIngredients {
    double r1;
    std::function<double(double)> fstar;
    std::function<double(double)> g;
    std::function<double(double)> R;
};

inline StationaryIngredients stationary_ingredients(double r1) {
    return {r1, [r1](double s) { return astat::fstar(r1, s); }, [r1](double s) { return g_stat(r1, s); },
            [r1](double s) { return R_stat(r1, s); }};
}

// K^delta((r_i,s1),(r_j,s2)) = -V 1(r_i<r_j) + K_{r_i,r_j} + delta f_{r_i}(s1) g_{r_j}(s2)
inline double kdelta_entry(std::size_t i, double s1, std::size_t j, double s2, const ScalingFrame& frame,
                           double delta) {
    double ri = frame.r_list.at(i), rj = frame.r_list.at(j);
    double v = ri < rj ? v_heat(ri, s1, rj, s2) : 0.0;
    double k = k_conj(ri, s1, rj, s2);
    double rank1 = delta > 0 ? delta * f_step(ri, s1) * g_step(rj, s2, delta) : 0.0;
    return -v + k + rank1;
}

}  // namespace astat
