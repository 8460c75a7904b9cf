#pragma once
#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace astat {

// nodes and weights of the p-point Gauss-Legendre rule on [-1,1]
struct GLTable {
    std::vector<double> x, w;
};

inline GLTable compute_gauss_legendre(int p) {
    GLTable t;
    t.x.resize(p);
    t.w.resize(p);
    for (int i = 0; i < (p + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (p + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= p; ++k) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = p * (z * p0 - p1) / (z * z - 1.0);
            double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        double p0 = 1.0, p1 = 0.0;
        for (int k = 1; k <= p; ++k) {
            double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
        }
        dp = p * (z * p0 - p1) / (z * z - 1.0);
        double w = 2.0 / ((1.0 - z * z) * dp * dp);
        t.x[i] = -z;
        t.x[p - 1 - i] = z;
        t.w[i] = w;
        t.w[p - 1 - i] = w;
    }
    if (p % 2 == 1) t.x[p / 2] = 0.0;
    return t;
}

inline const GLTable& gauss_legendre(int p) {
    static std::map<int, GLTable> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(p);
    if (it == cache.end()) it = cache.emplace(p, compute_gauss_legendre(p)).first;
    return it->second;
}

// integrate f over [a,b] with one p-point panel
template <class F>
double gl_integrate(F&& f, double a, double b, int p = 16) {
    const auto& t = gauss_legendre(p);
    double c = 0.5 * (a + b), h = 0.5 * (b - a), s = 0.0;
    for (int i = 0; i < p; ++i) s += t.w[i] * f(c + h * t.x[i]);
    return s * h;
}

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    double lo = 0.0;
    double hi = 0.0;

    std::size_t size() const { return nodes.size(); }
};

inline void append_panel(QuadratureRule& q, double a, double b, int p) {
    const auto& t = gauss_legendre(p);
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    for (int i = 0; i < p; ++i) {
        q.nodes.push_back(c + h * t.x[i]);
        q.weights.push_back(h * t.w[i]);
    }
}

// panels of width <= hmax between consecutive breakpoints (sorted, distinct)
inline void append_segments(QuadratureRule& q, const std::vector<double>& breaks, double hmax, int p) {
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        double a = breaks[k], b = breaks[k + 1];
        if (b - a <= 0.0) continue;
        int n = std::max(1, static_cast<int>(std::ceil((b - a) / hmax - 1e-9)));
        for (int j = 0; j < n; ++j) append_panel(q, a + (b - a) * j / n, a + (b - a) * (j + 1) / n, p);
    }
}

// composite Gauss-Legendre on [cut, smax], panels graded towards the cut
inline QuadratureRule build_rule(double cut, double smax, int n_nodes) {
    if (!(cut < smax)) throw std::invalid_argument("build_rule: need cut < smax");
    if (n_nodes < 8) throw std::invalid_argument("build_rule: need at least 8 nodes");
    int panels = std::max(1, (n_nodes + 19) / 20);
    QuadratureRule q;
    q.lo = cut;
    q.hi = smax;
    int used = 0;
    for (int k = 0; k < panels; ++k) {
        double u0 = static_cast<double>(k) / panels, u1 = static_cast<double>(k + 1) / panels;
        double a = cut + (smax - cut) * std::pow(u0, 1.5);
        double b = cut + (smax - cut) * std::pow(u1, 1.5);
        int p = (n_nodes - used) / (panels - k);
        used += p;
        append_panel(q, a, b, p);
    }
    return q;
}

}  // namespace astat
