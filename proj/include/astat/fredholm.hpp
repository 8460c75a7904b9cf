#pragma once
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "astat/kernels.hpp"
#include "astat/quadrature.hpp"
#include "astat/scaling.hpp"
#include "astat/specfun.hpp"

namespace astat {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct RuleSpec {
    int nodes = 60;      // per block of length smax
    double smax = 14.0;  // upper truncation offset above the largest cut
};

struct DiscretizedOperator {
    Mat matrix;  // symmetrized: sqrt(w_i) k(x_i,x_j) sqrt(w_j)
    QuadratureRule rule;
    std::vector<std::pair<std::size_t, std::size_t>> block_map;
};

struct DetResult {
    double value = 1.0;
    std::size_t order = 0;
    double richardson_estimate = 0.0;
};

inline double det_of(const Mat& A) {
    if (A.rows() == 0) return 1.0;
    if (!A.allFinite()) throw std::runtime_error("determinant: non-finite matrix entry");
    return Eigen::PartialPivLU<Mat>(A).determinant();
}

inline Vec sqrt_weights(const QuadratureRule& q) {
    Vec sw(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) sw[i] = std::sqrt(q.weights[i]);
    return sw;
}

inline DetResult nystrom_det(const std::function<double(double, double)>& kernel, const QuadratureRule& rule) {
    std::size_t n = rule.size();
    Vec sw = sqrt_weights(rule);
    Mat A(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double k = kernel(rule.nodes[i], rule.nodes[j]);
            if (!std::isfinite(k)) throw std::runtime_error("nystrom_det: non-finite kernel entry");
            A(i, j) = (i == j ? 1.0 : 0.0) - sw[i] * k * sw[j];
        }
    return {det_of(A), n, 0.0};
}

namespace detail {

inline AiryValue ai_or_zero(double x) {
    if (x > kAiryHi) return {0.0, 0.0};
    return airy_ai(x);
}

inline double log_conj(double r1, double s1, double r2, double s2) {
    return 2.0 / 3.0 * (r2 * r2 * r2 - r1 * r1 * r1) + r2 * s2 - r1 * s1;
}

inline double scaled_entry(double integral, double lc) {
    if (integral == 0.0) return 0.0;
    double v = integral * std::exp(lc);
    if (!std::isfinite(v)) throw std::overflow_error("kernel entry overflow: parameter window violated");
    return v;
}

// K_{ri,rj}(x_a, y_b), unsymmetrized
inline Mat kernel_matrix(double ri, const std::vector<double>& X, double rj, const std::vector<double>& Y) {
    Mat K(X.size(), Y.size());
    if (X.empty() || Y.empty()) return K;
    if (ri == rj) {
        std::vector<AiryValue> ax(X.size()), ay(Y.size());
        for (std::size_t a = 0; a < X.size(); ++a) ax[a] = ai_or_zero(ri * ri + X[a]);
        for (std::size_t b = 0; b < Y.size(); ++b) ay[b] = ai_or_zero(rj * rj + Y[b]);
        for (std::size_t a = 0; a < X.size(); ++a)
            for (std::size_t b = 0; b < Y.size(); ++b) {
                double u = ri * ri + X[a], v = rj * rj + Y[b], val;
                if (u == v) val = ax[a].ai_prime * ax[a].ai_prime - u * ax[a].ai * ax[a].ai;
                else if (std::abs(u - v) >= 1e-3) val = (ax[a].ai * ay[b].ai_prime - ax[a].ai_prime * ay[b].ai) / (u - v);
                else val = (std::max(u, v) > kAiryHi) ? 0.0 : airy_product_tail(X[a], Y[b], ri, rj);
                K(a, b) = scaled_entry(val, log_conj(ri, X[a], rj, Y[b]));
            }
        return K;
    }
    double amin = ri * ri + *std::min_element(X.begin(), X.end());
    double bmin = rj * rj + *std::min_element(Y.begin(), Y.end());
    double lo = std::min(amin, bmin);
    double zmax = std::max(0.0, 30.0 - lo);
    std::vector<double> brk{0.0};
    if (-lo > 0) brk.push_back(std::min(zmax, -lo));
    brk.push_back(zmax);
    std::sort(brk.begin(), brk.end());
    brk.erase(std::unique(brk.begin(), brk.end()), brk.end());
    QuadratureRule zq;
    for (std::size_t k = 0; k + 1 < brk.size(); ++k)
        append_segments(zq, {brk[k], brk[k + 1]}, brk[k + 1] <= -lo ? 0.5 : 1.0, 16);
    std::size_t Q = zq.size();
    Mat A(X.size(), Q), B(Y.size(), Q);
    double d = ri - rj;
    for (std::size_t q = 0; q < Q; ++q) {
        double z = zq.nodes[q], c = zq.weights[q] * std::exp(-z * d);
        for (std::size_t a = 0; a < X.size(); ++a) A(a, q) = c * ai_or_zero(ri * ri + X[a] + z).ai;
        for (std::size_t b = 0; b < Y.size(); ++b) B(b, q) = ai_or_zero(rj * rj + Y[b] + z).ai;
    }
    Mat I = A * B.transpose();
    for (std::size_t a = 0; a < X.size(); ++a)
        for (std::size_t b = 0; b < Y.size(); ++b) K(a, b) = scaled_entry(I(a, b), log_conj(ri, X[a], rj, Y[b]));
    return K;
}

inline Mat heat_matrix(double ri, const std::vector<double>& X, double rj, const std::vector<double>& Y) {
    Mat V(X.size(), Y.size());
    for (std::size_t a = 0; a < X.size(); ++a)
        for (std::size_t b = 0; b < Y.size(); ++b) V(a, b) = v_heat(ri, X[a], rj, Y[b]);
    return V;
}

inline Mat symmetrize(const Mat& K, const Vec& swx, const Vec& swy) {
    return swx.asDiagonal() * K * swy.asDiagonal();
}

inline double min_gap(const std::vector<double>& r) {
    double g = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < r.size(); ++k) g = std::min(g, r[k] - r[k - 1]);
    return g;
}

// panel width that resolves the heat kernels between consecutive labels
inline double heat_width(const std::vector<double>& r) {
    double g = min_gap(r);
    if (!std::isfinite(g)) return 1e300;
    return 1.5 * std::min(1.0, std::sqrt(2.0 * g));
}

struct Segment {
    int panels;
    int p;
};

inline QuadratureRule segments_rule(const std::vector<double>& breaks, const std::vector<Segment>& segs) {
    QuadratureRule q;
    q.lo = breaks.front();
    q.hi = breaks.back();
    for (std::size_t k = 0; k < segs.size(); ++k) {
        double a = breaks[k], b = breaks[k + 1];
        int n = segs[k].panels;
        for (int j = 0; j < n; ++j) append_panel(q, a + (b - a) * j / n, a + (b - a) * (j + 1) / n, segs[k].p);
    }
    return q;
}

}  // namespace detail

// Layout of the single-line grid used for L^2(R) objects. Panel counts are frozen at a base
// point so that finite-difference stencils see a smoothly deformed rule.
class LineLayout {
public:
    LineLayout(const ScalingFrame& frame, const std::vector<double>& s, const RuleSpec& spec, double delta)
        : r_(frame.r_list), spec_(spec), delta_(delta) {
        auto br = breaks(s);
        double hcore = 60.0 / spec.nodes;
        if (r_.size() > 1) hcore = std::min(hcore, detail::heat_width(r_));
        for (std::size_t k = 0; k + 1 < br.size(); ++k) {
            bool tail = delta_ > 0 && k + 2 == br.size();
            double h = tail ? 2.0 / delta_ : hcore;
            int p = tail ? 12 : 16;
            segs_.push_back({std::max(1, static_cast<int>(std::ceil((br[k + 1] - br[k]) / h - 1e-9))), p});
        }
    }

    std::vector<double> breaks(const std::vector<double>& s) const {
        double smin = *std::min_element(s.begin(), s.end()), smax = *std::max_element(s.begin(), s.end());
        double spread = r_.size() > 1 ? 13.0 * std::sqrt(r_.back() - r_.front()) : 0.0;
        double L = std::min(-12.0, smin - spread - 1.0);
        double U = std::max(smax, 0.0) + spec_.smax;
        std::vector<double> br{L};
        std::vector<double> ss(s.begin(), s.end());
        std::sort(ss.begin(), ss.end());
        for (double v : ss) br.push_back(v);
        br.push_back(U);
        if (delta_ > 0) br.push_back(U + 30.0 / delta_);
        return br;
    }

    QuadratureRule rule(const std::vector<double>& s) const { return detail::segments_rule(breaks(s), segs_); }

private:
    std::vector<double> r_;
    RuleSpec spec_;
    double delta_;
    std::vector<detail::Segment> segs_;
};

// Operators of the chain construction on one line grid, all in symmetrized form.
class LineSystem {
public:
    LineSystem(const ScalingFrame& frame, const std::vector<double>& s, const QuadratureRule& rule)
        : r_(frame.r_list), s_(s), rule_(rule), sw_(sqrt_weights(rule)) {
        if (s.size() != r_.size()) throw std::invalid_argument("LineSystem: |s| must equal |r|");
        for (std::size_t k = 0; k + 1 < r_.size(); ++k)
            V_.push_back(detail::symmetrize(detail::heat_matrix(r_[k], rule.nodes, r_[k + 1], rule.nodes), sw_, sw_));
    }

    std::size_t m() const { return r_.size(); }
    std::size_t n() const { return rule_.size(); }
    const QuadratureRule& rule() const { return rule_; }
    const Vec& sw() const { return sw_; }

    Vec above(std::size_t k) const {
        Vec v(n());
        for (std::size_t i = 0; i < n(); ++i) v[i] = rule_.nodes[i] > s_[k] ? 1.0 : 0.0;
        return v;
    }
    Vec below(std::size_t k) const { return Vec::Ones(n()) - above(k); }

    // sym form of a function sampled on the nodes
    Vec sym(const std::vector<double>& f) const {
        Vec v(n());
        for (std::size_t i = 0; i < n(); ++i) v[i] = sw_[i] * f[i];
        return v;
    }

    // Pbar_0 V_01 Pbar_1 ... V_{j,j+1} applied for j = from..0
    Mat chain_from(long from, Mat M) const {
        for (long j = from; j >= 0; --j) {
            M = V_[j] * M;
            M = below(j).asDiagonal() * M;
        }
        return M;
    }

    Mat K(std::size_t k, std::size_t l) const {
        return detail::symmetrize(detail::kernel_matrix(r_[k], rule_.nodes, r_[l], rule_.nodes), sw_, sw_);
    }

    // P K = sum_k chain_k P_{s_k} K_{r_k, r_1}
    Mat PK() const {
        Mat out = Mat::Zero(n(), n());
        for (std::size_t k = 0; k < m(); ++k) {
            Mat T = above(k).asDiagonal() * K(k, 0);
            out += chain_from(static_cast<long>(k) - 1, T);
        }
        return out;
    }

    // P f* with f* transported to label r_k on each term
    Vec Pfstar() const {
        Vec out = Vec::Zero(n());
        for (std::size_t k = 0; k < m(); ++k) {
            Vec f = sym(fstar_batch(r_[k], rule_.nodes));
            Mat T = (above(k).array() * f.array()).matrix();
            out += chain_from(static_cast<long>(k) - 1, T);
        }
        return out;
    }

    // (P - P_{s_1}) 1, innermost heat step done in closed form
    Vec Pminus1() const {
        Vec out = Vec::Zero(n());
        for (std::size_t k = 1; k < m(); ++k) {
            double var4 = 4.0 * (r_[k] - r_[k - 1]);
            Vec e(n());
            for (std::size_t i = 0; i < n(); ++i)
                e[i] = sw_[i] * 0.5 * std::erfc((s_[k] - rule_.nodes[i]) / std::sqrt(var4));
            Mat T = (below(k - 1).array() * e.array()).matrix();
            out += chain_from(static_cast<long>(k) - 2, T);
        }
        return out;
    }

    Vec P1() const { return (above(0).array() * sw_.array()).matrix() + Pminus1(); }

    // forward chain F = Pbar_1 V_12 ... Pbar_m; the operator P is 1 - F V_{r_m,r_1}
    Mat forward_chain() const {
        Mat M = below(m() - 1).asDiagonal() * Mat::Identity(n(), n());
        return chain_from(static_cast<long>(m()) - 2, M);
    }

private:
    std::vector<double> r_, s_;
    QuadratureRule rule_;
    Vec sw_;
    std::vector<Mat> V_;
};

inline DiscretizedOperator chain_operator(const ScalingFrame& frame, const std::vector<double>& s,
                                          const QuadratureRule& rule) {
    frame.validate();
    LineSystem sys(frame, s, rule);
    return {sys.forward_chain(), rule, {}};
}

// stationary pieces at one s-vector
struct StationaryParts {
    double R = 0.0;
    double det = 1.0;
    double det_h = 1.0;  // det(1 - PK - h x g)
    double gm = 0.0;
    double lambda = 0.0;  // G_m det(1 - PK)
    double cond = 1.0;
};

inline StationaryParts stationary_parts(const ScalingFrame& frame, const std::vector<double>& s,
                                        const QuadratureRule& rule, bool want_cond = false) {
    LineSystem sys(frame, s, rule);
    std::size_t n = sys.n();
    double r1 = frame.r_list.front();
    Mat A = Mat::Identity(n, n) - sys.PK();
    Vec up = (sys.above(0).array() * sys.sw().array()).matrix();
    Vec h = sys.Pfstar() + (Mat::Identity(n, n) - A) * up + sys.Pminus1();
    Vec g = sys.sym(g_step_batch(r1, rule.nodes, 0.0));
    StationaryParts p;
    p.R = R_stat(r1, s.front());
    Eigen::PartialPivLU<Mat> lu(A);
    p.det = lu.determinant();
    Vec sol = lu.solve(h);
    p.gm = p.R - g.dot(sol);
    p.det_h = det_of(A - h * g.transpose());
    p.lambda = (p.R - 1.0) * p.det + p.det_h;
    if (want_cond) {
        Eigen::JacobiSVD<Mat> svd(A);
        p.cond = svd.singularValues()(0) / svd.singularValues()(n - 1);
    }
    if (!std::isfinite(p.lambda)) throw std::runtime_error("stationary functional is not finite");
    return p;
}

inline double gm_functional(const ScalingFrame& frame, const std::vector<double>& s, const RuleSpec& spec = {}) {
    frame.validate();
    LineLayout lay(frame, s, spec, 0.0);
    return stationary_parts(frame, s, lay.rule(s)).gm;
}

// Lambda = G_m det(1 - P K)
inline double stationary_lambda(const ScalingFrame& frame, const std::vector<double>& s, const LineLayout& lay) {
    return stationary_parts(frame, s, lay.rule(s)).lambda;
}

inline std::vector<double> shifted(const std::vector<double>& s, double h) {
    std::vector<double> o(s);
    for (auto& v : o) v += h;
    return o;
}

// sum_i d/ds_i of F as a directional derivative, central differences with one Richardson step
inline double diagonal_derivative(const std::function<double(const std::vector<double>&)>& F,
                                  const std::vector<double>& s, double h) {
    double d1 = (F(shifted(s, h)) - F(shifted(s, -h))) / (2.0 * h);
    double d2 = (F(shifted(s, h / 2)) - F(shifted(s, -h / 2))) / h;
    return (4.0 * d2 - d1) / 3.0;
}

inline double check_probability(double v) {
    if (!(v >= -1e-3 && v <= 1.0 + 1e-3)) throw std::runtime_error("distribution value outside [0,1]: numerical failure");
    return v;
}

inline double airy_stat_fdd(const ScalingFrame& frame, const std::vector<double>& s, const RuleSpec& spec = {},
                            double fd_step = 1e-3) {
    frame.validate();
    if (!(fd_step > 0)) throw std::invalid_argument("airy_stat_fdd: fd_step must be positive");
    LineLayout lay(frame, s, spec, 0.0);
    auto F = [&](const std::vector<double>& v) { return stationary_lambda(frame, v, lay); };
    return check_probability(diagonal_derivative(F, s, fd_step));
}

// ---- finite-step objects ----

// block layout for the extended determinant on L^2({r_1..r_m} x R)
class BlockLayout {
public:
    BlockLayout(const ScalingFrame& frame, const std::vector<double>& s, const RuleSpec& spec, double delta)
        : r_(frame.r_list), spec_(spec), delta_(delta) {
        double hv = detail::heat_width(r_);
        for (std::size_t k = 0; k < r_.size(); ++k) {
            auto br = breaks(s, k);
            std::vector<detail::Segment> sg;
            if (r_.size() == 1) {
                sg.push_back({0, 0});  // graded core via build_rule
                sg.push_back({std::max(1, static_cast<int>(std::ceil((br[2] - br[1]) * delta / 2.0 - 1e-9))), 12});
            } else {
                double hcore = std::min(60.0 / spec.nodes, hv);
                sg.push_back({std::max(1, static_cast<int>(std::ceil((br[1] - br[0]) / hcore - 1e-9))), 12});
                sg.push_back({std::max(1, static_cast<int>(std::ceil((br[2] - br[1]) / hv - 1e-9))), 12});
            }
            segs_.push_back(sg);
        }
    }

    std::vector<double> breaks(const std::vector<double>& s, std::size_t k) const {
        double smax = *std::max_element(s.begin(), s.end());
        double U = std::max(smax, 0.0) + spec_.smax;
        return {s[k], U, U + 30.0 / delta_};
    }

    QuadratureRule rule(const std::vector<double>& s, std::size_t k) const {
        auto br = breaks(s, k);
        QuadratureRule q;
        if (segs_[k][0].panels == 0) {
            q = build_rule(br[0], br[1], spec_.nodes);
            auto t = detail::segments_rule({br[1], br[2]}, {segs_[k][1]});
            q.nodes.insert(q.nodes.end(), t.nodes.begin(), t.nodes.end());
            q.weights.insert(q.weights.end(), t.weights.begin(), t.weights.end());
            q.hi = br[2];
            return q;
        }
        return detail::segments_rule(br, segs_[k]);
    }

private:
    std::vector<double> r_;
    RuleSpec spec_;
    double delta_;
    std::vector<std::vector<detail::Segment>> segs_;
};

inline DiscretizedOperator extended_operator(const ScalingFrame& frame, const std::vector<double>& s, double delta,
                                             const BlockLayout& lay) {
    std::size_t m = frame.r_list.size();
    std::vector<QuadratureRule> rules;
    std::vector<Vec> sws;
    std::vector<std::vector<double>> f, g;
    DiscretizedOperator op;
    std::size_t total = 0;
    for (std::size_t k = 0; k < m; ++k) {
        rules.push_back(lay.rule(s, k));
        sws.push_back(sqrt_weights(rules.back()));
        double r = frame.r_list[k];
        auto fs = fstar_batch(r, rules.back().nodes);
        for (auto& v : fs) v += 1.0;
        f.push_back(fs);
        g.push_back(g_step_batch(r, rules.back().nodes, delta));
        op.block_map.push_back({total, rules.back().size()});
        total += rules.back().size();
    }
    op.matrix = Mat::Zero(total, total);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double ri = frame.r_list[i], rj = frame.r_list[j];
            const auto& X = rules[i].nodes;
            const auto& Y = rules[j].nodes;
            Mat B = detail::kernel_matrix(ri, X, rj, Y);
            if (ri < rj) B -= detail::heat_matrix(ri, X, rj, Y);
            for (std::size_t a = 0; a < X.size(); ++a)
                for (std::size_t b = 0; b < Y.size(); ++b) B(a, b) += delta * f[i][a] * g[j][b];
            op.matrix.block(op.block_map[i].first, op.block_map[j].first, X.size(), Y.size()) =
                detail::symmetrize(B, sws[i], sws[j]);
        }
    for (const auto& q : rules) {
        op.rule.nodes.insert(op.rule.nodes.end(), q.nodes.begin(), q.nodes.end());
        op.rule.weights.insert(op.rule.weights.end(), q.weights.begin(), q.weights.end());
    }
    return op;
}

inline double extended_det_value(const ScalingFrame& frame, const std::vector<double>& s, double delta,
                                 const BlockLayout& lay) {
    auto op = extended_operator(frame, s, delta, lay);
    return det_of(Mat::Identity(op.matrix.rows(), op.matrix.cols()) - op.matrix);
}

inline DetResult extended_det(const ScalingFrame& frame, const std::vector<double>& s, double delta,
                              const RuleSpec& spec = {}, bool estimate = false) {
    frame.validate();
    if (s.size() != frame.r_list.size()) throw std::invalid_argument("extended_det: |s| must equal |r|");
    if (!(delta > 0)) throw std::invalid_argument("extended_det: delta must be positive");
    BlockLayout lay(frame, s, spec, delta);
    auto op = extended_operator(frame, s, delta, lay);
    DetResult d{det_of(Mat::Identity(op.matrix.rows(), op.matrix.cols()) - op.matrix),
                static_cast<std::size_t>(op.matrix.rows()), 0.0};
    if (estimate) {
        RuleSpec fine{2 * spec.nodes, spec.smax + 4.0};
        BlockLayout lf(frame, s, fine, delta);
        d.richardson_estimate = std::abs(extended_det_value(frame, s, delta, lf) - d.value);
    }
    return d;
}

inline std::vector<double> default_chi(const ScalingFrame& frame, double delta) {
    std::size_t m = frame.r_list.size();
    double B = std::min({delta, detail::min_gap(frame.r_list), 1.0});
    std::vector<double> chi(m);
    for (std::size_t k = 1; k <= m; ++k) chi[k - 1] = 0.9 * B * (m + 1.0 - k) / (m + 1.0);
    return chi;
}

// P K^delta = P K + delta (P f) x g_{r_1}, symmetrized, on a line rule
inline Mat PKdelta(const ScalingFrame& frame, const std::vector<double>& s, double delta, const QuadratureRule& rule) {
    LineSystem sys(frame, s, rule);
    Vec Pf = sys.Pfstar() + sys.P1();
    Vec g = sys.sym(g_step_batch(frame.r_list.front(), rule.nodes, delta));
    return sys.PK() + delta * Pf * g.transpose();
}

inline double log_m(double chi, double x) { return x >= 0 ? -chi * x : x * x; }

inline double pathintegral_value(const ScalingFrame& frame, const std::vector<double>& s, double delta,
                                 const std::vector<double>& chi, const LineLayout& lay) {
    auto rule = lay.rule(s);
    Mat Q = -PKdelta(frame, s, delta, rule);
    std::size_t n = rule.size();
    std::vector<double> lm(n);
    for (std::size_t i = 0; i < n; ++i) lm[i] = log_m(chi.front(), rule.nodes[i]);
    Mat A(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double q = Q(i, j);
            double v = q == 0.0 ? 0.0 : std::copysign(std::exp(std::log(std::abs(q)) + lm[i] - lm[j]), q);
            A(i, j) = (i == j ? 1.0 : 0.0) + v;
        }
    return det_of(A);
}

inline DetResult pathintegral_det(const ScalingFrame& frame, const std::vector<double>& s, double delta,
                                  const std::vector<double>& chi, const RuleSpec& spec = {}) {
    frame.validate();
    if (!(delta > 0)) throw std::invalid_argument("pathintegral_det: delta must be positive");
    if (chi.size() != frame.r_list.size()) throw std::invalid_argument("pathintegral_det: need one chi per label");
    for (std::size_t k = 0; k < chi.size(); ++k) {
        if (!(chi[k] > 0)) throw std::invalid_argument("pathintegral_det: chi must be positive");
        if (k > 0 && !(chi[k] < chi[k - 1])) throw std::invalid_argument("pathintegral_det: chi must decrease");
    }
    LineLayout lay(frame, s, spec, delta);
    double v = pathintegral_value(frame, s, delta, chi, lay);
    return {v, lay.rule(s).size(), 0.0};
}

inline double finite_step_fdd(const ScalingFrame& frame, const std::vector<double>& s, double delta,
                              const RuleSpec& spec = {}, double fd_step = 1e-3) {
    frame.validate();
    if (!(delta > 0)) throw std::invalid_argument("finite_step_fdd: delta must be positive");
    BlockLayout lay(frame, s, spec, delta);
    auto F = [&](const std::vector<double>& v) { return extended_det_value(frame, v, delta, lay); };
    return check_probability(F(s) + diagonal_derivative(F, s, fd_step) / delta);
}

inline double finite_step_fdd_pathintegral(const ScalingFrame& frame, const std::vector<double>& s, double delta,
                                           const RuleSpec& spec = {}, double fd_step = 1e-3) {
    frame.validate();
    LineLayout lay(frame, s, spec, delta);
    auto chi = default_chi(frame, delta);
    auto F = [&](const std::vector<double>& v) { return pathintegral_value(frame, v, delta, chi, lay); };
    return check_probability(F(s) + diagonal_derivative(F, s, fd_step) / delta);
}

// delta^{-1} det(1 - P K^delta) against (delta^{-1} - <(1-PK)^{-1} P f, g>) det(1 - PK)
inline std::pair<double, double> factorization_check(const ScalingFrame& frame, const std::vector<double>& s,
                                                     double delta, const RuleSpec& spec = {}) {
    frame.validate();
    LineLayout lay(frame, s, spec, delta);
    double lhs = pathintegral_value(frame, s, delta, default_chi(frame, delta), lay) / delta;
    auto rule = lay.rule(s);
    LineSystem sys(frame, s, rule);
    std::size_t n = sys.n();
    Mat A = Mat::Identity(n, n) - sys.PK();
    Vec Pf = sys.Pfstar() + sys.P1();
    Vec g = sys.sym(g_step_batch(frame.r_list.front(), rule.nodes, delta));
    Eigen::PartialPivLU<Mat> lu(A);
    double rhs = (1.0 / delta - g.dot(lu.solve(Pf))) * lu.determinant();
    return {lhs, rhs};
}

// R_delta = 1/delta - int_{s1}^inf g_{r1}, with the double integral swapped
inline double R_delta(double r, double s1, double delta) {
    double T0 = airy_tail(s1, r, r * r), Td = airy_tail(s1, r + delta, r * r);
    double e = std::exp(delta * delta * delta / 3.0 + r * delta * delta - s1 * delta);
    double c = std::exp(2.0 / 3.0 * r * r * r);
    return 1.0 / delta - e / delta + c / delta * (std::exp(-delta * s1) * Td - T0);
}

// both sides of the analytic-continuation rearrangement at finite delta
inline std::pair<double, double> gm_delta_check(const ScalingFrame& frame, const std::vector<double>& s, double delta,
                                                const RuleSpec& spec = {}) {
    frame.validate();
    LineLayout lay(frame, s, spec, delta);
    auto rule = lay.rule(s);
    LineSystem sys(frame, s, rule);
    std::size_t n = sys.n();
    double r1 = frame.r_list.front();
    Mat PK = sys.PK();
    Mat A = Mat::Identity(n, n) - PK;
    Vec Pfs = sys.Pfstar();
    Vec Pf = Pfs + sys.P1();
    Vec up = (sys.above(0).array() * sys.sw().array()).matrix();
    Vec h = Pfs + PK * up + sys.Pminus1();
    Vec g = sys.sym(g_step_batch(r1, rule.nodes, delta));
    Eigen::PartialPivLU<Mat> lu(A);
    double lhs = 1.0 / delta - g.dot(lu.solve(Pf));
    double rhs = R_delta(r1, s.front(), delta) - g.dot(lu.solve(h));
    return {lhs, rhs};
}

// delta^{-1} det(1 - P K^delta) through the factorized form, used for the delta -> 0 trend
inline double factorized_first(const ScalingFrame& frame, const std::vector<double>& s, double delta,
                               const RuleSpec& spec = {}) {
    return gm_delta_check(frame, s, delta, spec).first;
}

// sum_sigma sgn prod_k w_{sigma(k)}^k / (w_{sigma(1)}+...+w_{sigma(k)}+lambda) against det[w_l^k/(w_l+lambda)]
inline std::pair<std::complex<double>, std::complex<double>> det_identity_smallN(
    const std::vector<std::complex<double>>& w, double lambda) {
    using C = std::complex<double>;
    std::size_t N = w.size();
    if (N == 0 || N > 8) throw std::invalid_argument("det_identity_smallN: need 1 <= N <= 8");
    if (!(lambda > 0)) throw std::invalid_argument("det_identity_smallN: lambda must be positive");
    std::vector<std::size_t> perm(N);
    std::iota(perm.begin(), perm.end(), 0);
    C lhs = 0.0;
    do {
        int inv = 0;
        for (std::size_t a = 0; a < N; ++a)
            for (std::size_t b = a + 1; b < N; ++b)
                if (perm[a] > perm[b]) ++inv;
        C prod = 1.0, partial = lambda;
        for (std::size_t k = 0; k < N; ++k) {
            partial += w[perm[k]];
            if (std::abs(partial) < 1e-300) throw std::domain_error("det_identity_smallN: pole hit");
            prod *= std::pow(w[perm[k]], static_cast<int>(k + 1)) / partial;
        }
        lhs += (inv % 2 ? -1.0 : 1.0) * prod;
    } while (std::next_permutation(perm.begin(), perm.end()));
    Eigen::MatrixXcd M(N, N);
    for (std::size_t k = 0; k < N; ++k)
        for (std::size_t l = 0; l < N; ++l) M(k, l) = std::pow(w[l], static_cast<int>(k + 1)) / (w[l] + lambda);
    return {lhs, M.partialPivLu().determinant()};
}

// density of A(r2) - A(r1) at sigma via mixed second differences of Lambda at s = +-S
inline double increment_density(const ScalingFrame& frame, double sigma, double S = 10.0, double h = 1e-2,
                                const RuleSpec& spec = {}) {
    if (frame.r_list.size() != 2) throw std::invalid_argument("increment_density: needs two labels");
    auto mixed = [&](double s1, double s2) {
        std::vector<double> base{s1, s2};
        LineLayout lay(frame, base, spec, 0.0);
        auto L = [&](double a, double b) { return stationary_lambda(frame, {a, b}, lay); };
        return (L(s1 + h, s2 + h) - L(s1 + h, s2 - h) - L(s1 - h, s2 + h) + L(s1 - h, s2 - h)) / (4.0 * h * h);
    };
    return mixed(S, S + sigma) - mixed(-S, -S + sigma);
}

}  // namespace astat
