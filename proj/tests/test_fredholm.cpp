#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/airy.hpp>

#include "astat/fredholm.hpp"

using namespace astat;

namespace {

double ai_prime0() { return boost::math::airy_ai_prime(0.0); }

// unconjugated Airy kernel through Boost
double airy_kernel_boost(double x, double y) {
    using boost::math::airy_ai;
    using boost::math::airy_ai_prime;
    if (std::abs(x - y) < 1e-9) return airy_ai_prime(x) * airy_ai_prime(x) - x * airy_ai(x) * airy_ai(x);
    return (airy_ai(x) * airy_ai_prime(y) - airy_ai_prime(x) * airy_ai(y)) / (x - y);
}

}  // namespace

TEST(Quadrature, BuildRuleIntegrates) {
    auto q = build_rule(-3.0, 11.0, 60);
    EXPECT_EQ(q.size(), 60u);
    double one = 0, ex = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        one += q.weights[i];
        ex += q.weights[i] * std::exp(-q.nodes[i]);
    }
    EXPECT_NEAR(one, 14.0, 1e-12);
    EXPECT_NEAR(ex, std::exp(3.0) - std::exp(-11.0), 1e-10);
    EXPECT_THROW(build_rule(1, 1, 60), std::invalid_argument);
    EXPECT_THROW(build_rule(0, 1, 4), std::invalid_argument);
}

TEST(Fredholm, NystromTrivialKernels) {
    auto q = build_rule(0.0, 1.0, 40);
    EXPECT_NEAR(nystrom_det([](double, double) { return 0.0; }, q).value, 1.0, 1e-15);
    // rank one: det(1 - a x b) = 1 - int a b
    auto d = nystrom_det([](double x, double y) { return 0.5 * x * y; }, q);
    EXPECT_NEAR(d.value, 1.0 - 0.5 / 3.0, 1e-13);
    EXPECT_THROW(nystrom_det([](double, double) { return NAN; }, q), std::runtime_error);
}

TEST(Fredholm, AiryDeterminantTwoSchemes) {
    // GUE Tracy-Widom through the Boost kernel on a uniform Gauss-Legendre grid
    QuadratureRule q;
    append_segments(q, {-2.0, 16.0}, 0.5, 16);
    double boost_det = nystrom_det(airy_kernel_boost, q).value;
    auto r = build_rule(-2.0, 12.0, 60);
    double ours = nystrom_det([](double x, double y) { return airy_product_tail(x, y, 0, 0); }, r).value;
    EXPECT_NEAR(ours, boost_det, 1e-10);
    EXPECT_NEAR(ours, 0.41322414250512257, 1e-9);
    // conjugation leaves the determinant alone
    double conj = nystrom_det([](double x, double y) { return k_conj(0.6, x, 0.6, y); }, build_rule(-2.0 - 0.36, 12.0, 60)).value;
    EXPECT_NEAR(conj, ours, 1e-10);
}

TEST(Fredholm, AiryKernelDiagonalMatchesBoost) {
    for (double x : {-2.0, 0.0, 1.5}) EXPECT_NEAR(airy_product_tail(x, x, 0, 0), airy_kernel_boost(x, x), 1e-13);
    EXPECT_NEAR(airy_product_tail(0, 0, 0, 0), ai_prime0() * ai_prime0(), 1e-15);
}

TEST(Fredholm, ChainOperatorLimits) {
    ScalingFrame one{1000, 0, {0.0}};
    std::vector<double> s{0.5};
    LineLayout lay(one, s, {}, 0.0);
    auto rule = lay.rule(s);
    auto F = chain_operator(one, s, rule).matrix;
    for (std::size_t i = 0; i < rule.size(); ++i) EXPECT_DOUBLE_EQ(F(i, i), rule.nodes[i] <= 0.5 ? 1.0 : 0.0);
    EXPECT_DOUBLE_EQ(F.norm(), std::sqrt(F.diagonal().sum()));

    ScalingFrame two{1000, 0, {0.0, 0.5}};
    std::vector<double> lo{-40, -40};
    auto r2 = LineLayout(two, lo, {}, 0.0).rule(lo);
    auto F2 = chain_operator(two, lo, r2).matrix;
    for (std::size_t i = 0; i < r2.size(); ++i)
        for (std::size_t j = 0; j < r2.size(); ++j)
            if (r2.nodes[i] > -40 || r2.nodes[j] > -40) {
                EXPECT_EQ(F2(i, j), 0.0);
            }
    // no projection active below the cuts: the chain is the heat operator there
    std::vector<double> hi{60, 60};
    auto r3 = LineLayout(two, hi, {}, 0.0).rule(hi);
    auto G = chain_operator(two, hi, r3).matrix;
    auto sw = sqrt_weights(r3);
    for (std::size_t i = 0; i < r3.size(); i += 37)
        for (std::size_t j = 0; j < r3.size(); j += 41)
            if (r3.nodes[i] < 60 && r3.nodes[j] < 60) {
                EXPECT_NEAR(G(i, j), sw[i] * v_heat(0, r3.nodes[i], 0.5, r3.nodes[j]) * sw[j], 1e-14);
            }
}

TEST(Fredholm, ProjectionOnOneLabel) {
    ScalingFrame one{1000, 0, {0.3}};
    std::vector<double> s{-1.0};
    auto rule = LineLayout(one, s, {}, 0.0).rule(s);
    LineSystem sys(one, s, rule);
    EXPECT_EQ(sys.Pminus1().norm(), 0.0);
    EXPECT_NEAR((sys.P1() - (sys.above(0).array() * sys.sw().array()).matrix()).norm(), 0.0, 1e-15);
}

TEST(Fredholm, ExtendedDeterminantBasics) {
    // far above the edge nothing is left
    ScalingFrame one{1000, 0.5, {0.0}};
    EXPECT_NEAR(extended_det(one, {60.0}, 0.5).value, 1.0, 1e-12);
    // m = 1 is a plain Nystrom determinant
    double d = 0.5, s = -0.5;
    QuadratureRule q = build_rule(s, 14.0, 60);
    auto tail = build_rule(14.0, 14.0 + 30.0 / d, 96);
    q.nodes.insert(q.nodes.end(), tail.nodes.begin(), tail.nodes.end());
    q.weights.insert(q.weights.end(), tail.weights.begin(), tail.weights.end());
    auto ny = nystrom_det([&](double x, double y) { return k_conj(0, x, 0, y) + d * f_step(0, x) * g_step(0, y, d); }, q);
    EXPECT_NEAR(extended_det(one, {s}, d).value, ny.value, 1e-9);
    EXPECT_THROW(extended_det(one, {0.0, 1.0}, 0.5), std::invalid_argument);
    EXPECT_THROW(extended_det(one, {0.0}, 0.0), std::invalid_argument);
}

TEST(Fredholm, PathIntegralMatchesExtended) {
    for (const auto& [r, s] : std::vector<std::pair<std::vector<double>, std::vector<double>>>{{{0.0}, {0.0}},
                                                                                               {{0.0, 1.0}, {0.0, 0.5}}})
        for (double d : {0.5, 1.0}) {
            ScalingFrame f{1000, d, r};
            double x = extended_det(f, s, d).value;
            auto chi = default_chi(f, d);
            double p = pathintegral_det(f, s, d, chi).value;
            EXPECT_NEAR(p / x, 1.0, 1e-8);
            for (auto& c : chi) c *= 0.3;
            EXPECT_NEAR(pathintegral_det(f, s, d, chi).value / p, 1.0, 1e-10);
        }
    ScalingFrame f{1000, 0.5, {0.0, 1.0}};
    EXPECT_THROW(pathintegral_det(f, {0, 0}, 0.5, {0.1, 0.2}), std::invalid_argument);
    EXPECT_THROW(pathintegral_det(f, {0, 0}, 0.5, {0.2, -0.1}), std::invalid_argument);
    EXPECT_THROW(pathintegral_det(f, {0, 0}, 0.5, {0.2}), std::invalid_argument);
}

TEST(Fredholm, Factorization) {
    for (double d : {0.25, 1.0}) {
        ScalingFrame f{1000, d, {0.0, 1.0}};
        auto [l, r] = factorization_check(f, {0.0, 0.0}, d);
        EXPECT_NEAR(l / r, 1.0, 1e-8);
    }
}

TEST(Fredholm, GmRearrangement) {
    for (double d : {0.25, 0.5})
        for (const auto& r : std::vector<std::vector<double>>{{0.0}, {0.0, 1.0}}) {
            ScalingFrame f{1000, d, r};
            std::vector<double> s(r.size(), 0.0);
            auto [l, rr] = gm_delta_check(f, s, d);
            EXPECT_NEAR(l, rr, 1e-7);
        }
}

// R_delta against its defining integral
TEST(Fredholm, RDelta) {
    double r = 0.4, s1 = -0.3, d = 0.5;
    double tail = 0;
    for (int k = 0; k < 100; ++k)
        tail += gl_integrate([&](double x) { return g_step(r, x, d); }, s1 + 2.0 * k, s1 + 2.0 * (k + 1), 20);
    EXPECT_NEAR(R_delta(r, s1, d), 1.0 / d - tail, 1e-9);
}

TEST(Fredholm, StationaryOnePointLaw) {
    ScalingFrame f{1000, 0, {0.0}};
    EXPECT_NEAR(airy_stat_fdd(f, {12.0}), 1.0, 1e-6);
    EXPECT_LT(airy_stat_fdd(f, {-8.0}), 1e-3);
    double prev = 0;
    for (double s = -3; s <= 3; s += 1.5) {
        double v = airy_stat_fdd(f, {s});
        EXPECT_GT(v, prev);
        prev = v;
    }
}

// one-point stationary law is Baik-Rains: mean 0, variance 1.15039
TEST(Fredholm, StationaryMoments) {
    ScalingFrame f{1000, 0, {0.0}};
    const int K = 70;
    std::vector<double> F(2 * K + 1);
    for (int i = -K; i <= K; ++i) F[i + K] = airy_stat_fdd(f, {0.1 * i});
    auto mom = [&](int step) {
        double h = 0.1 * step, m1 = 0, m2 = 0;
        for (int i = -K; i <= K; i += step) {
            double s = 0.1 * i, Fi = F[i + K], w = (i == -K || i == K) ? 0.5 : 1.0;
            double a = i < 0 ? -Fi : (i == 0 ? 0.5 - Fi : 1 - Fi);
            m1 += w * h * a;
            m2 += w * h * 2 * std::abs(s) * (i < 0 ? Fi : 1 - Fi);
        }
        return std::pair{m1, m2 - m1 * m1};
    };
    double va = mom(2).second;
    auto [m1b, vb] = mom(1);
    EXPECT_NEAR(m1b, 0.0, 1e-5);
    EXPECT_NEAR((4 * vb - va) / 3, 1.15039, 5e-4);
}

TEST(Fredholm, StationaryTwoPointIsJointLaw) {
    ScalingFrame f{1000, 0, {0.0, 1.0}};
    ScalingFrame a{1000, 0, {0.0}}, b{1000, 0, {1.0}};
    double j = airy_stat_fdd(f, {0.0, 0.5});
    EXPECT_LE(j, airy_stat_fdd(a, {0.0}) + 1e-6);
    EXPECT_LE(j, airy_stat_fdd(b, {0.5}) + 1e-6);
    // a huge second cut does not constrain the first coordinate
    EXPECT_NEAR(airy_stat_fdd(f, {0.0, 14.0}), airy_stat_fdd(a, {0.0}), 1e-5);
}

// m = 1 straight from the definition: P = P_s, plain Nystrom on [s, s+16], Boost Airy, nested quadrature
TEST(Fredholm, OnePointLawAgainstDefinition) {
    using Qk = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto Ai = [](double x) { return boost::math::airy_ai(x); };
    double r = 0.8, s0 = 0.4, e23 = std::exp(2.0 / 3 * r * r * r);
    auto integ = [](auto f, double a, double b) { return Qk::integrate(f, a, b, 12, 1e-14); };
    auto K = [&](double a, double b) {
        return std::exp(r * (b - a)) * integ([&](double x) { return Ai(r * r + a + x) * Ai(r * r + b + x); }, 0, 40);
    };
    auto fst = [&](double a) { return -integ([&](double x) { return Ai(r * r + x) * std::exp(-r * x); }, a, a + 40) / e23; };
    auto g = [&](double a) { return 1 - e23 * integ([&](double x) { return Ai(r * r + x) * std::exp(r * x); }, a, a + 40); };
    auto Lam = [&](double s) {
        auto q = build_rule(s, s + 16, 80);
        int n = q.size();
        double R = s + e23 * integ([&](double x) {
                                return integ([&](double y) { return Ai(r * r + y) * std::exp(r * y); }, x, x + 40);
                            }, s, s + 40);
        Mat A(n, n);
        Vec h(n), gv(n);
        for (int i = 0; i < n; ++i) {
            double wi = std::sqrt(q.weights[i]), k1 = 0;
            for (int j = 0; j < n; ++j) {
                double kk = K(q.nodes[i], q.nodes[j]);
                A(i, j) = (i == j) - wi * kk * std::sqrt(q.weights[j]);
                k1 += kk * q.weights[j];
            }
            k1 += integ([&](double y) { return K(q.nodes[i], y); }, s + 16, s + 40);
            h(i) = wi * (fst(q.nodes[i]) + k1);
            gv(i) = wi * g(q.nodes[i]);
        }
        Eigen::PartialPivLU<Mat> lu(A);
        return (R - gv.dot(lu.solve(h))) * lu.determinant();
    };
    double want = (Lam(s0 + 1e-3) - Lam(s0 - 1e-3)) / 2e-3;
    ScalingFrame f{1000, 0, {r}};
    EXPECT_NEAR(airy_stat_fdd(f, {s0}), want, 1e-6);
    // the one-point law moves with r: the initial profile adds its own fluctuation off the origin
    EXPECT_GT(std::abs(want - airy_stat_fdd(ScalingFrame{1000, 0, {0.0}}, {s0})), 1e-3);
}

TEST(Fredholm, FiniteStepMonotoneInS) {
    ScalingFrame f{1000, 0.5, {0.0}};
    double prev = 0;
    for (double s = -3; s <= 3; s += 2) {
        double v = finite_step_fdd(f, {s}, 0.5);
        EXPECT_GT(v, prev);
        prev = v;
    }
    EXPECT_NEAR(finite_step_fdd_pathintegral(f, {0.0}, 0.5), finite_step_fdd(f, {0.0}, 0.5), 1e-6);
}

TEST(Fredholm, DeltaTrendTowardStationary) {
    ScalingFrame f0{1000, 0, {0.0}};
    double a = airy_stat_fdd(f0, {0.0});
    std::vector<double> d;
    for (double dl : {0.4, 0.2, 0.1}) d.push_back(std::abs(finite_step_fdd(ScalingFrame{1000, dl, {0.0}}, {0.0}, dl) - a));
    EXPECT_GT(d[0], d[1]);
    EXPECT_GT(d[1], d[2]);
}

TEST(Fredholm, ConditionNumberModerate) {
    ScalingFrame f{1000, 0, {0.0, 1.0}};
    std::vector<double> s{0.0, 0.5};
    auto rule = LineLayout(f, s, {}, 0.0).rule(s);
    EXPECT_LT(stationary_parts(f, s, rule, true).cond, 1e8);
}

// permutation sum against the determinant, hand-sized instances
TEST(Fredholm, DeterminantIdentitySmallN) {
    using C = std::complex<double>;
    auto [l1, r1] = det_identity_smallN({C(2.0, 0.0)}, 1.0);
    EXPECT_NEAR(std::abs(l1 - C(2.0 / 3.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(r1 - C(2.0 / 3.0)), 0.0, 1e-15);
    auto [l3, r3] = det_identity_smallN({C(1, 1), C(2, 0), C(0.5, -0.3)}, 0.7);
    EXPECT_LT(std::abs(l3 - r3), 1e-12 * std::abs(r3));
    std::vector<C> w6{C(0.9, 0.1), C(0.6, -0.2), C(1.1, 0.3), C(0.7, 0), C(0.8, -0.4), C(1.0, 0.2)};
    auto [l6, r6] = det_identity_smallN(w6, 1.3);
    EXPECT_LT(std::abs(l6 - r6), 1e-9 * std::abs(r6));
    EXPECT_THROW(det_identity_smallN({}, 1.0), std::invalid_argument);
    EXPECT_THROW(det_identity_smallN({C(1)}, 0.0), std::invalid_argument);
}

TEST(Fredholm, Errors) {
    EXPECT_THROW(check_probability(1.5), std::runtime_error);
    EXPECT_THROW(det_of(Mat::Constant(2, 2, NAN)), std::runtime_error);
    EXPECT_EQ(det_of(Mat(0, 0)), 1.0);
    ScalingFrame f{1000, 0, {0.0}};
    EXPECT_THROW(airy_stat_fdd(f, {0.0}, {}, 0.0), std::invalid_argument);
    EXPECT_THROW(increment_density(f, 0.1), std::invalid_argument);
}
