#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/airy.hpp>

#include "astat/kernels.hpp"

using namespace astat;

namespace {

double quad(auto f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

double ai_tail(double s) {
    return quad([](double x) { return boost::math::airy_ai(x); }, s, 60.0);
}

}  // namespace

TEST(Kernels, HeatKernel) {
    EXPECT_NEAR(v_heat(0, 0.2, 0.5, 0.2), 1 / std::sqrt(4 * std::numbers::pi * 0.5), 1e-15);
    EXPECT_NEAR(quad([](double y) { return v_heat(0.1, 0.3, 0.9, y); }, -30, 30), 1.0, 1e-10);
    EXPECT_THROW(v_heat(1, 0, 1, 0), std::invalid_argument);
    EXPECT_THROW(v_airy_rep(1, 0, 0.5, 0), std::invalid_argument);
}

TEST(Kernels, AiryRepresentationOfV) {
    double a = v_airy_rep(0, 0.3, 1, -0.4), b = v_heat(0, 0.3, 1, -0.4);
    EXPECT_NEAR(a / b, 1.0, 1e-8);
    EXPECT_NEAR(v_airy_rep(-0.5, 1.0, 0.7, 0.0) / v_heat(-0.5, 1.0, 0.7, 0.0), 1.0, 1e-8);
}

TEST(Kernels, Semigroup) {
    for (auto [r1, r2, r3, s1, s3] : {std::array<double, 5>{0.0, 0.4, 1.0, 0.2, -0.5}, {-1.0, -0.2, 0.1, 2.0, 1.0}}) {
        double c = quad([&](double x) { return v_heat(r1, s1, r2, x) * v_heat(r2, x, r3, s3); }, -30, 30);
        EXPECT_NEAR(c / v_heat(r1, s1, r3, s3), 1.0, 1e-8);
    }
}

TEST(Kernels, ConjugatedAiryKernel) {
    double aip = boost::math::airy_ai_prime(0.0);
    EXPECT_NEAR(k_conj(0, 0, 0, 0), aip * aip, 1e-15);
    EXPECT_NEAR(k_conj(0, 0, 0, 0), 0.066987, 1e-6);
    EXPECT_DOUBLE_EQ(k_conj(0, 0.4, 0, -1.3), k_conj(0, -1.3, 0, 0.4));
    // conjugation factor in isolation
    double r = 0.7;
    EXPECT_NEAR(k_conj(r, 0.2, r, 0.5) / airy_product_tail(0.2, 0.5, r, r), std::exp(r * (0.5 - 0.2)), 1e-13);
}

TEST(Kernels, FStepDecomposition) {
    for (double r : {-1.0, 0.0, 0.8})
        for (double s : {-3.0, 0.0, 4.0}) EXPECT_DOUBLE_EQ(f_step(r, s), 1.0 + fstar(r, s));
    // limit s -> infinity
    EXPECT_LT(std::abs(f_step(0, 12) - 1.0), 1e-10);
}

// the f_step display integrated from 0 after the substitution x -> s + x
TEST(Kernels, StepFunctionsAgainstDefinition) {
    for (double r : {-0.5, 0.0, 0.6})
        for (double s : {-2.0, 0.5}) {
            double If = quad([&](double x) { return boost::math::airy_ai(r * r + s + x) * std::exp(-r * x); }, 0, 50);
            double f = 1 - std::exp(-2.0 / 3 * r * r * r - r * s) * If;
            EXPECT_NEAR(f_step(r, s), f, 1e-12);
            double d = 0.5;
            double Ig = quad([&](double x) { return boost::math::airy_ai(r * r + s + x) * std::exp((d + r) * x); }, 0, 50);
            double g = std::exp(d * d * d / 3 + r * d * d - s * d) - std::exp(2.0 / 3 * r * r * r + r * s) * Ig;
            EXPECT_NEAR(g_step(r, s, d), g, 1e-11);
            EXPECT_NEAR(g_step(r, s, 0), g_stat(r, s), 1e-12);
        }
    EXPECT_THROW(g_step(0, 0, -0.1), std::invalid_argument);
}

TEST(Kernels, StationaryAtZeroSimplifies) {
    auto in = stationary_ingredients(0.0);
    for (double s : {-4.0, -1.0, 0.0, 2.0}) {
        double T = ai_tail(s);
        EXPECT_NEAR(in.fstar(s), -T, 1e-12);
        EXPECT_NEAR(in.g(s), 1 - T, 1e-12);
        EXPECT_NEAR(in.g(s) - 1 - in.fstar(s), 0.0, 1e-12);
    }
    // int_0^inf int_x^inf Ai = int_0^inf y Ai(y) dy = -Ai'(0)
    EXPECT_NEAR(in.R(0.0), -boost::math::airy_ai_prime(0.0), 1e-12);
    EXPECT_NEAR(in.R(0.0), 0.258819403792807, 1e-12);
    double swapped = 1.0 + quad([](double y) { return (y - 1.0) * boost::math::airy_ai(y); }, 1.0, 60.0);
    EXPECT_NEAR(in.R(1.0), swapped, 1e-12);
}

TEST(Kernels, BatchesMatchPointwise) {
    std::vector<double> s{-3, -0.5, 0, 1.7, 6};
    auto fb = fstar_batch(0.4, s);
    auto gb = g_step_batch(0.4, s, 0.3);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(fb[i], fstar(0.4, s[i]), 1e-13);
        EXPECT_NEAR(gb[i], g_step(0.4, s[i], 0.3), 1e-12);
    }
}

// V acts as the identity between labels on f and g
TEST(Kernels, HeatFlowOnRankOneFactors) {
    double r1 = 0.0, r2 = 0.5;
    for (double x : {-1.0, 0.0, 1.5}) {
        double vf = quad([&](double y) { return v_heat(r1, x, r2, y) * f_step(r2, y); }, -30, 30);
        EXPECT_NEAR(vf, f_step(r1, x), 1e-6);
        double gv = quad([&](double y) { return g_step(r1, y, 0.5) * v_heat(r1, y, r2, x); }, -30, 30);
        EXPECT_NEAR(gv, g_step(r2, x, 0.5), 1e-6);
        double v1 = quad([&](double y) { return v_heat(r1, x, r2, y); }, -30, 30);
        EXPECT_NEAR(v1, 1.0, 1e-10);
    }
}

TEST(Kernels, KDeltaEntry) {
    ScalingFrame f{1000, 0.5, {0.0, 1.0}};
    EXPECT_DOUBLE_EQ(kdelta_entry(0, 0.3, 0, -0.2, f, 0.0), k_conj(0, 0.3, 0, -0.2));
    double want = k_conj(0, 0, 0, 0) + 0.5 * f_step(0, 0) * g_step(0, 0, 0.5);
    EXPECT_NEAR(kdelta_entry(0, 0, 0, 0, f, 0.5), want, 1e-15);
    double cross = kdelta_entry(0, 0.1, 1, 0.2, f, 0.5);
    EXPECT_NEAR(cross, -v_heat(0, 0.1, 1, 0.2) + k_conj(0, 0.1, 1, 0.2) + 0.5 * f_step(0, 0.1) * g_step(1, 0.2, 0.5), 1e-14);
    // no heat term for decreasing labels
    double back = kdelta_entry(1, 0.2, 0, 0.1, f, 0.5);
    EXPECT_NEAR(back, k_conj(1, 0.2, 0, 0.1) + 0.5 * f_step(1, 0.2) * g_step(0, 0.1, 0.5), 1e-14);
}
