#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fpn/frac_core.hpp"
#include "fpn/systems.hpp"

using fpn::Complex;
using fpn::CVector;

namespace {

double residual_at(const fpn::NonlinearSystem& f, const CVector& x) {
    return fpn::norm2(f.eval(x));
}

} // namespace

TEST(SineIntegralTail, PublishedRootsHaveSmallResidual) {
    const fpn::NonlinearSystem f = fpn::make_sine_integral_tail(50);
    EXPECT_LE(residual_at(f, {Complex(23.60399266, 0.0)}), 1e-6);
    EXPECT_LE(residual_at(f, {Complex(1.92644561, 0.0)}), 1e-6);
}

TEST(SineIntegralTail, ZeroArgumentGivesHalfPi) {
    const fpn::NonlinearSystem f = fpn::make_sine_integral_tail(0);
    const CVector out = f.eval({Complex(0.0, 0.0)});
    EXPECT_EQ(out[0], Complex(std::numbers::pi / 2.0, 0.0));
}

TEST(SineIntegralTail, TermRecurrenceMatchesDirectSum) {
    // the incremental term update must reproduce the plain alternating series
    // sum_m (-1)^m z^(2m+1) / ((2m+1) (2m+1)!)
    const CVector points = {Complex(0.5, 0.0), Complex(1.0, 0.3), Complex(-2.0, 0.0),
                            Complex(0.2, -1.1)};
    for (int k = 0; k <= 10; ++k) {
        const fpn::NonlinearSystem f = fpn::make_sine_integral_tail(k);
        for (const Complex& z : points) {
            Complex direct(0.0, 0.0);
            for (int m = 0; m <= k; ++m) {
                const double sign = (m % 2 == 0) ? 1.0 : -1.0;
                direct += sign * std::pow(z, 2 * m + 1)
                    / ((2.0 * m + 1.0) * std::tgamma(2.0 * m + 2.0));
            }
            const Complex expect = std::numbers::pi / 2.0 - direct;
            const Complex got = f.eval({z})[0];
            EXPECT_NEAR(std::abs(got - expect), 0.0, 1e-12 * std::max(1.0, std::abs(expect)))
                << "k=" << k << " z=" << z;
        }
    }
}

TEST(SineIntegralTail, NamesFollowTermCount) {
    EXPECT_EQ(fpn::make_sine_integral_tail(50).name, "si50");
    EXPECT_EQ(fpn::make_sine_integral_tail(7).name, "si7");
    EXPECT_EQ(fpn::make_sine_integral_tail(0).dimension, 1u);
    EXPECT_THROW(fpn::make_sine_integral_tail(-1), std::invalid_argument);
}

TEST(PlanarExpSine, PublishedRootsHaveSmallResidual) {
    const fpn::NonlinearSystem f = fpn::make_example2();
    EXPECT_LE(residual_at(f, {Complex(-0.15442216, 0.0), Complex(1.14021866, 0.0)}), 1e-6);
    EXPECT_LE(residual_at(f, {Complex(1.70987637, 0.0), Complex(-18.87534307, 0.0)}), 1e-6);
    EXPECT_LE(residual_at(f, {Complex(-0.13780202, -0.87180273),
                              Complex(2.16460988, -4.68221226)}),
              1e-6);
}

TEST(PlanarExpSine, RealAxisMatchesRealArithmetic) {
    const fpn::NonlinearSystem f = fpn::make_example2();
    const double pi = std::numbers::pi;
    const double e = std::numbers::e;
    for (const auto& [x1, x2] : {std::pair{0.5, 0.3}, {0.86, 0.86}, {-0.2, 1.4}, {1.0, -2.0}}) {
        const double r1 = 0.5 * x1 * (std::sin(x1 * x2) - 1.0) - x2 / (4.0 * pi);
        const double r2 = (1.0 - 1.0 / (4.0 * pi)) * (std::exp(2.0 * x1) - e)
            + e * (x2 / pi - 2.0 * x1);
        const CVector out = f.eval({Complex(x1, 0.0), Complex(x2, 0.0)});
        EXPECT_NEAR(out[0].real(), r1, 1e-14 * std::max(1.0, std::abs(r1)));
        EXPECT_NEAR(out[1].real(), r2, 1e-14 * std::max(1.0, std::abs(r2)));
        EXPECT_EQ(out[0].imag(), 0.0);
        EXPECT_EQ(out[1].imag(), 0.0);
    }
}

TEST(PlanarExpSine, ConjugateOfFoundRootIsAlsoRoot) {
    // real coefficients: residual norms at z and conj(z) must agree
    const fpn::NonlinearSystem f = fpn::make_example2();
    fpn::SolverConfig cfg;
    cfg.alpha = 0.7283;
    const fpn::SolveResult res =
        fpn::solve(f, {Complex(0.86, 0.0), Complex(0.86, 0.0)}, cfg);
    ASSERT_EQ(res.status, fpn::SolverStatus::Converged);
    ASSERT_GT(std::abs(res.root[0].imag()), 0.1); // lands on a genuinely complex root
    CVector conj(res.root.size());
    for (std::size_t k = 0; k < conj.size(); ++k)
        conj[k] = std::conj(res.root[k]);
    const double at_root = residual_at(f, res.root);
    const double at_conj = residual_at(f, conj);
    EXPECT_LE(at_conj, 10.0 * cfg.tol);
    EXPECT_NEAR(at_conj, at_root, 1e-12);
}

TEST(TrigHyperbolicTriple, PublishedRootsHaveSmallResidual) {
    const fpn::NonlinearSystem f = fpn::make_example3();
    EXPECT_LE(residual_at(f, {Complex(1.30219735, 0.0), Complex(-1.31677799, 0.0),
                              Complex(-1.4605226, 0.0)}),
              1e-5);
    EXPECT_LE(residual_at(f, {Complex(-1.43433659, 0.0), Complex(1.27415875, 0.0),
                              Complex(-1.11130559, 0.0)}),
              1e-5);
}

TEST(TrigHyperbolicTriple, OriginValue) {
    const fpn::NonlinearSystem f = fpn::make_example3();
    const CVector out = f.eval({Complex(0, 0), Complex(0, 0), Complex(0, 0)});
    EXPECT_NEAR(out[0].real(), 10.8, 1e-12);
    EXPECT_NEAR(out[1].real(), 6.4, 1e-12);
    EXPECT_NEAR(out[2].real(), 23.0, 1e-12);
    for (const Complex& c : out)
        EXPECT_EQ(c.imag(), 0.0);
}

TEST(TrigHyperbolicTriple, RealAxisMatchesRealArithmetic) {
    const fpn::NonlinearSystem f = fpn::make_example3();
    for (const auto& [x1, x2, x3] :
         {std::tuple{0.3, 0.4, 0.5}, {0.95, 0.95, 0.95}, {-1.0, 1.2, -0.7}}) {
        const double r1 =
            -3.6 * x2 * (std::cos(x2 * x2) + x1 * x1 * x1 * x3) - 3.6 * x3 + 10.8;
        const double r2 =
            -1.6 * x1 * (x1 + x2 * x2 * x2 * x3) - 1.6 * std::sinh(x3) + 6.4;
        const double r3 =
            -4.6 * x2 * (x1 * x3 * x3 * x3 + 1.0) - 4.6 * std::cosh(x1) + 27.6;
        const CVector out =
            f.eval({Complex(x1, 0.0), Complex(x2, 0.0), Complex(x3, 0.0)});
        EXPECT_NEAR(out[0].real(), r1, 1e-14 * std::max(1.0, std::abs(r1)));
        EXPECT_NEAR(out[1].real(), r2, 1e-14 * std::max(1.0, std::abs(r2)));
        EXPECT_NEAR(out[2].real(), r3, 1e-14 * std::max(1.0, std::abs(r3)));
    }
}

TEST(BenchmarkRegistry, NamesAndDimensions) {
    const std::vector<fpn::NonlinearSystem> all = fpn::benchmark_systems();
    ASSERT_EQ(all.size(), 3u);
    EXPECT_EQ(all[0].name, "si50");
    EXPECT_EQ(all[0].dimension, 1u);
    EXPECT_EQ(all[1].name, "example2");
    EXPECT_EQ(all[1].dimension, 2u);
    EXPECT_EQ(all[2].name, "example3");
    EXPECT_EQ(all[2].dimension, 3u);
    for (const fpn::NonlinearSystem& s : all) {
        ASSERT_TRUE(static_cast<bool>(s.eval));
        EXPECT_EQ(s.eval(CVector(s.dimension, Complex(0.1, 0.0))).size(), s.dimension);
    }
}
