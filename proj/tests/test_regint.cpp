#include "divflow/regint.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>

using namespace divflow;
using namespace testutil;

namespace {

ParamSymbol one_over_one_plus_mu2() { return rational_symbol({1.0}, {1.0, 0.0, 1.0}); }

// mu (1 + mu^2)^{-1/2}, p = 1
ParamSymbol stokes_example()
{
    return sym_mul(coordinate_symbol(1, 0), radial_power_symbol(1, m1(1.0), -0.5));
}

} // namespace

TEST_CASE("tail constant term examples")
{
    for (int p = 1; p <= 3; ++p) CHECK(std::abs(tail_constant_term(-p, 0, 1.7, 1.0, p)) == 0.0);
    CHECK(std::abs(tail_constant_term(0.0, 0, 2.0, 1.0, 1) - (-2.0)) < 1e-15);
    CHECK(std::abs(tail_constant_term(-2.0, 0, 2.0, 1.0, 1) - 2.0) < 1e-15);
}

TEST_CASE("tail constant terms with log powers match the hand antiderivative")
{
    // int r^{beta-1} log r dr = r^beta (log r / beta - 1/beta^2); log^2: r^beta (L^2/b - 2L/b^2 + 2/b^3)
    const double r0 = 2.5, beta = -1.5, L = std::log(r0);
    const double f1 = std::pow(r0, beta) * (L / beta - 1.0 / (beta * beta));
    const double f2 = std::pow(r0, beta) * (L * L / beta - 2.0 * L / (beta * beta) + 2.0 / (beta * beta * beta));
    CHECK(std::abs(tail_constant_term(beta - 2.0, 1, 1.0, r0, 2) + f1) < 1e-14);
    CHECK(std::abs(tail_constant_term(beta - 2.0, 2, 1.0, r0, 2) + f2) < 1e-14);
    // beta = 0: log^{l+1}/(l+1)
    CHECK(std::abs(tail_constant_term(-3.0, 2, 1.0, r0, 3) + L * L * L / 3.0) < 1e-14);
}

TEST_CASE("reg_integral examples")
{
    QuadConfig cfg;
    CHECK(std::abs(reg_integral(identity_symbol(1, 1), cfg)) < 1e-7);
    auto mu2 = rational_symbol({0.0, 0.0, 1.0}, {1.0, 0.0, 1.0});
    CHECK(std::abs(reg_integral(mu2, cfg) - (-kPi)) < 1e-7);
    CHECK(std::abs(reg_integral(one_over_one_plus_mu2(), cfg) - kPi) < 1e-7);
    auto f3 = radial_power_symbol(3, m1(1.0), -2.0);
    CHECK(std::abs(reg_integral(f3, cfg) - kPi * kPi) < 1e-7);
}

TEST_CASE("reg_integral rejects shallow expansions")
{
    QuadConfig cfg;
    auto shallow = custom_symbol(
        1, 1, 0.0, [](const RealVec& mu) { return m1(1.0 / (1.0 + mu.squaredNorm())); }, {}, -0.5);
    CHECK_THROWS_WITH_AS(reg_integral(shallow, cfg), doctest::Contains("insufficient expansion depth"),
                         PreconditionError);
    CHECK_THROWS_AS(reg_integral(identity_symbol(1, 2), cfg), PreconditionError);
    CHECK(reg_integral(zero_symbol(2, 1), cfg) == 0.0);
}

TEST_CASE("absolutely integrable inputs agree with an ordinary integral")
{
    QuadConfig cfg;
    // p = 2: (1 + |mu|^2)^{-3/2} integrates to 2 pi
    auto f2 = radial_power_symbol(2, m1(1.0), -1.5);
    CHECK(std::abs(reg_integral(f2, cfg) - 2.0 * kPi) / (2.0 * kPi) < 1e-7);
    // p = 1: 1/((mu - 0.3)^2 + 4) against an independent exp-sinh evaluation
    auto g = rational_symbol({1.0}, {4.09, -0.6, 1.0});
    boost::math::quadrature::exp_sinh<double> es;
    auto h = [](double x) { return 1.0 / ((x - 0.3) * (x - 0.3) + 4.0) + 1.0 / ((-x - 0.3) * (-x - 0.3) + 4.0); };
    const double oracle = es.integrate(h);
    CHECK(std::abs(reg_integral(g, cfg) - oracle) / oracle < 1e-7);
}

TEST_CASE("split radius independence")
{
    std::mt19937 rng(9);
    std::vector<ParamSymbol> fs = {
        rational_symbol({0.0, 0.0, 1.0}, {1.0, 0.0, 1.0}),
        stokes_example(),
        rational_symbol({2.0, kI, 3.0, 1.0}, {1.0, 1.0, 1.0}),
        sym_trace(radial_power_symbol(2, random_hermitian(rng, 2), 0.5)),
        radial_power_symbol(3, m1(2.0), -0.5),
    };
    for (size_t i = 0; i < fs.size(); ++i) {
        CAPTURE(i);
        QuadConfig cfg;
        cfg.split_radius = 1.0;
        const cplx base = reg_integral(fs[i], cfg);
        for (double r0 : {0.5, 2.0}) {
            cfg.split_radius = r0;
            CHECK(std::abs(reg_integral(fs[i], cfg) - base) < 1e-7);
        }
    }
}

TEST_CASE("linearity")
{
    QuadConfig cfg;
    std::mt19937 rng(13);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 4; ++trial) {
        auto a = rational_symbol({g(rng), g(rng), g(rng)}, {1.0 + std::abs(g(rng)), 0.0, 1.0});
        auto b = sym_mul(linear_symbol(1, m1(g(rng)), {m1(g(rng))}), radial_power_symbol(1, m1(1.0 + trial), -0.5));
        const cplx c1(g(rng), g(rng)), c2(g(rng), g(rng));
        const cplx lhs = reg_integral(sym_lincomb({{c1, a}, {c2, b}}), cfg);
        const cplx rhs = c1 * reg_integral(a, cfg) + c2 * reg_integral(b, cfg);
        CHECK(std::abs(lhs - rhs) < 1e-9);
    }
}

TEST_CASE("Stokes defect")
{
    QuadConfig cfg;
    CHECK(std::abs(reg_integral(sym_partial(stokes_example(), 0), cfg) - 2.0) < 1e-7);
    // Smoothing symbols satisfy Stokes.
    auto bump = bump_symbol(1, m1(1.0), 3.0, 2.0, vec({0.4}));
    CHECK(std::abs(reg_integral(sym_partial(bump, 0), cfg)) < 1e-9);
}

TEST_CASE("reg_integral_radial examples")
{
    QuadConfig cfg;
    RadialFunction f1;
    f1.g = [](double r) { return cplx(r / (1.0 + r * r)); };
    // r/(1+r^2) = r^-1 - r^-3 + r^-5 - ...
    f1.at_infinity = {{1.0, -1.0}, {-1.0, -3.0}, {1.0, -5.0}};
    f1.remainder_at_infinity = -7.0;
    CHECK(std::abs(reg_integral_radial(f1, cfg)) < 1e-7);

    RadialFunction f2;
    f2.g = [](double r) { return cplx(std::exp(-r)); };
    f2.remainder_at_infinity = kNegInf;
    CHECK(std::abs(reg_integral_radial(f2, cfg) - 1.0) < 1e-7);

    RadialFunction f3;
    f3.g = [](double r) { return cplx(r * r / std::pow(1.0 + r * r, 2)); };
    f3.at_infinity = {{1.0, -2.0}, {-2.0, -4.0}};
    f3.remainder_at_infinity = -6.0;
    CHECK(std::abs(reg_integral_radial(f3, cfg) - kPi / 4.0) < 1e-7);
}

TEST_CASE("reg_integral_radial with expansion data at zero")
{
    // g = r^{-1/2} e^{-r}: convergent, equals Gamma(1/2) = sqrt(pi)
    QuadConfig cfg;
    RadialFunction f;
    f.g = [](double r) { return cplx(std::exp(-r) / std::sqrt(r)); };
    f.at_zero = {{1.0, -0.5}, {-1.0, 0.5}};
    f.remainder_at_zero = 1.5;
    f.remainder_at_infinity = kNegInf;
    CHECK(std::abs(reg_integral_radial(f, cfg) - std::sqrt(kPi)) < 1e-7);
}
