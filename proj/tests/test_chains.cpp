#include "divflow/chains.hpp"

#include "doctest.h"
#include "test_util.hpp"

#include <cmath>

using namespace divflow;
using namespace testutil;

namespace {

using Vec = Eigen::VectorXcd;

Vec flat(const Matrix& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

Vec kron_vec(const Vec& a, const Vec& b)
{
    Vec out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

// Dense tensor of one component, letters evaluated at mu.
Vec dense(const TensorChain& c, int degree, const RealVec& mu)
{
    const Eigen::Index size = static_cast<Eigen::Index>(std::pow(c.N() * c.N(), degree + 1));
    Vec out = Vec::Zero(size);
    for (const ChainWord& w : c.component(degree)) {
        Vec t = flat(w.letters[0].eval(mu));
        for (std::size_t i = 1; i < w.letters.size(); ++i) t = kron_vec(t, flat(w.letters[i].eval(mu)));
        out += w.coef * t;
    }
    return out;
}

TensorChain random_constant_chain(std::mt19937& rng, int n, int max_degree)
{
    TensorChain c(1, n);
    std::normal_distribution<double> g;
    for (int d = 0; d <= max_degree; ++d)
        for (int r = 0; r < 2; ++r) {
            std::vector<ParamSymbol> w;
            for (int i = 0; i <= d; ++i) {
                const Matrix m = random_matrix(rng, n);
                w.push_back(constant_symbol(1, m / m.norm()));
            }
            c.add_word(cplx(g(rng), g(rng)), std::move(w));
        }
    return c;
}

// f(a_0, .., a_n) = (a_0(x_0) prod_i (a_i(x_i) - a_i(y_i)) M)_{01}: kills words
// with a constant letter in slots >= 1. Not cyclic, so commutators survive.
struct NormalizedFunctional {
    std::vector<RealVec> x, y;
    Matrix weight;
    explicit NormalizedFunctional(std::mt19937& rng, int p, int slots, int n = 2) : weight(random_matrix(rng, n))
    {
        for (int i = 0; i < slots; ++i) {
            x.push_back(random_vec(rng, p, 1.0));
            y.push_back(random_vec(rng, p, 1.0));
        }
    }
    cplx operator()(const std::vector<ParamSymbol>& w) const
    {
        Matrix m = w[0].eval(x[0]);
        for (std::size_t i = 1; i < w.size(); ++i) m = m * (w[i].eval(x[i]) - w[i].eval(y[i]));
        m = m * weight;
        return m.size() == 1 ? m(0, 0) : m(0, 1);
    }
    Cochain at(int degree) const
    {
        Cochain c;
        c.degree = degree;
        c.bulk = [this](const std::vector<ParamSymbol>& w) { return (*this)(w); };
        return c;
    }
};

// Richardson-extrapolated central difference.
template <class F>
cplx derivative(F f, double s, double h = 1e-4)
{
    const cplx d1 = (f(s + h) - f(s - h)) / (2 * h);
    const cplx d2 = (f(s + h / 2) - f(s - h / 2)) / h;
    return (4.0 * d2 - d1) / 3.0;
}

ParamSymbol winding_g(int n)
{
    ParamSymbol g = rational_symbol({cplx(0, 1), 1.0}, {cplx(0, -1), 1.0});
    if (n < 0) g = sym_inv(g);
    ParamSymbol out = scalar_constant(1, 1.0);
    for (int i = 0; i < std::abs(n); ++i) out = sym_mul(out, g);
    return out;
}

} // namespace

TEST_CASE("b and B examples")
{
    const ParamSymbol a = coordinate_symbol(1, 0);
    const ParamSymbol c = sym_add(scalar_constant(1, 2.0), coordinate_symbol(1, 0));
    TensorChain ab(1, 1);
    ab.add_word(1.0, {a, c});
    const RealVec mu = vec({0.7});
    CHECK(dense(b_chain(ab), 0, mu).norm() < 1e-15);

    Matrix e12 = Matrix::Zero(2, 2), e21 = Matrix::Zero(2, 2);
    e12(0, 1) = 1.0;
    e21(1, 0) = 1.0;
    TensorChain m(1, 2);
    m.add_word(1.0, {constant_symbol(1, e12), constant_symbol(1, e21)});
    Matrix expect = Matrix::Zero(2, 2);
    expect(0, 0) = 1.0;
    expect(1, 1) = -1.0;
    CHECK((dense(b_chain(m), 0, mu) - flat(expect)).norm() < 1e-15);

    // B(a) = 1 (x) a - a (x) 1 modulo degenerate chains; the a (x) 1 term is
    // invisible to normalized cochains and carries the sign making B^2 = 0 exact.
    TensorChain single(1, 1);
    single.add_word(1.0, {a});
    const TensorChain Ba = B_chain(single);
    Vec one = flat(m1(1.0)), av = flat(a.eval(mu));
    CHECK((dense(Ba, 1, mu) - (kron_vec(one, av) + kron_vec(av, one))).norm() < 1e-15);
    std::mt19937 rng(2);
    const RealVec x0 = vec({0.3}), x1 = vec({-1.1}), y1 = vec({0.9});
    auto normalized = [&](const std::vector<ParamSymbol>& w) {
        return (w[0].eval(x0) * (w[1].eval(x1) - w[1].eval(y1))).trace();
    };
    cplx lhs = 0.0;
    for (const ChainWord& w : Ba.component(1)) lhs += w.coef * normalized(w.letters);
    const ParamSymbol unit = identity_symbol(1, 1);
    const cplx rhs = normalized({unit, a}) - normalized({a, unit});
    CHECK(std::abs(lhs - rhs) < 1e-15);
}

TEST_CASE("mixed complex identities on constant chains")
{
    std::mt19937 rng(7);
    const TensorChain c = random_constant_chain(rng, 2, 5);
    const RealVec mu = vec({0.0});
    const TensorChain bb = b_chain(b_chain(c));
    const TensorChain BB = B_chain(B_chain(c));
    const TensorChain anti = chain_add(b_chain(B_chain(c)), B_chain(b_chain(c)));
    for (int d = 0; d <= 7; ++d) {
        INFO("degree " << d);
        CHECK(dense(bb, d, mu).norm() < 1e-12);
        CHECK(dense(BB, d, mu).norm() < 1e-12);
        CHECK(dense(anti, d, mu).norm() < 1e-12);
    }
}

TEST_CASE("Chern character components")
{
    const ParamSymbol g = winding_g(1);
    const TensorChain ch = ch_odd(g, 2);
    CHECK(ch.degrees() == std::vector<int>{1, 3, 5});
    CHECK(ch.component(1).front().coef == cplx(1.0));
    CHECK(ch.component(3).front().coef == cplx(-1.0));
    CHECK(ch.component(5).front().coef == cplx(2.0));
    CHECK(ch.component(1).front().letters[1].id() == g.id());

    const ParamSymbol h = coordinate_symbol(1, 0);
    const TensorChain sec = ch_sec_odd(g, h, 1);
    CHECK(sec.degrees() == std::vector<int>{0, 2, 4});
    const RealVec mu = vec({1.3});
    CHECK(std::abs(sec.component(0).front().letters[0].eval(mu)(0, 0) -
                   h.eval(mu)(0, 0) / g.eval(mu)(0, 0)) < 1e-14);
    CHECK(ch_sec_odd(g, zero_symbol(1, 1), 2).empty());

    const ParamSymbol h2 = rational_symbol({1.0}, {1.0, 0.0, 1.0});
    const TensorChain sec2 = ch_sec2_odd(identity_symbol(1, 1), h, h2, 0);
    CHECK(sec2.component(1).size() == 1);
    CHECK(sec2.component(1).front().coef == cplx(-1.0));
    CHECK(std::abs(sec2.component(1).front().letters[0].eval(mu)(0, 0) - 1.3) < 1e-14);

    Matrix e11 = Matrix::Zero(2, 2);
    e11(0, 0) = 1.0;
    const TensorChain che = ch_even(constant_symbol(1, e11), 2);
    CHECK(che.degrees() == std::vector<int>{0, 2, 4});
    CHECK(che.component(2).front().coef == cplx(-2.0));
    CHECK(che.component(4).front().coef == cplx(12.0));
    CHECK_THROWS_AS(ch_even(constant_symbol(1, 2.0 * e11), 1), PreconditionError);

    TensorChain two(1, 1);
    const ParamSymbol a0 = scalar_constant(1, 2.0), a1 = coordinate_symbol(1, 0);
    two.add_word(1.0, {a0, a1});
    const TensorChain io = iota(h2, two);
    REQUIRE(io.component(2).size() == 2);
    CHECK(io.component(2)[0].coef == cplx(1.0));
    CHECK(io.component(2)[0].letters[1].id() == h2.id());
    CHECK(io.component(2)[1].coef == cplx(-1.0));
    CHECK(io.component(2)[1].letters[2].id() == h2.id());
}

TEST_CASE("pairing with the character")
{
    QuadConfig cfg;
    const Cochain phi = character_cochain(1, cfg);
    CHECK(pair(phi, TensorChain(1, 1)) == cplx(0.0));
    const ParamSymbol g = winding_g(-1);
    CHECK(std::abs(pair(phi, ch_odd(g, 0)) - cplx(0, 2 * kPi)) < 1e-9);
    CHECK(std::abs(pair(phi, ch_odd(identity_symbol(1, 1), 3))) < 1e-14);
    RelativeChain empty{TensorChain(1, 1), TensorChain(1, 1)};
    CHECK(pair(phi, empty) == cplx(0.0));
}

TEST_CASE("character is a relative cocycle")
{
    QuadConfig cfg;
    std::mt19937 rng(13);
    for (int p = 1; p <= 3; ++p) {
        // Scalar letters at p = 3 keep the three-dimensional integrals cheap.
        const int n = p == 3 ? 1 : 2;
        const Cochain phi = character_cochain(p, cfg);
        auto letter = [&](double z) {
            std::vector<Matrix> a;
            for (int j = 0; j < p; ++j) a.push_back(random_matrix(rng, n));
            const Matrix m0 = random_matrix(rng, n);
            // Keep D away from singular so the integrands stay smooth near mu = 0.
            Matrix d = random_hermitian(rng, n);
            while (Eigen::SelfAdjointEigenSolver<Matrix>(d).eigenvalues().cwiseAbs().minCoeff() < 0.3)
                d = random_hermitian(rng, n);
            return sym_mul(linear_symbol(p, m0, a), radial_power_symbol(p, d, z));
        };
        // b phi = 0 on words of p + 2 letters.
        TensorChain longer(p, n);
        std::vector<ParamSymbol> w;
        for (int i = 0; i < p + 2; ++i) w.push_back(letter(i == 0 ? -1.0 : -0.5));
        longer.add_word(1.0, w);
        const cplx bphi = pair(phi, b_chain(longer));
        INFO("p=" << p << " b phi=" << bphi);
        CHECK(std::abs(bphi) < 1e-6);

        // B phi = sigma^* psi on words of p letters.
        TensorChain shorter(p, n);
        std::vector<ParamSymbol> v;
        for (int i = 0; i < p; ++i) v.push_back(letter(-0.5));
        shorter.add_word(1.0, v);
        const cplx Bphi = pair(phi, B_chain(shorter));
        std::vector<ParamSymbol> classes;
        for (const ParamSymbol& a : v) classes.push_back(symbol_class(a));
        const cplx psi = phi.boundary(classes);
        INFO("B phi=" << Bphi << " psi=" << psi);
        CHECK(std::abs(Bphi - psi) < 1e-6 * (1.0 + std::abs(psi)));
    }
}

TEST_CASE("odd transgression")
{
    std::mt19937 rng(17);
    const int n = 2;
    const Matrix a0 = Matrix::Identity(n, n) + 0.3 * random_matrix(rng, n);
    const Matrix a1 = 0.4 * random_matrix(rng, n);
    const Matrix a2 = 0.2 * random_matrix(rng, n);
    const Matrix a3 = 0.3 * random_matrix(rng, n);
    auto g = [&](double s) { return linear_symbol(1, a0 + s * a1 + s * s * a3, {a2}); };
    auto gdot = [&](double s) { return linear_symbol(1, a1 + 2 * s * a3, {Matrix::Zero(n, n)}); };
    const int K = 2;
    const NormalizedFunctional f(rng, 1, 2 * K + 2);
    const double s0 = 0.35;
    for (int d = 1; d <= 2 * K + 1; d += 2) {
        const Cochain c = f.at(d);
        const cplx lhs = derivative([&](double s) { return pair(c, ch_odd(g(s), K)); }, s0);
        const TensorChain sec = ch_sec_odd(g(s0), gdot(s0), K);
        const cplx rhs = pair(c, chain_add(b_chain(sec), B_chain(sec)));
        INFO("degree " << d << " lhs=" << lhs << " rhs=" << rhs);
        CHECK(std::abs(lhs - rhs) < 1e-4 * std::abs(rhs));
    }

    // Same identity against the character, p = 1: d/ds phi(g^-1, g) = psi(g^-1 g').
    QuadConfig cfg;
    const ParamSymbol fsym = sym_mul(coordinate_symbol(1, 0), radial_power_symbol(1, m1(1.0), -0.5));
    auto gs = [&](double s) { return sym_add(scalar_constant(1, 1.0), sym_scale(s, fsym)); };
    const double s1 = 0.4;
    const Cochain phi = character_cochain(1, cfg);
    const cplx lhs = derivative([&](double s) { return pair(phi, ch_odd(gs(s), 0)); }, s1);
    const TensorChain sec = ch_sec_odd(gs(s1), fsym, 0);
    RelativeChain rel{chain_add(b_chain(sec), B_chain(sec)), TensorChain(1, 1)};
    const cplx exact = 1.0 / (1.0 + s1) + 1.0 / (1.0 - s1);
    CHECK(std::abs(lhs - exact) < 1e-6);
    CHECK(std::abs(pair(phi, rel) - exact) < 1e-8);
    CHECK(std::abs(phi.boundary({sym_mul(sym_inv(gs(s1)), fsym)}) - exact) < 1e-10);
}

TEST_CASE("secondary transgression")
{
    std::mt19937 rng(19);
    {
        const int n = 2;
        const Matrix a0 = Matrix::Identity(n, n) + 0.3 * random_matrix(rng, n);
        const Matrix a1 = 0.4 * random_matrix(rng, n), a2 = 0.4 * random_matrix(rng, n);
        const Matrix a3 = 0.3 * random_matrix(rng, n), a4 = 0.3 * random_matrix(rng, n);
        auto g = [&](double s, double t) { return linear_symbol(1, a0 + s * a1 + t * a2 + s * t * a3, {a4}); };
        auto gs = [&](double, double t) { return constant_symbol(1, a1 + t * a3); };
        auto gt = [&](double s, double) { return constant_symbol(1, a2 + s * a3); };
        const int K = 1;
        const NormalizedFunctional f(rng, 1, 2 * K + 4);
        const double s0 = 0.3, t0 = 0.6;
        for (int d = 2; d <= 2 * K + 2; d += 2) {
            const Cochain c = f.at(d);
            const cplx ds = derivative([&](double s) { return pair(c, ch_sec_odd(g(s, t0), gt(s, t0), K)); }, s0);
            const cplx dt = derivative([&](double t) { return pair(c, ch_sec_odd(g(s0, t), gs(s0, t), K)); }, t0);
            const TensorChain sec2 = ch_sec2_odd(g(s0, t0), gs(s0, t0), gt(s0, t0), K);
            const cplx rhs = pair(c, chain_add(b_chain(sec2), B_chain(sec2)));
            INFO("degree " << d << " lhs=" << ds - dt << " rhs=" << rhs);
            CHECK(std::abs(ds - dt - rhs) < 1e-3 * std::abs(rhs));
        }
    }
    {
        // Scalar p = 2 family against the (cyclic) character phi_2.
        QuadConfig cfg;
        const ParamSymbol w = radial_power_symbol(2, m1(1.0), -0.5);
        const ParamSymbol f1 = sym_scale(0.3, sym_mul(coordinate_symbol(2, 0), w));
        const ParamSymbol f2 = sym_scale(0.3, sym_mul(coordinate_symbol(2, 1), w));
        const ParamSymbol f3 = sym_scale(0.2, sym_mul(sym_add(coordinate_symbol(2, 0), scalar_constant(2, 0.5)), w));
        const ParamSymbol one = scalar_constant(2, 1.0);
        auto g = [&](double s, double t) {
            return sym_lincomb({{1.0, one}, {s, f1}, {t, f2}, {s * t, f3}});
        };
        auto gs = [&](double, double t) { return sym_lincomb({{1.0, f1}, {t, f3}}); };
        auto gt = [&](double s, double) { return sym_lincomb({{1.0, f2}, {s, f3}}); };
        const Cochain phi = character_cochain(2, cfg);
        const double s0 = 0.4, t0 = 0.7, h = 1e-3;
        const cplx ds = derivative([&](double s) { return pair(phi, ch_sec_odd(g(s, t0), gt(s, t0), 0)); }, s0, h);
        const cplx dt = derivative([&](double t) { return pair(phi, ch_sec_odd(g(s0, t), gs(s0, t), 0)); }, t0, h);
        const TensorChain sec2 = ch_sec2_odd(g(s0, t0), gs(s0, t0), gt(s0, t0), 0);
        const cplx rhs = pair(phi, chain_add(b_chain(sec2), B_chain(sec2)));
        INFO("scalar p=2 lhs=" << ds - dt << " rhs=" << rhs);
        CHECK(std::abs(rhs) > 1e-3);
        CHECK(std::abs(ds - dt - rhs) < 1e-3 * std::abs(rhs));
    }
}

TEST_CASE("even transgression")
{
    // e_s(mu) = (1 + n.sigma) / 2 with a unit vector n(s, mu) that leaves every
    // plane, so traces of products of projections do not degenerate.
    auto angles = [](double s, double mu) {
        const double a = 0.4 + s * (1 + 0.5 / (1 + mu * mu)) + 0.7 * mu / (1 + mu * mu);
        const double b = 0.3 + 0.8 * s + 0.6 * mu / (1 + mu * mu);
        return std::pair{a, b};
    };
    auto bloch = [](double a, double b, double da, double db, bool derivative) {
        const double x = std::sin(a) * std::cos(b), y = std::sin(a) * std::sin(b), z = std::cos(a);
        const double dx = std::cos(a) * std::cos(b) * da - std::sin(a) * std::sin(b) * db;
        const double dy = std::cos(a) * std::sin(b) * da + std::sin(a) * std::cos(b) * db;
        const double dz = -std::sin(a) * da;
        Matrix m(2, 2);
        if (derivative)
            m << 0.5 * dz, 0.5 * cplx(dx, -dy), 0.5 * cplx(dx, dy), -0.5 * dz;
        else
            m << 0.5 * (1 + z), 0.5 * cplx(x, -y), 0.5 * cplx(x, y), 0.5 * (1 - z);
        return m;
    };
    auto e = [&](double s) {
        return custom_symbol(1, 2, 0.0, [=](const RealVec& mu) {
            const auto [a, b] = angles(s, mu(0));
            return bloch(a, b, 0, 0, false);
        }, {}, 0.0);
    };
    auto edot = [&](double s) {
        return custom_symbol(1, 2, 0.0, [=](const RealVec& mu) {
            const auto [a, b] = angles(s, mu(0));
            return bloch(a, b, 1 + 0.5 / (1 + mu(0) * mu(0)), 0.8, true);
        }, {}, 0.0);
    };
    std::mt19937 rng(23);
    const int K = 2;
    const NormalizedFunctional f(rng, 1, 2 * K + 2);
    const double s0 = 0.45;
    const ParamSymbol one = identity_symbol(1, 2);
    const ParamSymbol h = sym_mul(sym_sub(sym_scale(2.0, e(s0)), one), edot(s0));
    const TensorChain sec = ch_sec_even(e(s0), h, K);
    for (int d = 0; d <= 2 * K; d += 2) {
        const Cochain c = f.at(d);
        const cplx lhs = derivative([&](double s) { return pair(c, ch_even(e(s), K)); }, s0);
        CHECK(std::abs(lhs) > 1e-6);
        const cplx rhs = pair(c, chain_add(b_chain(sec), B_chain(sec)));
        INFO("degree " << d << " lhs=" << lhs << " rhs=" << rhs);
        CHECK(std::abs(lhs - rhs) < 1e-4 * std::abs(rhs));
    }
}

TEST_CASE("relative Chern character of paths")
{
    QuadConfig cfg;
    const Cochain phi = character_cochain(1, cfg);

    const ParamSymbol a = sym_add(scalar_constant(1, 2.0), rational_symbol({1.0}, {1.0, 0.0, 1.0}));
    const SymbolPath constant = make_path(1, 1, [a](double) { return a; },
                                          [](double) { return zero_symbol(1, 1); });
    const RelativeChain rc = relative_ch_path(constant, 0, 16);
    CHECK(rc.boundary.empty());
    CHECK(std::abs(pair(phi, rc)) < 1e-12);

    const ParamSymbol g = winding_g(1);
    const ParamSymbol bump = bump_symbol(1, m1(1.0), 0.5, 2.0, vec({0.3}));
    const SymbolPath smoothing = make_path(1, 1, [=](double s) { return sym_add(g, sym_scale(s, sym_mul(g, bump))); },
                                           [=](double) { return sym_mul(g, bump); });
    CHECK(relative_ch_path(smoothing, 1, 16).boundary.empty());

    for (int n : {1, -2}) {
        const ParamSymbol gn = winding_g(n);
        const ParamSymbol one = scalar_constant(1, 1.0);
        const ParamSymbol diff = sym_sub(gn, one);
        const SymbolPath wind = make_path(1, 1, [=](double s) { return sym_add(one, sym_scale(s, diff)); },
                                          [=](double) { return diff; });
        const cplx v = pair(phi, relative_ch_path(wind, 0, 16));
        INFO("n=" << n << " pairing=" << v);
        CHECK(std::abs(v - cplx(0, -2 * kPi) * double(n)) < 1e-8);
    }

    // Suspension 2s - 1 - i mu: endpoints -i pi and i pi, boundary term 0.
    const SymbolPath susp = make_path(1, 1, [](double s) { return rational_symbol({2 * s - 1, cplx(0, -1)}, {1.0}); });
    const RelativeChain sc = relative_ch_path(susp, 0, 16);
    CHECK(std::abs(pair(phi, sc) - cplx(0, -2 * kPi)) < 1e-8);
    CHECK(std::abs(pair(phi, RelativeChain{TensorChain(1, 1), sc.boundary})) < 1e-10);

    const SymbolPath bad = make_path(1, 1, [](double s) { return rational_symbol({s - 0.0, cplx(0, -1)}, {1.0}); });
    CHECK_THROWS_AS(relative_ch_path(bad, 0, 16), PreconditionError);
}
