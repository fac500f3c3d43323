// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "divflow/chains.hpp"
#include "divflow/flows.hpp"
#include "divflow/regint.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace divflow;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void criterion(int id, const char* name, const std::function<void(Outcome&)>& body)
{
    Outcome o;
    const auto t0 = Clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    failures += !o.pass;
    std::printf("%s %2d %-28s %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.str().c_str(), secs);
    std::fflush(stdout);
}

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Matrix m1(cplx v) { return Matrix::Constant(1, 1, v); }

Matrix diag(const std::vector<double>& xs)
{
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = xs[i];
    return m;
}

Matrix random_matrix(std::mt19937& rng, int n)
{
    std::normal_distribution<double> g;
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
    return m;
}

// (1/(-2 pi i)) int g^{-1} g' dmu by plain quadrature, g' by central differences.
cplx winding_oracle(const ParamSymbol& g, const QuadConfig& cfg)
{
    auto f = [&](const RealVec& mu) {
        const double h = 1e-4 * (1.0 + std::abs(mu(0)));
        const RealVec a = RealVec::Constant(1, mu(0) + h), b = RealVec::Constant(1, mu(0) - h);
        return (g.eval(mu).inverse() * ((g.eval(a) - g.eval(b)) / (2 * h))).trace();
    };
    return plain_integral(f, 1, cfg) / cplx(0.0, -2.0 * kPi);
}

template <class F>
cplx richardson(F f, double s, double h = 1e-4)
{
    const cplx d1 = (f(s + h) - f(s - h)) / (2 * h);
    const cplx d2 = (f(s + h / 2) - f(s - h / 2)) / h;
    return (4.0 * d2 - d1) / 3.0;
}

SymbolPath turning_path()
{
    const ParamSymbol mu = coordinate_symbol(1, 0);
    const ParamSymbol r = radial_power_symbol(1, m1(1.0), 0.5);
    return make_path(
        1, 1, [=](double s) { return sym_lincomb({{1.0, mu}, {cplx(0.0, 2 * s - 1), r}}); },
        [=](double) { return sym_scale(cplx(0.0, 2.0), r); });
}

double max_dense(const TensorChain& c, int max_degree)
{
    double out = 0.0;
    const RealVec mu = RealVec::Zero(c.p());
    for (int d = 0; d <= max_degree; ++d) {
        Eigen::VectorXcd acc;
        for (const ChainWord& w : c.component(d)) {
            Eigen::VectorXcd t(1);
            t(0) = w.coef;
            for (const ParamSymbol& letter : w.letters) {
                const Matrix m = letter.eval(mu);
                const Eigen::Map<const Eigen::VectorXcd> v(m.data(), m.size());
                Eigen::VectorXcd next(t.size() * v.size());
                for (Eigen::Index k = 0; k < t.size(); ++k) next.segment(k * v.size(), v.size()) = t(k) * v;
                t = next;
            }
            if (acc.size() == 0) acc = Eigen::VectorXcd::Zero(t.size());
            acc += t;
        }
        if (acc.size()) out = std::max(out, acc.norm());
    }
    return out;
}

} // namespace

int main()
{
    const QuadConfig cfg;
    std::printf("divflow acceptance gate\n");

    criterion(1, "integrality", [&](Outcome& o) {
        const auto t0 = Clock::now();
        std::mt19937 rng(20261018);
        double worst = 0.0;
        int mismatched = 0;
        for (int i = 0; i < 20; ++i) {
            const WindingFamily w = random_winding_family(rng);
            const FlowResult r = divisor_flow_odd(linear_path_to(winding_matrix_symbol(w.exponents, w.v)), 0, cfg);
            worst = std::max(worst, r.residual);
            mismatched += r.snapped != w.expected();
        }
        const double t = elapsed(t0);
        o.detail << "20 families, max |DF - round| = " << worst << ", " << mismatched << " off expected";
        o.require(worst < 1e-6, "|DF - round(DF)| < 1e-6");
        o.require(mismatched == 0, "snapped DF equals the winding number");
        o.require(t < 30.0, "runtime < 30 s");
    });

    criterion(2, "winding value", [&](Outcome& o) {
        double worst = 0.0, oracle = 0.0;
        for (int n = -2; n <= 2; ++n) {
            const ParamSymbol g = winding_symbol(n);
            const FlowResult r = divisor_flow_odd(linear_path_to(g), 0, cfg);
            worst = std::max(worst, std::abs(r.value - static_cast<double>(n)));
            oracle = std::max(oracle, std::abs(r.value - winding_oracle(g, cfg)));
        }
        o.detail << "max |DF - n| = " << worst << ", max |DF - oracle| = " << oracle;
        o.require(worst < 1e-8, "|DF - n| < 1e-8");
        o.require(oracle < 1e-6, "independent oracle agrees");
    });

    criterion(3, "DF = +-SF, p = 1", [&](Outcome& o) {
        std::mt19937 rng(31);
        double worst = 0.0;
        int mismatched = 0, nonzero = 0;
        for (int i = 0; i < 10; ++i) {
            const HermitianPath d = random_hermitian_path(rng, 3);
            const int sf = spectral_flow(d);
            nonzero += sf != 0;
            for (int sign : {1, -1}) {
                const FlowResult r = divisor_flow_odd(suspend_odd(d, 1, sign), 0, cfg);
                worst = std::max(worst, r.residual);
                mismatched += r.snapped != sign * sf;
            }
        }
        o.detail << "10 paths x 2 signs (" << nonzero << " with SF != 0), max residual = " << worst;
        o.require(mismatched == 0, "snapped DF = sign * SF");
        o.require(worst < 1e-5, "residual < 1e-5");
    });

    criterion(4, "DF = SF, p = 3", [&](Outcome& o) {
        const auto t0 = Clock::now();
        const FlowResult r = divisor_flow_odd(suspend_odd(linear_crossing_path(), 3, 1), 1, cfg);
        const double t = elapsed(t0);
        o.detail << "DF = " << r.value.real() << " + " << r.value.imag() << "i, residual = " << r.residual;
        o.require(r.snapped == 1, "snapped DF = 1");
        o.require(r.residual < 1e-3, "residual < 1e-3");
        o.require(t < 120.0, "runtime < 2 min");
    });

    criterion(5, "parametric eta", [&](Outcome& o) {
        double worst[4] = {0, 0, 0, 0}, radial = 0.0;
        for (const auto& spec : std::vector<std::vector<double>>{{1}, {-2}, {1, 2, -3}}) {
            const Matrix d = diag(spec);
            for (int p = 1; p <= 3; ++p) {
                const cplx v = eta_parametric(d, p, cfg);
                worst[p] = std::max(worst[p], std::abs(v - eta_spectral(d)));
                radial = std::max(radial, std::abs(eta_parametric_radial(d, p, cfg) - v));
            }
        }
        o.detail << "max error p=1: " << worst[1] << ", p=2: " << worst[2] << ", p=3: " << worst[3]
                 << ", radial cross-check: " << radial;
        o.require(worst[1] < 1e-6, "p = 1 within 1e-6");
        o.require(worst[2] < 1e-4 && worst[3] < 1e-4, "p = 2, 3 within 1e-4");
        o.require(radial < 1e-6, "radial agrees within 1e-6");
    });

    criterion(6, "even eta", [&](Outcome& o) {
        double eta_err = 0.0, trace_err = 0.0;
        for (double sign : {1.0, -1.0}) {
            const ParamSymbol proj = idempotent_from_D(m1(sign), 1);
            eta_err = std::max(eta_err, std::abs(eta_even(proj, 1, cfg) - sign));
            trace_err = std::max(trace_err, std::abs(even_eta_trace(proj, 1, cfg) - cplx(0.0, -sign * kPi)));
        }
        o.detail << "max |eta - (+-1)| = " << eta_err << ", max |trace - (-+pi i)| = " << trace_err;
        o.require(eta_err < 1e-4, "eta within 1e-4");
        o.require(trace_err < 1e-4 * kPi, "trace within 1e-4 pi");
    });

    criterion(7, "even DF = SF", [&](Outcome& o) {
        const auto t0 = Clock::now();
        const FlowResult r = divisor_flow_even(almost_idempotent_path(linear_crossing_path(), 1), 1, cfg);
        const double t = elapsed(t0);
        o.detail << "DF = " << r.value.real() << " + " << r.value.imag() << "i, residual = " << r.residual;
        o.require(r.snapped == 1, "snapped DF = 1");
        o.require(r.residual < 1e-3, "residual < 1e-3");
        o.require(t < 180.0, "runtime < 3 min");
    });

    criterion(8, "additivity", [&](Outcome& o) {
        double worst = 0.0;
        for (const auto& [n1, n2] : std::vector<std::pair<int, int>>{{1, 1}, {1, -2}, {2, -1}}) {
            const SymbolPath f = linear_path_to(winding_symbol(n1)), g = linear_path_to(winding_symbol(n2));
            const cplx fg = divisor_flow_odd(product_path(f, g), 0, cfg).value;
            const cplx sum = divisor_flow_odd(f, 0, cfg).value + divisor_flow_odd(g, 0, cfg).value;
            worst = std::max(worst, std::abs(fg - sum));
        }
        o.detail << "max |DF(fg) - DF(f) - DF(g)| = " << worst;
        o.require(worst < 1e-6, "tol 1e-6");
    });

    criterion(9, "cyclic identities", [&](Outcome& o) {
        std::mt19937 rng(9);
        std::normal_distribution<double> gauss;
        TensorChain c(1, 2);
        for (int d = 0; d <= 5; ++d)
            for (int r = 0; r < 2; ++r) {
                std::vector<ParamSymbol> w;
                for (int i = 0; i <= d; ++i) {
                    const Matrix m = random_matrix(rng, 2);
                    w.push_back(constant_symbol(1, m / m.norm()));
                }
                c.add_word(cplx(gauss(rng), gauss(rng)), w);
            }
        const double bb = max_dense(b_chain(b_chain(c)), 7);
        const double BB = max_dense(B_chain(B_chain(c)), 7);
        const double anti = max_dense(chain_add(b_chain(B_chain(c)), B_chain(b_chain(c))), 7);
        o.require(std::max({bb, BB, anti}) < 1e-12, "b^2, B^2, bB + Bb below 1e-12");

        // Character of the p = 1 relative cycle on an elliptic 2x2 family.
        const Cochain phi = character_cochain(1, cfg);
        const ParamSymbol w = radial_power_symbol(1, m1(1.0), -0.5);
        const Matrix a0 = 0.3 * random_matrix(rng, 2), a1 = 0.3 * random_matrix(rng, 2);
        const ParamSymbol f = sym_mul(linear_symbol(1, a0, {a1}), sym_mul(identity_symbol(1, 2), w));
        auto g = [&](double s) { return sym_add(identity_symbol(1, 2), sym_scale(s, f)); };
        const ParamSymbol g0 = g(0.5), g0inv = sym_inv(g0);
        TensorChain three(1, 2);
        three.add_word(1.0, {g0inv, g0, g0inv});
        const double bphi = std::abs(pair(phi, b_chain(three)));
        TensorChain one(1, 2);
        one.add_word(1.0, {g0});
        const cplx lhs_b = pair(phi, B_chain(one)), rhs_b = phi.boundary({symbol_class(g0)});
        const double Bphi = std::abs(lhs_b - rhs_b);
        o.require(bphi < 1e-6, "b phi_1 = 0");
        o.require(Bphi < 1e-6, "B phi_1 = sigma* psi_0");

        // Transgression: d/ds <phi, ch(g_s)> against <phi, (b + B) /ch(g_s, g_s')>.
        const double s0 = 0.4;
        const cplx fd = richardson([&](double s) { return pair(phi, ch_odd(g(s), 0)); }, s0);
        const TensorChain sec = ch_sec_odd(g(s0), f, 0);
        const cplx rhs = pair(phi, RelativeChain{chain_add(b_chain(sec), B_chain(sec)), TensorChain(1, 2)});
        const double trans = std::abs(fd - rhs) / std::max(std::abs(rhs), 1e-300);
        o.require(std::abs(rhs) > 1e-3, "transgression test is not degenerate");
        o.require(trans < 1e-4, "transgression rel tol 1e-4");

        // Pairing with the relative Chern character against the direct formula.
        std::vector<SymbolPath> families = {linear_path_to(winding_symbol(1)), linear_path_to(winding_symbol(-2)),
                                            suspend_odd(linear_crossing_path(), 1, 1), turning_path()};
        std::mt19937 prng(90);
        families.push_back(suspend_odd(random_hermitian_path(prng, 2), 1, -1));
        double oracle = 0.0;
        for (const SymbolPath& path : families)
            oracle = std::max(oracle, std::abs(df_via_pairing(path, 0, cfg) - divisor_flow_odd(path, 0, cfg).value));
        o.require(oracle < 1e-6, "pairing = DF within 1e-6 on 5 families");
        o.detail << "b^2 " << bb << ", B^2 " << BB << ", bB+Bb " << anti << "; b phi " << bphi << ", B phi - psi "
                 << Bphi << "; transgression rel " << trans << "; pairing vs DF " << oracle;
    });

    criterion(10, "regularized integrals", [&](Outcome& o) {
        const ParamSymbol mu2 = rational_symbol({0.0, 0.0, 1.0}, {1.0, 0.0, 1.0});
        const cplx base = reg_integral(mu2, cfg);
        double worst = 0.0;
        worst = std::max(worst, std::abs(reg_integral(identity_symbol(1, 1), cfg)));
        worst = std::max(worst, std::abs(base + kPi));
        worst = std::max(worst, std::abs(reg_integral(rational_symbol({1.0}, {1.0, 0.0, 1.0}), cfg) - kPi));
        worst = std::max(worst, std::abs(reg_integral(radial_power_symbol(3, m1(1.0), -2.0), cfg) - kPi * kPi));

        double radial = 0.0;
        RadialFunction f1;
        f1.g = [](double r) { return cplx(r / (1.0 + r * r)); };
        f1.at_infinity = {{1.0, -1.0}, {-1.0, -3.0}, {1.0, -5.0}};
        f1.remainder_at_infinity = -7.0;
        radial = std::max(radial, std::abs(reg_integral_radial(f1, cfg)));
        RadialFunction f2;
        f2.g = [](double r) { return cplx(std::exp(-r)); };
        radial = std::max(radial, std::abs(reg_integral_radial(f2, cfg) - 1.0));
        RadialFunction f3;
        f3.g = [](double r) { return cplx(r * r / std::pow(1.0 + r * r, 2)); };
        f3.at_infinity = {{1.0, -2.0}, {-2.0, -4.0}};
        f3.remainder_at_infinity = -6.0;
        radial = std::max(radial, std::abs(reg_integral_radial(f3, cfg) - kPi / 4));

        double spread = 0.0;
        for (double r0 : {0.5, 2.0}) {
            QuadConfig c = cfg;
            c.split_radius = r0;
            spread = std::max(spread, std::abs(reg_integral(mu2, c) - base));
            spread = std::max(spread, std::abs(reg_integral(radial_power_symbol(3, m1(1.0), -2.0), c) - kPi * kPi));
        }
        const ParamSymbol h = sym_mul(coordinate_symbol(1, 0), radial_power_symbol(1, m1(1.0), -0.5));
        const double stokes = std::abs(reg_integral(sym_partial(h, 0), cfg) - 2.0);
        o.detail << "examples " << worst << ", radial " << radial << ", R0 spread " << spread << ", Stokes defect "
                 << stokes;
        o.require(worst < 1e-7, "four examples within 1e-7");
        o.require(radial < 1e-7, "three radial examples within 1e-7");
        o.require(spread < 1e-7, "R0 independence within 1e-7");
        o.require(stokes < 1e-7, "Stokes defect = 2 within 1e-7");
    });

    std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
