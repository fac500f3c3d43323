#include "divflow/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace divflow {

void QuadConfig::validate() const
{
    if (!(split_radius > 0)) throw PreconditionError("QuadConfig: split_radius must be positive");
    if (!(radial_tol > 0) || !(tail_tol > 0) || !(path_tol > 0))
        throw PreconditionError("QuadConfig: tolerances must be positive");
    if (sphere_nodes_2d < 4 || sphere_nodes_2d % 2 != 0 || sphere_phi_3d < 4 || sphere_phi_3d % 2 != 0)
        throw PreconditionError("QuadConfig: trapezoid node counts must be even and >= 4");
    if (sphere_gauss_3d != 8 && sphere_gauss_3d != 16 && sphere_gauss_3d != 24 && sphere_gauss_3d != 32)
        throw PreconditionError("QuadConfig: sphere_gauss_3d must be 8, 16, 24 or 32");
    if (path_nodes < 8 || path_nodes % 8 != 0) throw PreconditionError("QuadConfig: path_nodes must be a multiple of 8");
    if (expansion_depth < 0) throw PreconditionError("QuadConfig: expansion_depth must be nonnegative");
}

namespace {

template <unsigned N>
std::vector<std::pair<double, double>> legendre_rule()
{
    using rule = boost::math::quadrature::gauss<double, N>;
    std::vector<std::pair<double, double>> out;
    const auto& x = rule::abscissa();
    const auto& w = rule::weights();
    for (size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) {
            out.emplace_back(0.0, w[i]);
        } else {
            out.emplace_back(-x[i], w[i]);
            out.emplace_back(x[i], w[i]);
        }
    }
    return out;
}

std::vector<std::pair<double, double>> legendre(int n)
{
    switch (n) {
    case 8: return legendre_rule<8>();
    case 16: return legendre_rule<16>();
    case 24: return legendre_rule<24>();
    case 32: return legendre_rule<32>();
    default: throw PreconditionError("unsupported Gauss-Legendre order");
    }
}

} // namespace

SphereRule sphere_rule(int p, const QuadConfig& cfg)
{
    SphereRule s;
    s.p = p;
    if (p == 1) {
        s.nodes = {RealVec::Constant(1, 1.0), RealVec::Constant(1, -1.0)};
        s.weights = {1.0, 1.0};
    } else if (p == 2) {
        const int n = cfg.sphere_nodes_2d;
        for (int i = 0; i < n; ++i) {
            const double t = 2.0 * kPi * (i + 0.5) / n;
            RealVec w(2);
            w << std::cos(t), std::sin(t);
            s.nodes.push_back(w);
            s.weights.push_back(2.0 * kPi / n);
        }
    } else if (p == 3) {
        const int nphi = cfg.sphere_phi_3d;
        for (const auto& [z, wz] : legendre(cfg.sphere_gauss_3d)) {
            const double rho = std::sqrt(1.0 - z * z);
            for (int i = 0; i < nphi; ++i) {
                const double t = 2.0 * kPi * (i + 0.5) / nphi;
                RealVec w(3);
                w << rho * std::cos(t), rho * std::sin(t), z;
                s.nodes.push_back(w);
                s.weights.push_back(wz * 2.0 * kPi / nphi);
            }
        }
    } else {
        throw PreconditionError("sphere_rule: only p <= 3 is supported");
    }
    return s;
}

namespace {

struct Panel {
    double a, b;
    cplx value;
    double err, l1;
    bool operator<(const Panel& o) const { return err < o.err; }
};

Panel gk_panel(const std::function<cplx(double)>& f, double a, double b)
{
    Panel p{a, b, 0.0, 0.0, 0.0};
    p.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &p.err, &p.l1);
    return p;
}

} // namespace

// Globally adaptive: bisect the panel with the largest error estimate until
// the total error is below max(abs_tol, radial_tol |I|, roundoff floor).
cplx integrate_interval(const std::function<cplx(double)>& f, double a, double b, const QuadConfig& cfg,
                        double abs_tol)
{
    std::priority_queue<Panel> heap;
    heap.push(gk_panel(f, a, b));
    cplx total = heap.top().value;
    double err = heap.top().err, l1 = heap.top().l1;
    const int max_panels = 1 << cfg.radial_max_depth;
    for (int panels = 1;; ++panels) {
        if (!std::isfinite(total.real()) || !std::isfinite(total.imag()))
            throw ConvergenceError("radial quadrature produced a non-finite value");
        const double floor = 100.0 * std::numeric_limits<double>::epsilon() * l1;
        if (err <= std::max({abs_tol, cfg.radial_tol * std::abs(total), floor})) return total;
        if (panels >= max_panels)
            throw ConvergenceError("radial quadrature did not converge (error estimate " + std::to_string(err) + ")");
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Panel left = gk_panel(f, worst.a, mid), right = gk_panel(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        l1 += left.l1 + right.l1 - worst.l1;
        heap.push(left);
        heap.push(right);
    }
}

cplx integrate_to_infinity(const std::function<cplx(double)>& f, double a, const QuadConfig& cfg,
                           const std::function<double(double)>& magnitude)
{
    cplx total = 0.0;
    double r = a;
    int quiet = 0;
    for (int shell = 0; shell < cfg.max_shells; ++shell) {
        double floor = 0.0;
        if (magnitude) floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(magnitude(r), magnitude(2.0 * r)) * r;
        const cplx inc = integrate_interval(f, r, 2.0 * r, cfg, std::max(0.1 * cfg.tail_tol, floor));
        total += inc;
        if (std::abs(inc) < std::max(cfg.tail_tol, floor)) {
            if (++quiet >= 2) return total;
        } else {
            quiet = 0;
        }
        r *= 2.0;
    }
    throw ConvergenceError("remainder tail did not converge within max_shells");
}

std::vector<std::pair<double, double>> composite_gauss(double a, double b, int nodes)
{
    const auto base = legendre(8);
    const int panels = std::max(1, nodes / 8);
    const double h = (b - a) / panels;
    std::vector<std::pair<double, double>> out;
    for (int k = 0; k < panels; ++k) {
        const double mid = a + (k + 0.5) * h;
        for (const auto& [x, w] : base) out.emplace_back(mid + 0.5 * h * x, 0.5 * h * w);
    }
    return out;
}

} // namespace divflow
