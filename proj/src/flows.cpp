#include "divflow/flows.hpp"

#include "divflow/forms.hpp"
#include "divflow/regint.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace divflow {

namespace {

double factorial(int k) { return std::tgamma(k + 1.0); }

double min_abs(const RealVec& v) { return v.size() ? v.cwiseAbs().minCoeff() : kPosInf; }

int count_negative(const RealVec& v)
{
    int n = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) n += v(i) < 0.0;
    return n;
}

void require_invertible(const Matrix& d, const char* op)
{
    if (min_abs(hermitian_eigenvalues(d)) <= 1e-10) throw PreconditionError(std::string(op) + ": D is singular");
}

Matrix identity(Eigen::Index n) { return Matrix::Identity(n, n); }

// (omega)^{q} for a 1-form omega.
OperatorForm wedge_power(const OperatorForm& omega, int q, const OperatorForm& start)
{
    OperatorForm out = start;
    for (int i = 0; i < q; ++i) out = wedge(out, omega);
    return out;
}

// Composite Gauss in s, doubled until two successive values differ by less than path_tol.
cplx integrate_path(const SymbolPath& path, const QuadConfig& cfg, const std::function<cplx(double)>& integrand,
                    std::map<std::string, double>& diagnostics)
{
    auto apply = [&](int n) {
        cplx total = 0.0;
        for (const auto& [s, w] : path_rule(path, n)) total += w * integrand(s);
        return total;
    };
    int n = cfg.path_nodes;
    cplx value = apply(n);
    for (int d = 0; d < cfg.path_max_doublings; ++d) {
        n *= 2;
        const cplx next = apply(n);
        const double change = std::abs(next - value);
        value = next;
        if (change < cfg.path_tol) {
            diagnostics["path_nodes"] = n;
            diagnostics["path_change"] = change;
            return value;
        }
    }
    throw ConvergenceError("path quadrature did not converge after " + std::to_string(cfg.path_max_doublings) +
                           " doublings");
}

void check_idempotent_values(const ParamSymbol& f, const char* where)
{
    for (double r : {0.0, 0.5, 2.0}) {
        for (const RealVec& w : sphere_samples(f.p())) {
            const Matrix v = f.eval(r * w);
            const double res = (v * v - v).norm();
            if (res > 1e-6)
                throw PreconditionError(std::string(where) + " is not idempotent (|f^2 - f| = " + std::to_string(res) +
                                        " at |mu| = " + std::to_string(r) + ")");
        }
    }
}

void check_idempotent_class(const ParamSymbol& f, double s)
{
    const ParamSymbol c = symbol_class(f);
    const Expansion e = sym_sub(sym_mul(c, c), c).expansion(-f.p() - 1.5);
    for (const HomogTerm& t : e.terms)
        for (const RealVec& w : sphere_samples(f.p()))
            if (t.eval(w).norm() > 1e-6)
                throw PreconditionError("leading part is not idempotent at s = " + std::to_string(s));
}

Matrix random_complex(std::mt19937& rng, int n)
{
    std::normal_distribution<double> g;
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
    return m;
}

Matrix random_hermitian_matrix(std::mt19937& rng, int n)
{
    const Matrix m = random_complex(rng, n);
    return 0.5 * (m + m.adjoint());
}

} // namespace

HermitianPath::HermitianPath(std::vector<double> s, std::vector<Matrix> h) : s_(std::move(s)), h_(std::move(h))
{
    if (s_.size() != h_.size() || s_.size() < 2)
        throw PreconditionError("HermitianPath: need at least two knots with one matrix each");
    if (s_.front() != 0.0 || s_.back() != 1.0) throw PreconditionError("HermitianPath: knots must start at 0 and end at 1");
    for (std::size_t i = 1; i < s_.size(); ++i)
        if (!(s_[i] > s_[i - 1])) throw PreconditionError("HermitianPath: knots must be strictly increasing");
    n_ = static_cast<int>(h_.front().rows());
    for (const Matrix& m : h_) {
        if (m.rows() != n_ || m.cols() != n_ || n_ == 0)
            throw PreconditionError("HermitianPath: matrices must be square of a common size");
        if ((m - m.adjoint()).norm() >= 1e-12) throw PreconditionError("HermitianPath: matrix is not Hermitian");
    }
    for (const Matrix* m : {&h_.front(), &h_.back()})
        if (min_abs(hermitian_eigenvalues(*m)) <= 1e-8)
            throw PreconditionError("HermitianPath: endpoint matrix is not invertible");
}

std::size_t HermitianPath::piece(double s) const
{
    if (s < 0.0 || s > 1.0) throw PreconditionError("HermitianPath: s outside [0, 1]");
    const auto it = std::upper_bound(s_.begin(), s_.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - s_.begin());
    return std::min(i == 0 ? 0 : i - 1, s_.size() - 2);
}

Matrix HermitianPath::at(double s) const
{
    const std::size_t i = piece(s);
    const double t = (s - s_[i]) / (s_[i + 1] - s_[i]);
    return (1.0 - t) * h_[i] + t * h_[i + 1];
}

Matrix HermitianPath::slope(double s) const
{
    const std::size_t i = piece(s);
    return (h_[i + 1] - h_[i]) / (s_[i + 1] - s_[i]);
}

std::vector<double> HermitianPath::breakpoints() const { return {s_.begin() + 1, s_.end() - 1}; }

HermitianPath linear_crossing_path(int n) { return HermitianPath({0.0, 1.0}, {-identity(n), identity(n)}); }

FlowResult make_flow_result(std::vector<FlowPart> parts, std::map<std::string, double> diagnostics)
{
    FlowResult r;
    for (const FlowPart& p : parts) r.value += p.value;
    r.snapped = static_cast<std::int64_t>(std::llround(r.value.real()));
    r.residual = std::abs(r.value - cplx(static_cast<double>(r.snapped), 0.0));
    r.parts = std::move(parts);
    r.diagnostics = std::move(diagnostics);
    return r;
}

RealVec hermitian_eigenvalues(const Matrix& d)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(d, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw ConvergenceError("Hermitian eigensolver failed");
    return es.eigenvalues();
}

namespace {

struct Sample {
    double s;
    RealVec eig;
};

SpectralFlowResult count_crossings(const HermitianPath& path, int n_s, double lipschitz)
{
    auto sample = [&](double s, double lo, double hi) {
        RealVec e = hermitian_eigenvalues(path.at(s));
        // A zero eigenvalue exactly at a sample point: move the point, not the operator.
        for (int tries = 1; min_abs(e) < 1e-12 && tries <= 8; ++tries) {
            s = std::clamp(s + (tries % 2 ? 1.0 : -1.0) * 1e-3 * tries * (hi - lo), lo, hi);
            e = hermitian_eigenvalues(path.at(s));
        }
        return Sample{s, e};
    };

    SpectralFlowResult out;
    std::vector<Sample> grid;
    grid.push_back({0.0, hermitian_eigenvalues(path.at(0.0))});
    for (int i = 1; i < n_s; ++i) {
        const double s = static_cast<double>(i) / n_s;
        grid.push_back(sample(s, (i - 0.5) / n_s, (i + 0.5) / n_s));
    }
    grid.push_back({1.0, hermitian_eigenvalues(path.at(1.0))});

    const double min_width = 1e-10;
    std::vector<std::pair<Sample, Sample>> stack;
    for (std::size_t i = grid.size() - 1; i > 0; --i) stack.emplace_back(grid[i - 1], grid[i]);
    while (!stack.empty()) {
        auto [a, b] = stack.back();
        stack.pop_back();
        const double width = b.s - a.s;
        // Weyl: each sorted eigenvalue moves by at most L |s - t|.
        // A sign change is never certified away, whatever the roundoff in the bound.
        bool certified = true;
        for (Eigen::Index i = 0; i < a.eig.size(); ++i) {
            const bool flips = (a.eig(i) < 0.0) != (b.eig(i) < 0.0);
            if (flips || std::abs(a.eig(i)) + std::abs(b.eig(i)) <= lipschitz * width + 1e-13) certified = false;
        }
        if (certified) {
            ++out.intervals;
            continue;
        }
        const int delta = count_negative(a.eig) - count_negative(b.eig);
        if (width < min_width) {
            ++out.intervals;
            for (int j = 0; j < std::abs(delta); ++j) out.crossings.push_back({0.5 * (a.s + b.s), delta > 0 ? 1 : -1});
            continue;
        }
        const Sample m = sample(0.5 * (a.s + b.s), a.s + 0.25 * width, b.s - 0.25 * width);
        stack.emplace_back(m, b);
        stack.emplace_back(a, m);
    }
    for (const Crossing& c : out.crossings) out.value += c.direction;
    return out;
}

} // namespace

SpectralFlowResult spectral_flow_details(const HermitianPath& path, int n_s)
{
    if (n_s < 1) throw PreconditionError("spectral_flow: n_s must be positive");
    for (double s : {0.0, 1.0})
        if (min_abs(hermitian_eigenvalues(path.at(s))) < 1e-10)
            throw PreconditionError("spectral_flow: eigenvalue within 1e-10 of 0 at s = " + std::to_string(s));
    double lipschitz = 0.0;
    const auto& h = path.matrices();
    const auto& s = path.knots();
    for (std::size_t i = 0; i + 1 < h.size(); ++i) {
        const RealVec e = hermitian_eigenvalues(h[i + 1] - h[i]);
        lipschitz = std::max(lipschitz, e.cwiseAbs().maxCoeff() / (s[i + 1] - s[i]));
    }
    lipschitz *= 1.0 + 1e-9;
    SpectralFlowResult coarse = count_crossings(path, n_s, lipschitz);
    const SpectralFlowResult fine = count_crossings(path, 2 * n_s, lipschitz);
    if (coarse.value != fine.value || coarse.crossings.size() != fine.crossings.size())
        throw ConvergenceError("spectral_flow: crossing counts did not stabilize under refinement");
    const RealVec e0 = hermitian_eigenvalues(path.at(0.0)), e1 = hermitian_eigenvalues(path.at(1.0));
    if (coarse.value != count_negative(e0) - count_negative(e1))
        throw ConvergenceError("spectral_flow: crossing count disagrees with the endpoint signatures");
    return coarse;
}

int spectral_flow(const HermitianPath& path, int n_s) { return spectral_flow_details(path, n_s).value; }

double eta_spectral(const Matrix& d, double tol)
{
    double eta = 0.0;
    const RealVec e = hermitian_eigenvalues(d);
    for (Eigen::Index i = 0; i < e.size(); ++i)
        if (std::abs(e(i)) > tol) eta += e(i) > 0 ? 1.0 : -1.0;
    return eta;
}

double eta_reduced(const Matrix& d, double tol)
{
    const RealVec e = hermitian_eigenvalues(d);
    double kernel = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) kernel += std::abs(e(i)) <= tol;
    return 0.5 * (eta_spectral(d, tol) + kernel);
}

cplx eta_parametric(const Matrix& d, int p, const QuadConfig& cfg)
{
    require_invertible(d, "eta_parametric");
    const double z = 0.5 * (p + 1);
    const ParamSymbol f = sym_trace(sym_mul(constant_symbol(p, d), radial_power_symbol(p, d, -z)));
    return std::tgamma(z) / std::pow(kPi, z) * reg_integral(f, cfg);
}

cplx eta_parametric_radial(const Matrix& d, int p, const QuadConfig& cfg)
{
    require_invertible(d, "eta_parametric_radial");
    const double z = 0.5 * (p + 1);
    const RealVec lambda = hermitian_eigenvalues(d);
    RadialFunction f;
    f.g = [lambda, z](double r) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < lambda.size(); ++i) s += lambda(i) * std::pow(lambda(i) * lambda(i) + r * r, -z);
        return cplx(std::pow(r, 2 * z - 2) * s, 0.0);
    };
    f.remainder_at_infinity = -2.0;
    return 2.0 * std::tgamma(z) / (std::sqrt(kPi) * std::tgamma(z - 0.5)) * reg_integral_radial(f, cfg);
}

SymbolPath suspend_odd(const HermitianPath& path, int p, int sign)
{
    if (p < 1 || p % 2 == 0) throw PreconditionError("suspend_odd: p must be odd");
    if (sign != 1 && sign != -1) throw PreconditionError("suspend_odd: sign must be +1 or -1");
    const CliffordRep rep = build_clifford(p);
    const Matrix id = identity(rep.dim());
    std::vector<Matrix> c;
    for (const Matrix& g : rep.generators) c.push_back(static_cast<double>(sign) * kron(identity(path.N()), g));
    auto family = [path, id, c, p](double s) { return linear_symbol(p, kron(path.at(s), id), c); };
    auto derivative = [path, id, p](double s) { return constant_symbol(p, kron(path.slope(s), id)); };
    return make_path(p, path.N() * rep.dim(), family, derivative, path.breakpoints());
}

ParamSymbol suspend_even(const Matrix& d, int k)
{
    if (k < 1) throw PreconditionError("suspend_even: k must be positive");
    const int p = 2 * k;
    const CliffordRep rep = build_clifford(p);
    const Matrix& gamma = *rep.grading;
    std::vector<Matrix> c;
    for (const Matrix& g : rep.generators) c.push_back(kron(identity(d.rows()), gamma * g));
    return linear_symbol(p, kron(d, gamma), c);
}

namespace {

ParamSymbol half_minus(const ParamSymbol& qinv, const ParamSymbol& d2k)
{
    const int n = d2k.N();
    return sym_lincomb({{0.5, identity_symbol(d2k.p(), n)}, {-0.5, sym_mul(qinv, d2k)}});
}

} // namespace

ParamSymbol idempotent_from_D(const Matrix& d, int k)
{
    require_invertible(d, "idempotent_from_D");
    const int p = 2 * k;
    const ParamSymbol d2k = suspend_even(d, k);
    const Matrix big = kron(d, identity(d2k.N() / d.rows()));
    return half_minus(radial_power_symbol(p, big, -0.5), d2k);
}

SymbolPath almost_idempotent_path(const HermitianPath& path, int k, const Cutoff& phi)
{
    if (k < 1) throw PreconditionError("almost_idempotent_path: k must be positive");
    const int p = 2 * k;
    const int dim = 1 << k;
    auto lift = [path, k, p, dim, phi](double s) {
        const Matrix d = path.at(s);
        return half_minus(cutoff_radial_symbol(p, kron(d, identity(dim)), phi), suspend_even(d, k));
    };
    const ParamSymbol p0 = idempotent_from_D(path.at(0.0), k), p1 = idempotent_from_D(path.at(1.0), k);
    const ParamSymbol fix0 = sym_sub(p0, lift(0.0)), fix1 = sym_sub(p1, lift(1.0));
    auto family = [lift, p0, p1, fix0, fix1](double s) {
        if (s == 0.0) return p0;
        if (s == 1.0) return p1;
        return sym_lincomb({{1.0, lift(s)}, {s, fix1}, {1.0 - s, fix0}});
    };
    return make_path(p, path.N() * dim, family, nullptr, path.breakpoints());
}

FlowResult divisor_flow_odd(const SymbolPath& path, int k, const QuadConfig& cfg)
{
    cfg.validate();
    if (k < 0 || path.p != 2 * k + 1)
        throw PreconditionError("divisor_flow_odd: path dimension p = " + std::to_string(path.p) + " is not 2k + 1");
    check_admissible(path);
    const cplx base = std::pow(cplx(0.0, -2.0 * kPi), k + 1);
    const cplx c_end = factorial(k) / (base * factorial(2 * k + 1));
    const cplx c_corr = factorial(k) / (base * factorial(2 * k));

    auto endpoint = [&](double s) {
        const ParamSymbol a = path.at(s);
        const OperatorForm omega = form_mul_symbol(sym_inv(a), ext_d(a));
        return tr_bar(wedge_power(omega, 2 * k, omega), cfg);
    };
    auto integrand = [&](double s) -> cplx {
        const ParamSymbol dot = symbol_class(path.dot(s));
        if (dot.expansion().terms.empty()) return 0.0;
        const ParamSymbol a = symbol_class(path.at(s));
        const ParamSymbol inv = sym_inv(a);
        const OperatorForm omega = form_mul_symbol(inv, ext_d(a));
        return tr_tilde(wedge_power(omega, 2 * k, function_form(sym_mul(inv, dot))), cfg);
    };
    std::map<std::string, double> diag;
    const cplx correction = integrate_path(path, cfg, integrand, diag);
    return make_flow_result({{"endpoint_1", c_end * endpoint(1.0)},
                             {"endpoint_0", -c_end * endpoint(0.0)},
                             {"correction", -c_corr * correction}},
                            diag);
}

cplx even_eta_trace(const ParamSymbol& projection, int k, const QuadConfig& cfg)
{
    if (k < 1 || projection.p() != 2 * k) throw PreconditionError("even_eta_trace: symbol dimension is not 2k");
    const ParamSymbol shifted = sym_sub(projection, sym_scale(0.5, identity_symbol(projection.p(), projection.N())));
    return tr_bar(wedge_power(ext_d(projection), 2 * k, function_form(shifted)), cfg);
}

cplx eta_even(const ParamSymbol& projection, int k, const QuadConfig& cfg)
{
    check_idempotent_values(projection, "eta_even: symbol");
    return -2.0 / (std::pow(cplx(0.0, 2.0 * kPi), k) * factorial(k)) * even_eta_trace(projection, k, cfg);
}

FlowResult divisor_flow_even(const SymbolPath& path, int k, const QuadConfig& cfg)
{
    cfg.validate();
    if (k < 1 || path.p != 2 * k)
        throw PreconditionError("divisor_flow_even: path dimension p = " + std::to_string(path.p) + " is not 2k");
    check_idempotent_values(path.at(0.0), "divisor_flow_even: endpoint s = 0");
    check_idempotent_values(path.at(1.0), "divisor_flow_even: endpoint s = 1");
    for (int i = 0; i <= 16; ++i) check_idempotent_class(path.at(i / 16.0), i / 16.0);

    const cplx base = std::pow(cplx(0.0, 2.0 * kPi), k);
    const double sign = k % 2 ? -1.0 : 1.0;
    // <phi_{2k}, ch(f)> = (-1)^k / k! TR-bar((f - 1/2)(df)^{2k})
    auto bulk = [&](double s) { return sign / factorial(k) * even_eta_trace(path.at(s), k, cfg); };
    const cplx c_end = -sign / base;
    // <psi_{2k-1}, /ch(sigma f, sigma h)> = (-1)^k / (k-1)! TR-tilde(sigma(h) (d sigma f)^{2k-1})
    auto integrand = [&](double s) -> cplx {
        const ParamSymbol dot = symbol_class(path.dot(s));
        if (dot.expansion().terms.empty()) return 0.0;
        const ParamSymbol f = symbol_class(path.at(s));
        const ParamSymbol h =
            sym_mul(sym_sub(sym_scale(2.0, f), identity_symbol(path.p, path.N)), dot);
        const OperatorForm df = ext_d(f);
        return sign / factorial(k - 1) * tr_tilde(wedge_power(df, 2 * k - 1, function_form(h)), cfg);
    };
    std::map<std::string, double> diag;
    const cplx correction = integrate_path(path, cfg, integrand, diag);
    return make_flow_result({{"endpoint_1", c_end * bulk(1.0)},
                             {"endpoint_0", -c_end * bulk(0.0)},
                             {"correction", sign / base * correction}},
                            diag);
}

cplx df_via_pairing(const SymbolPath& path, int k, const QuadConfig& cfg)
{
    cfg.validate();
    if (k < 0 || path.p != 2 * k + 1) throw PreconditionError("df_via_pairing: path dimension is not 2k + 1");
    const RelativeChain chain = relative_ch_path(path, k, cfg.path_nodes);
    return pair(character_cochain(path.p, cfg), chain) / std::pow(cplx(0.0, -2.0 * kPi), k + 1);
}

ParamSymbol winding_symbol(int n)
{
    if (n == 0) return scalar_constant(1, 1.0);
    const int m = std::abs(n);
    // (mu + i)^m and (mu - i)^m in increasing powers.
    std::vector<cplx> plus(m + 1), minus(m + 1);
    for (int j = 0; j <= m; ++j) {
        const double binom = std::round(factorial(m) / (factorial(j) * factorial(m - j)));
        plus[j] = binom * std::pow(kI, m - j);
        minus[j] = binom * std::pow(-kI, m - j);
    }
    return n > 0 ? rational_symbol(plus, minus) : rational_symbol(minus, plus);
}

SymbolPath linear_path_to(const ParamSymbol& g)
{
    const ParamSymbol one = identity_symbol(g.p(), g.N());
    const ParamSymbol dot = sym_sub(g, one);
    return make_path(
        g.p(), g.N(), [one, g](double s) { return sym_lincomb({{1.0 - s, one}, {s, g}}); },
        [dot](double) { return dot; });
}

ParamSymbol winding_matrix_symbol(const std::vector<int>& exponents, const Matrix& v)
{
    const Eigen::Index n = static_cast<Eigen::Index>(exponents.size());
    if (v.rows() != n || v.cols() != n) throw PreconditionError("winding_matrix_symbol: V has the wrong size");
    Eigen::FullPivLU<Matrix> lu(v);
    if (!lu.isInvertible()) throw PreconditionError("winding_matrix_symbol: V is singular");
    const Matrix vinv = lu.inverse();
    if (n == 1) return winding_symbol(exponents[0]);
    std::vector<std::pair<cplx, ParamSymbol>> parts;
    for (Eigen::Index j = 0; j < n; ++j) {
        const Matrix proj = v.col(j) * vinv.row(j);
        parts.emplace_back(1.0, sym_mul(winding_symbol(exponents[static_cast<std::size_t>(j)]), constant_symbol(1, proj)));
    }
    return sym_lincomb(parts);
}

SymbolPath bump_path(const Matrix& m, cplx amplitude, double width, double center)
{
    const ParamSymbol b = bump_symbol(1, m, amplitude, width, RealVec::Constant(1, center));
    const ParamSymbol one = identity_symbol(1, static_cast<int>(m.rows()));
    return make_path(
        1, static_cast<int>(m.rows()), [one, b](double s) { return sym_lincomb({{1.0, one}, {s, b}}); },
        [b](double) { return b; });
}

SymbolPath constant_path(const ParamSymbol& a)
{
    const ParamSymbol zero = zero_symbol(a.p(), a.N());
    return make_path(
        a.p(), a.N(), [a](double) { return a; }, [zero](double) { return zero; });
}

SymbolPath product_path(const SymbolPath& a, const SymbolPath& b)
{
    if (a.p != b.p || a.N != b.N) throw PreconditionError("product_path: paths have different (p, N)");
    std::vector<double> bp = a.breakpoints;
    bp.insert(bp.end(), b.breakpoints.begin(), b.breakpoints.end());
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
    return make_path(
        a.p, a.N, [a, b](double s) { return sym_mul(a.at(s), b.at(s)); },
        [a, b](double s) { return sym_add(sym_mul(a.dot(s), b.at(s)), sym_mul(a.at(s), b.dot(s))); }, bp);
}

SymbolPath reparametrize(const SymbolPath& a, std::function<double(double)> f, std::function<double(double)> df)
{
    if (std::abs(f(0.0)) > 1e-14 || std::abs(f(1.0) - 1.0) > 1e-14)
        throw PreconditionError("reparametrize: f must fix 0 and 1");
    // Breakpoints move to f^{-1}(b); f is monotone so bisection suffices.
    std::vector<double> bp;
    for (double b : a.breakpoints) {
        double lo = 0.0, hi = 1.0;
        for (int i = 0; i < 60; ++i) (f(0.5 * (lo + hi)) < b ? lo : hi) = 0.5 * (lo + hi);
        bp.push_back(0.5 * (lo + hi));
    }
    return make_path(
        a.p, a.N, [a, f](double s) { return a.at(std::clamp(f(s), 0.0, 1.0)); },
        [a, f, df](double s) { return sym_scale(df(s), a.dot(std::clamp(f(s), 0.0, 1.0))); }, bp);
}

int WindingFamily::expected() const
{
    int n = 0;
    for (int e : exponents) n += e;
    return n;
}

WindingFamily random_winding_family(std::mt19937& rng)
{
    WindingFamily w;
    const int n = std::uniform_int_distribution<int>(1, 2)(rng);
    std::uniform_int_distribution<int> exponent(-2, 2);
    for (int i = 0; i < n; ++i) w.exponents.push_back(exponent(rng));
    for (;;) {
        w.v = random_complex(rng, n);
        Eigen::JacobiSVD<Matrix> svd(w.v);
        const RealVec sv = svd.singularValues();
        if (sv(n - 1) > 0.1 * sv(0)) break;
    }
    return w;
}

HermitianPath random_hermitian_path(std::mt19937& rng, int max_n, int max_knots)
{
    const int n = std::uniform_int_distribution<int>(1, max_n)(rng);
    const int knots = std::uniform_int_distribution<int>(2, std::max(2, max_knots))(rng);
    std::uniform_real_distribution<double> unit(0.05, 0.95);
    std::vector<double> s{0.0};
    for (int i = 0; i < knots - 2; ++i) s.push_back(unit(rng));
    s.push_back(1.0);
    std::sort(s.begin(), s.end());
    for (std::size_t i = 1; i + 1 < s.size(); ++i)
        if (s[i] - s[i - 1] < 0.02) s[i] = s[i - 1] + 0.02;
    std::vector<Matrix> h;
    for (int i = 0; i < knots; ++i) {
        Matrix m = random_hermitian_matrix(rng, n);
        if (i == 0 || i == knots - 1)
            while (min_abs(hermitian_eigenvalues(m)) < 0.1) m = random_hermitian_matrix(rng, n);
        h.push_back(m);
    }
    return HermitianPath(s, h);
}

} // namespace divflow
