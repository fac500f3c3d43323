#include "divflow/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <sstream>

namespace divflow {

namespace {

constexpr double kDegreeEps = 1e-9;

Matrix broadcast_product(const Matrix& a, const Matrix& b)
{
    if (a.rows() == 1 && b.rows() != 1) return a(0, 0) * b;
    if (b.rows() == 1 && a.rows() != 1) return b(0, 0) * a;
    return a * b;
}

void accumulate(Matrix& out, cplx c, const Matrix& v)
{
    if (v.rows() == 1 && out.rows() != 1)
        out.diagonal().array() += c * v(0, 0);
    else
        out += c * v;
}

std::string format_mu(const RealVec& mu)
{
    std::ostringstream os;
    os << "(";
    for (Eigen::Index i = 0; i < mu.size(); ++i) os << (i ? ", " : "") << mu(i);
    os << ")";
    return os.str();
}

double smallest_singular_ratio(const Matrix& m)
{
    if (m.rows() == 1) return std::abs(m(0, 0));
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    return sv(sv.size() - 1) / std::max(1.0, sv(0));
}

Angular omega_angular(int p, int j)
{
    std::vector<int> e(p, 0);
    e[j] = 1;
    return ang_monomial(p, Matrix::Identity(1, 1), e);
}

} // namespace

Matrix HomogTerm::eval(const RealVec& mu) const
{
    const double r = mu.norm();
    if (r == 0.0) throw PreconditionError("HomogTerm::eval at mu = 0");
    double scale = std::pow(r, degree);
    if (log_power > 0) scale *= std::pow(std::log(r), log_power);
    return scale * angular->eval(mu / r);
}

Matrix Expansion::eval(const RealVec& mu, int n) const
{
    Matrix out = Matrix::Zero(n, n);
    for (const auto& t : terms) accumulate(out, 1.0, t.eval(mu));
    return out;
}

Expansion exp_normalize(std::vector<HomogTerm> terms, double remainder_order)
{
    std::stable_sort(terms.begin(), terms.end(), [](const HomogTerm& a, const HomogTerm& b) {
        if (std::abs(a.degree - b.degree) > kDegreeEps) return a.degree > b.degree;
        return a.log_power > b.log_power;
    });
    Expansion out;
    out.remainder_order = remainder_order;
    for (auto& t : terms) {
        if (t.degree <= remainder_order + kDegreeEps) continue;
        if (t.angular->is_zero()) continue;
        if (!out.terms.empty()) {
            auto& last = out.terms.back();
            if (std::abs(last.degree - t.degree) <= kDegreeEps && last.log_power == t.log_power) {
                last.angular = ang_add(last.angular, t.angular);
                continue;
            }
        }
        out.terms.push_back(std::move(t));
    }
    out.terms.erase(std::remove_if(out.terms.begin(), out.terms.end(),
                                   [](const HomogTerm& t) { return t.angular->is_zero(); }),
                    out.terms.end());
    return out;
}

Expansion exp_add(const std::vector<std::pair<cplx, Expansion>>& parts)
{
    std::vector<HomogTerm> terms;
    double rem = kNegInf;
    for (const auto& [c, e] : parts) {
        if (c == 0.0) continue;
        rem = std::max(rem, e.remainder_order);
        for (const auto& t : e.terms) terms.push_back({t.degree, t.log_power, ang_scale(c, t.angular)});
    }
    return exp_normalize(std::move(terms), rem);
}

Expansion exp_mul(const Expansion& a, const Expansion& b, double target, double top_a, double top_b)
{
    std::vector<HomogTerm> terms;
    double rem = std::max(add_orders(a.remainder_order, top_b), add_orders(top_a, b.remainder_order));
    for (const auto& ta : a.terms) {
        for (const auto& tb : b.terms) {
            const double deg = ta.degree + tb.degree;
            if (deg > target + kDegreeEps)
                terms.push_back({deg, ta.log_power + tb.log_power, ang_mul(ta.angular, tb.angular)});
            else
                rem = std::max(rem, deg);
        }
    }
    return exp_normalize(std::move(terms), rem);
}

Expansion exp_derivative(const Expansion& a, int j)
{
    std::vector<HomogTerm> terms;
    for (const auto& t : a.terms) {
        const int p = t.angular->p();
        Angular wa = ang_mul(omega_angular(p, j), t.angular);
        terms.push_back({t.degree - 1.0, t.log_power, ang_add({{1.0, t.angular->derivative(j)}, {t.degree, wa}})});
        if (t.log_power > 0)
            terms.push_back({t.degree - 1.0, t.log_power - 1, ang_scale(static_cast<double>(t.log_power), wa)});
    }
    return exp_normalize(std::move(terms), add_orders(a.remainder_order, -1.0));
}

Expansion exp_trace(const Expansion& a)
{
    std::vector<HomogTerm> terms;
    for (const auto& t : a.terms) terms.push_back({t.degree, t.log_power, ang_trace(t.angular)});
    return exp_normalize(std::move(terms), a.remainder_order);
}

Expansion exp_truncate(const Expansion& a, double target)
{
    Expansion out;
    out.remainder_order = a.remainder_order;
    for (const auto& t : a.terms) {
        if (t.degree > target + kDegreeEps)
            out.terms.push_back(t);
        else
            out.remainder_order = std::max(out.remainder_order, t.degree);
    }
    return out;
}

// ---------------------------------------------------------------------------

SymbolNode::SymbolNode(int p, int n, double order, bool has_values)
    : p_(p), n_(n), order_(order), has_values_(has_values)
{
    if (p < 1) throw PreconditionError("symbol: p must be positive");
    if (n < 1) throw PreconditionError("symbol: N must be positive");
}

ParamSymbol SymbolNode::partial(int j) const
{
    if (j < 0 || j >= p_) throw PreconditionError("sym_partial: axis out of range");
    std::lock_guard<std::mutex> lock(partial_mutex_);
    if (partials_.empty()) partials_.resize(p_);
    if (!partials_[j]) partials_[j] = compute_partial(j).node();
    return ParamSymbol(partials_[j]);
}

Expansion SymbolNode::expansion(double target) const
{
    if (target >= order_) return {{}, order_};
    std::lock_guard<std::mutex> lock(expansion_mutex_);
    auto it = expansions_.upper_bound(target);
    if (it != expansions_.begin()) {
        --it;
        return exp_truncate(it->second, target);
    }
    Expansion e = compute_expansion(target);
    expansions_.emplace(target, e);
    return e;
}

ParamSymbol SymbolNode::compute_partial(int j) const { return fd_partial(ParamSymbol(shared_from_this()), j); }

namespace {

// Values of already evaluated nodes at one point, so shared subexpressions of
// a DAG are computed once per top-level evaluation.
struct EvalScope {
    RealVec mu;
    std::unordered_map<const SymbolNode*, Matrix> values;
};
thread_local EvalScope* active_scope = nullptr;

} // namespace

Matrix ParamSymbol::eval(const RealVec& mu) const
{
    if (mu.size() != p()) throw PreconditionError("symbol eval: length(mu) != p");
    if (!has_values()) throw PreconditionError("symbol eval: leading-part class has no pointwise values");
    if (active_scope && active_scope->mu == mu) {
        auto it = active_scope->values.find(node_.get());
        if (it != active_scope->values.end()) return it->second;
        Matrix v = node_->eval(mu);
        active_scope->values.emplace(node_.get(), v);
        return v;
    }
    // New point (top level, or a finite-difference probe inside another evaluation).
    EvalScope scope{mu, {}};
    EvalScope* saved = active_scope;
    active_scope = &scope;
    try {
        Matrix v = node_->eval(mu);
        active_scope = saved;
        return v;
    } catch (...) {
        active_scope = saved;
        throw;
    }
}

Matrix ParamSymbol::eval1(double mu) const
{
    RealVec v(1);
    v(0) = mu;
    return eval(v);
}

bool ParamSymbol::classical() const
{
    const Expansion e = expansion();
    for (const auto& t : e.terms) {
        if (t.log_power != 0) return false;
        const double steps = order() - t.degree;
        if (std::abs(steps - std::round(steps)) > kDegreeEps) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

namespace {

class ZeroNode final : public SymbolNode {
public:
    ZeroNode(int p, int n) : SymbolNode(p, n, kNegInf) {}
    std::string kind() const override { return "zero"; }
    bool is_zero() const override { return true; }
    Matrix eval(const RealVec&) const override { return Matrix::Zero(n(), n()); }

protected:
    ParamSymbol compute_partial(int) const override { return zero_symbol(p(), n()); }
    Expansion compute_expansion(double) const override { return {{}, kNegInf}; }
};

class ConstantNode final : public SymbolNode {
public:
    ConstantNode(int p, Matrix m) : SymbolNode(p, static_cast<int>(m.rows()), 0.0), m_(std::move(m)) {}
    std::string kind() const override { return "constant"; }
    Matrix eval(const RealVec&) const override { return m_; }
    const Matrix& value() const { return m_; }

protected:
    ParamSymbol compute_partial(int) const override { return zero_symbol(p(), n()); }
    Expansion compute_expansion(double target) const override
    {
        return exp_truncate({{{0.0, 0, ang_const(p(), m_)}}, kNegInf}, target);
    }

private:
    Matrix m_;
};

int total_degree(const Monomial& m)
{
    int d = 0;
    for (int e : m.exps) d += e;
    return d;
}

class PolynomialNode final : public SymbolNode {
public:
    PolynomialNode(int p, int n, std::vector<Monomial> monos, double order)
        : SymbolNode(p, n, order), monos_(std::move(monos))
    {
    }
    std::string kind() const override { return "polynomial"; }

    Matrix eval(const RealVec& mu) const override
    {
        Matrix out = Matrix::Zero(n(), n());
        for (const auto& m : monos_) {
            double v = 1.0;
            for (int j = 0; j < p(); ++j)
                if (m.exps[j] > 0) v *= std::pow(mu(j), m.exps[j]);
            out += v * m.coef;
        }
        return out;
    }

protected:
    ParamSymbol compute_partial(int j) const override
    {
        std::vector<Monomial> d;
        for (const auto& m : monos_) {
            if (m.exps[j] == 0) continue;
            Monomial dm{m.exps, static_cast<double>(m.exps[j]) * m.coef};
            dm.exps[j] -= 1;
            d.push_back(std::move(dm));
        }
        return polynomial_symbol(p(), n(), d);
    }

    Expansion compute_expansion(double target) const override
    {
        std::map<int, std::vector<std::pair<cplx, Angular>>> by_degree;
        for (const auto& m : monos_) by_degree[total_degree(m)].emplace_back(1.0, ang_monomial(p(), m.coef, m.exps));
        std::vector<HomogTerm> terms;
        for (const auto& [deg, parts] : by_degree) terms.push_back({static_cast<double>(deg), 0, ang_add(parts)});
        return exp_truncate(exp_normalize(std::move(terms), kNegInf), target);
    }

private:
    std::vector<Monomial> monos_;
};

std::vector<cplx> trim(std::vector<cplx> c)
{
    while (!c.empty() && c.back() == 0.0) c.pop_back();
    return c;
}

cplx horner(const std::vector<cplx>& c, double x)
{
    cplx v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
    return v;
}

std::vector<cplx> poly_mul(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    if (a.empty() || b.empty()) return {};
    std::vector<cplx> out(a.size() + b.size() - 1, 0.0);
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

std::vector<cplx> poly_deriv(const std::vector<cplx>& a)
{
    std::vector<cplx> out;
    for (size_t i = 1; i < a.size(); ++i) out.push_back(static_cast<double>(i) * a[i]);
    return out;
}

std::vector<cplx> poly_sub(std::vector<cplx> a, const std::vector<cplx>& b)
{
    if (a.size() < b.size()) a.resize(b.size(), 0.0);
    for (size_t i = 0; i < b.size(); ++i) a[i] -= b[i];
    return a;
}

class RationalNode final : public SymbolNode {
public:
    RationalNode(std::vector<cplx> num, std::vector<cplx> den)
        : SymbolNode(1, 1, static_cast<double>(static_cast<int>(num.size()) - static_cast<int>(den.size()))),
          num_(std::move(num)), den_(std::move(den))
    {
    }
    std::string kind() const override { return "rational"; }

    Matrix eval(const RealVec& mu) const override
    {
        const cplx d = horner(den_, mu(0));
        if (d == 0.0) throw PreconditionError("rational symbol: denominator vanishes at mu=" + format_mu(mu));
        return Matrix::Constant(1, 1, horner(num_, mu(0)) / d);
    }

protected:
    ParamSymbol compute_partial(int) const override
    {
        auto num = poly_sub(poly_mul(poly_deriv(num_), den_), poly_mul(num_, poly_deriv(den_)));
        return rational_symbol(num, poly_mul(den_, den_));
    }

    // Laurent series at infinity: num/den = mu^m sum_i c_i mu^{-i}.
    Expansion compute_expansion(double target) const override
    {
        const int dn = static_cast<int>(num_.size()) - 1;
        const int dd = static_cast<int>(den_.size()) - 1;
        const int m = dn - dd;
        auto a = [&](int i) { return i <= dn ? num_[dn - i] : cplx(0.0); };
        auto b = [&](int i) { return i <= dd ? den_[dd - i] : cplx(0.0); };
        std::vector<cplx> c;
        std::vector<HomogTerm> terms;
        int i = 0;
        for (; m - i > target + kDegreeEps; ++i) {
            cplx v = a(i);
            for (int j = 1; j <= std::min(i, dd); ++j) v -= b(j) * c[i - j];
            v /= b(0);
            c.push_back(v);
            const int deg = m - i;
            const double sign = (deg % 2 == 0) ? 1.0 : -1.0;
            terms.push_back({static_cast<double>(deg), 0,
                             ang_sign(Matrix::Constant(1, 1, v), Matrix::Constant(1, 1, sign * v))});
        }
        const double rem = (dd == 0 && m - i < 0) ? kNegInf : static_cast<double>(m - i);
        return exp_normalize(std::move(terms), rem);
    }

private:
    std::vector<cplx> num_;
    std::vector<cplx> den_;
};

double binomial_real(double z, int j)
{
    double v = 1.0;
    for (int i = 0; i < j; ++i) v *= (z - i) / (i + 1);
    return v;
}

struct HermitianSpectrum {
    Eigen::VectorXd lambda;
    Matrix u;

    explicit HermitianSpectrum(const Matrix& d)
    {
        if ((d - d.adjoint()).norm() > 1e-10 * std::max(1.0, d.norm()))
            throw PreconditionError("expected a Hermitian matrix");
        Eigen::SelfAdjointEigenSolver<Matrix> es(d);
        lambda = es.eigenvalues();
        u = es.eigenvectors();
    }

    template <class F>
    Matrix apply(F f) const
    {
        Eigen::VectorXcd v(lambda.size());
        for (Eigen::Index i = 0; i < lambda.size(); ++i) v(i) = f(lambda(i));
        return u * v.asDiagonal() * u.adjoint();
    }
};

class RadialPowerNode final : public SymbolNode {
public:
    RadialPowerNode(int p, const Matrix& d, double z)
        : SymbolNode(p, static_cast<int>(d.rows()), 2.0 * z), d_(d), spec_(d), z_(z)
    {
    }
    std::string kind() const override { return "radial_power"; }

    Matrix eval(const RealVec& mu) const override
    {
        const double r2 = mu.squaredNorm();
        return spec_.apply([&](double l) {
            const double base = l * l + r2;
            if (base == 0.0 && z_ < 0) throw PreconditionError("radial power: D singular at mu = 0");
            return cplx(std::pow(base, z_));
        });
    }

protected:
    ParamSymbol compute_partial(int j) const override
    {
        if (z_ == 0.0) return zero_symbol(p(), n());
        return sym_mul(sym_scale(2.0 * z_, coordinate_symbol(p(), j)), radial_power_symbol(p(), d_, z_ - 1.0));
    }

    Expansion compute_expansion(double target) const override
    {
        const bool finite = z_ >= 0 && std::abs(z_ - std::round(z_)) < 1e-14;
        std::vector<HomogTerm> terms;
        int j = 0;
        for (; 2.0 * z_ - 2.0 * j > target + kDegreeEps; ++j) {
            if (finite && j > std::lround(z_)) break;
            const double b = binomial_real(z_, j);
            Matrix coef = spec_.apply([&](double l) { return cplx(b * std::pow(l, 2 * j)); });
            terms.push_back({2.0 * z_ - 2.0 * j, 0, ang_const(p(), coef)});
        }
        const double rem = (finite && j > std::lround(z_)) ? kNegInf : 2.0 * z_ - 2.0 * j;
        return exp_normalize(std::move(terms), rem);
    }

private:
    Matrix d_;
    HermitianSpectrum spec_;
    double z_;
};

// Partial derivative with its own evaluator (analytic or finite difference);
// the expansion is the termwise derivative of the parent's.
class PartialNode final : public SymbolNode {
public:
    PartialNode(ParamSymbol parent, int j, std::function<Matrix(const RealVec&)> f)
        : SymbolNode(parent.p(), parent.N(), add_orders(parent.order(), -1.0), parent.has_values()),
          parent_(std::move(parent)), j_(j), f_(std::move(f))
    {
    }
    std::string kind() const override { return "partial"; }

    Matrix eval(const RealVec& mu) const override
    {
        if (f_) return f_(mu);
        const double h = 1e-5 * (1.0 + mu.norm());
        RealVec up = mu, down = mu;
        up(j_) += h;
        down(j_) -= h;
        return (parent_.eval(up) - parent_.eval(down)) / (2.0 * h);
    }

protected:
    Expansion compute_expansion(double target) const override
    {
        return exp_truncate(exp_derivative(parent_.expansion(target + 1.0), j_), target);
    }

private:
    ParamSymbol parent_;
    int j_;
    std::function<Matrix(const RealVec&)> f_;
};

class CutoffRadialNode final : public SymbolNode {
public:
    CutoffRadialNode(int p, const Matrix& d, Cutoff phi)
        : SymbolNode(p, static_cast<int>(d.rows()), -1.0), spec_(d), phi_(std::move(phi)),
          exact_(radial_power_symbol(p, d, -0.5))
    {
    }
    std::string kind() const override { return "cutoff_radial"; }

    Matrix eval(const RealVec& mu) const override
    {
        const double r = mu.norm();
        const double pr = phi_.value(r);
        return spec_.apply([&](double l) { return cplx(1.0 / std::sqrt(base(l, r, pr))); });
    }

protected:
    // d_j q = -q^3/2 (2 mu_j + phi'(r) mu_j / r phi(l^2))
    ParamSymbol compute_partial(int j) const override
    {
        auto self = ParamSymbol(shared_from_this());
        auto f = [this, j](const RealVec& mu) {
            const double r = mu.norm();
            const double pr = phi_.value(r);
            const double dphi_over_r = r > 0 ? phi_.derivative(r) / r : second_derivative_at_zero();
            return spec_.apply([&](double l) {
                const double q = 1.0 / std::sqrt(base(l, r, pr));
                return cplx(-0.5 * q * q * q * mu(j) * (2.0 + dphi_over_r * phi_.value(l * l)));
            });
        };
        return ParamSymbol(std::make_shared<PartialNode>(self, j, f));
    }

    Expansion compute_expansion(double target) const override { return exact_.expansion(target); }

private:
    double base(double l, double r, double pr) const
    {
        const double b = l * l + r * r + pr * phi_.value(l * l);
        if (b <= 0.0) throw PreconditionError("cutoff radial symbol: singular value");
        return b;
    }
    double second_derivative_at_zero() const
    {
        const double h = 1e-4;
        return (phi_.derivative(h) - phi_.derivative(-h)) / (2.0 * h);
    }

    HermitianSpectrum spec_;
    Cutoff phi_;
    ParamSymbol exact_;
};

double bump_profile(double t) { return std::abs(t) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - t * t)) : 0.0; }

class BumpNode final : public SymbolNode {
public:
    BumpNode(int p, Matrix m, cplx amplitude, double width, RealVec center)
        : SymbolNode(p, static_cast<int>(m.rows()), kNegInf), m_(std::move(m)), amp_(amplitude), width_(width),
          center_(std::move(center))
    {
    }
    std::string kind() const override { return "bump"; }

    Matrix eval(const RealVec& mu) const override
    {
        return amp_ * bump_profile((mu - center_).norm() / width_) * m_;
    }

protected:
    ParamSymbol compute_partial(int j) const override
    {
        auto f = [this, j](const RealVec& mu) -> Matrix {
            const double t = (mu - center_).norm() / width_;
            if (t >= 1.0) return Matrix::Zero(n(), n());
            const double s = 1.0 - t * t;
            const double g = bump_profile(t) * (-2.0 / (s * s)) * (mu(j) - center_(j)) / (width_ * width_);
            return amp_ * g * m_;
        };
        return ParamSymbol(std::make_shared<PartialNode>(ParamSymbol(shared_from_this()), j, f));
    }
    Expansion compute_expansion(double) const override { return {{}, kNegInf}; }

private:
    Matrix m_;
    cplx amp_;
    double width_;
    RealVec center_;
};

class CustomNode final : public SymbolNode {
public:
    CustomNode(int p, int n, double order, std::function<Matrix(const RealVec&)> f, Expansion e, std::string name)
        : SymbolNode(p, n, order), f_(std::move(f)), e_(std::move(e)), name_(std::move(name))
    {
    }
    std::string kind() const override { return name_; }
    Matrix eval(const RealVec& mu) const override { return f_(mu); }

protected:
    Expansion compute_expansion(double target) const override { return exp_truncate(e_, target); }

private:
    std::function<Matrix(const RealVec&)> f_;
    Expansion e_;
    std::string name_;
};

class SumNode final : public SymbolNode {
public:
    SumNode(int p, int n, double order, bool has_values, std::vector<std::pair<cplx, ParamSymbol>> parts)
        : SymbolNode(p, n, order, has_values), parts_(std::move(parts))
    {
    }
    std::string kind() const override { return "sum"; }
    const std::vector<std::pair<cplx, ParamSymbol>>& parts() const { return parts_; }

    Matrix eval(const RealVec& mu) const override
    {
        Matrix out = Matrix::Zero(n(), n());
        for (const auto& [c, a] : parts_) out += c * a.eval(mu);
        return out;
    }

protected:
    ParamSymbol compute_partial(int j) const override
    {
        std::vector<std::pair<cplx, ParamSymbol>> d;
        for (const auto& [c, a] : parts_) d.emplace_back(c, a.partial(j));
        return sym_lincomb(d);
    }

    Expansion compute_expansion(double target) const override
    {
        std::vector<std::pair<cplx, Expansion>> e;
        for (const auto& [c, a] : parts_) e.emplace_back(c, a.expansion(target));
        return exp_truncate(exp_add(e), target);
    }

private:
    std::vector<std::pair<cplx, ParamSymbol>> parts_;
};

class ProductNode final : public SymbolNode {
public:
    ProductNode(ParamSymbol a, ParamSymbol b)
        : SymbolNode(a.p(), std::max(a.N(), b.N()), add_orders(a.order(), b.order()),
                     a.has_values() && b.has_values()),
          a_(std::move(a)), b_(std::move(b))
    {
    }
    std::string kind() const override { return "product"; }
    Matrix eval(const RealVec& mu) const override { return broadcast_product(a_.eval(mu), b_.eval(mu)); }

protected:
    ParamSymbol compute_partial(int j) const override
    {
        return sym_add(sym_mul(a_.partial(j), b_), sym_mul(a_, b_.partial(j)));
    }

    Expansion compute_expansion(double target) const override
    {
        const double ta = a_.order(), tb = b_.order();
        const Expansion ea = a_.expansion(tb == kNegInf ? kPosInf : target - tb);
        const Expansion eb = b_.expansion(ta == kNegInf ? kPosInf : target - ta);
        return exp_mul(ea, eb, target, ta, tb);
    }

private:
    ParamSymbol a_;
    ParamSymbol b_;
};

// Row weights w_i and the row-scaled principal part sum_i E_ii (top term of row i).
// Uniform weights give the usual leading term; unequal weights handle
// mixed-order systems such as diag(1, mu^2 + 1).
struct Principal {
    std::vector<double> weights;
    Angular angular;
};

Principal find_principal(const ParamSymbol& a)
{
    if (a.order() == kNegInf) throw PreconditionError("sym_inv: not elliptic (symbol of order -inf)");
    const int n = a.N();
    const auto samples = sphere_samples(a.p());
    double t = a.order() - 0.5;
    Expansion e;
    for (int attempt = 0; attempt < 8; ++attempt, t -= 1.0) {
        e = a.expansion(t);
        if (e.remainder_order == kNegInf) break;
    }
    Principal out;
    out.weights.assign(n, kNegInf);
    std::vector<Angular> rows(n);
    for (int i = 0; i < n; ++i) {
        for (const auto& term : e.terms) {
            double norm = 0.0;
            for (const auto& w : samples) norm = std::max(norm, term.angular->eval(w).row(i).norm());
            if (norm < 1e-14) continue;
            if (term.log_power != 0) throw PreconditionError("sym_inv: not elliptic (leading term has log factor)");
            out.weights[i] = term.degree;
            Matrix eii = Matrix::Zero(n, n);
            eii(i, i) = 1.0;
            rows[i] = n == 1 ? term.angular : ang_mul(ang_const(a.p(), eii), term.angular);
            break;
        }
        if (out.weights[i] == kNegInf) throw PreconditionError("sym_inv: not elliptic (no leading term)");
    }
    std::vector<std::pair<cplx, Angular>> parts;
    for (const auto& r : rows) parts.emplace_back(1.0, r);
    out.angular = ang_add(parts);
    return out;
}

class InverseNode final : public SymbolNode {
public:
    InverseNode(ParamSymbol a, Principal principal)
        : SymbolNode(a.p(), a.N(), -*std::min_element(principal.weights.begin(), principal.weights.end()),
                     a.has_values()),
          a_(std::move(a)), weights_(std::move(principal.weights))
    {
        wmin_ = *std::min_element(weights_.begin(), weights_.end());
        uniform_ = *std::max_element(weights_.begin(), weights_.end()) - wmin_ < kDegreeEps;
    }
    std::string kind() const override { return "inverse"; }

    Matrix eval(const RealVec& mu) const override
    {
        const Matrix v = a_.eval(mu);
        if (v.rows() == 1) {
            if (v(0, 0) == 0.0) throw PreconditionError("sym_inv: not invertible at mu=" + format_mu(mu));
            return Matrix::Constant(1, 1, 1.0 / v(0, 0));
        }
        Eigen::PartialPivLU<Matrix> lu(v);
        Matrix inv = lu.inverse();
        if (!inv.allFinite()) throw PreconditionError("sym_inv: not invertible at mu=" + format_mu(mu));
        return inv;
    }

protected:
    ParamSymbol compute_partial(int j) const override
    {
        ParamSymbol self(shared_from_this());
        return sym_scale(-1.0, sym_mul({self, a_.partial(j), self}));
    }

    // With W = diag(r^{w_i}) and a = W b, b has an invertible degree-0 leading
    // term t0; b^{-1} = sum_n (-t0^{-1} R)^n t0^{-1} and a^{-1} = b^{-1} W^{-1}.
    Expansion compute_expansion(double target) const override
    {
        const int n = this->n();
        const Expansion ea = a_.expansion(target + 2.0 * wmin_);
        std::vector<HomogTerm> scaled;
        for (const auto& t : ea.terms) {
            if (uniform_) {
                scaled.push_back({t.degree - wmin_, t.log_power, t.angular});
                continue;
            }
            // Row i vanishes above its weight by construction of the weights.
            for (int i = 0; i < n; ++i)
                if (t.degree - weights_[i] <= kDegreeEps)
                    scaled.push_back({t.degree - weights_[i], t.log_power, ang_mul(ang_const(p(), unit(i)), t.angular)});
        }
        const Expansion eb = exp_normalize(std::move(scaled), add_orders(ea.remainder_order, -wmin_));
        if (eb.terms.empty() || std::abs(eb.terms.front().degree) > kDegreeEps || eb.terms.front().log_power != 0)
            throw PreconditionError("sym_inv: leading term changed under expansion");

        const double tb = target + wmin_;
        const Angular inv0 = ang_inv(eb.terms.front().angular);
        const Expansion e0{{{0.0, 0, inv0}}, kNegInf};
        const Expansion neg_e0{{{0.0, 0, ang_scale(-1.0, inv0)}}, kNegInf};
        Expansion rest{std::vector<HomogTerm>(eb.terms.begin() + 1, eb.terms.end()), eb.remainder_order};
        const Expansion x = exp_mul(neg_e0, rest, tb, 0.0, rest.top_degree());

        Expansion binv = e0;
        Expansion cur = e0;
        for (int iter = 0; iter < 10000; ++iter) {
            cur = exp_mul(x, cur, tb, x.top_degree(), cur.top_degree());
            binv = exp_add({{1.0, binv}, {1.0, cur}});
            if (cur.terms.empty()) break;
        }

        std::vector<HomogTerm> out;
        for (const auto& t : binv.terms) {
            if (uniform_) {
                out.push_back({t.degree - wmin_, t.log_power, t.angular});
                continue;
            }
            for (int j = 0; j < n; ++j)
                out.push_back({t.degree - weights_[j], t.log_power, ang_mul(t.angular, ang_const(p(), unit(j)))});
        }
        return exp_truncate(exp_normalize(std::move(out), add_orders(binv.remainder_order, -wmin_)), target);
    }

private:
    Matrix unit(int i) const
    {
        Matrix e = Matrix::Zero(n(), n());
        e(i, i) = 1.0;
        return e;
    }

    ParamSymbol a_;
    std::vector<double> weights_;
    double wmin_ = 0.0;
    bool uniform_ = true;
};

class TraceNode final : public SymbolNode {
public:
    explicit TraceNode(ParamSymbol a) : SymbolNode(a.p(), 1, a.order(), a.has_values()), a_(std::move(a)) {}
    std::string kind() const override { return "trace"; }
    Matrix eval(const RealVec& mu) const override { return Matrix::Constant(1, 1, a_.eval(mu).trace()); }

protected:
    ParamSymbol compute_partial(int j) const override { return sym_trace(a_.partial(j)); }
    Expansion compute_expansion(double target) const override { return exp_trace(a_.expansion(target)); }

private:
    ParamSymbol a_;
};

class ClassNode final : public SymbolNode {
public:
    explicit ClassNode(ParamSymbol a) : SymbolNode(a.p(), a.N(), a.order(), false), a_(std::move(a)) {}
    std::string kind() const override { return "class"; }
    Matrix eval(const RealVec&) const override
    {
        throw PreconditionError("symbol eval: leading-part class has no pointwise values");
    }

protected:
    ParamSymbol compute_partial(int j) const override { return symbol_class(a_.partial(j)); }
    Expansion compute_expansion(double target) const override { return a_.expansion(target); }

private:
    ParamSymbol a_;
};

void require_same_shape(const ParamSymbol& a, const ParamSymbol& b, const char* op)
{
    if (a.p() != b.p() || a.N() != b.N()) throw PreconditionError(std::string(op) + ": dimension mismatch");
}

const Matrix* constant_value(const ParamSymbol& a)
{
    if (auto* c = dynamic_cast<const ConstantNode*>(a.id())) return &c->value();
    return nullptr;
}

} // namespace

// ---------------------------------------------------------------------------

ParamSymbol zero_symbol(int p, int n) { return ParamSymbol(std::make_shared<ZeroNode>(p, n)); }

ParamSymbol constant_symbol(int p, const Matrix& m)
{
    if (m.rows() != m.cols()) throw PreconditionError("constant_symbol: matrix must be square");
    if (m.isZero(0.0)) return zero_symbol(p, static_cast<int>(m.rows()));
    return ParamSymbol(std::make_shared<ConstantNode>(p, m));
}

ParamSymbol identity_symbol(int p, int n) { return constant_symbol(p, Matrix::Identity(n, n)); }

ParamSymbol scalar_constant(int p, cplx c) { return constant_symbol(p, Matrix::Constant(1, 1, c)); }

ParamSymbol polynomial_symbol(int p, int n, const std::vector<Monomial>& monomials)
{
    std::vector<Monomial> kept;
    double order = kNegInf;
    for (const auto& m : monomials) {
        if (static_cast<int>(m.exps.size()) != p) throw PreconditionError("polynomial_symbol: exponent count != p");
        if (m.coef.rows() != n || m.coef.cols() != n) throw PreconditionError("polynomial_symbol: coefficient size");
        if (m.coef.isZero(0.0)) continue;
        kept.push_back(m);
        order = std::max(order, static_cast<double>(total_degree(m)));
    }
    if (kept.empty()) return zero_symbol(p, n);
    if (order == 0.0) {
        Matrix c = Matrix::Zero(n, n);
        for (const auto& m : kept) c += m.coef;
        return constant_symbol(p, c);
    }
    return ParamSymbol(std::make_shared<PolynomialNode>(p, n, std::move(kept), order));
}

ParamSymbol linear_symbol(int p, const Matrix& m0, const std::vector<Matrix>& m)
{
    if (static_cast<int>(m.size()) != p) throw PreconditionError("linear_symbol: need p coefficient matrices");
    const int n = static_cast<int>(m0.rows());
    std::vector<Monomial> monos{{std::vector<int>(p, 0), m0}};
    for (int j = 0; j < p; ++j) {
        std::vector<int> e(p, 0);
        e[j] = 1;
        monos.push_back({e, m[j]});
    }
    return polynomial_symbol(p, n, monos);
}

ParamSymbol coordinate_symbol(int p, int j)
{
    std::vector<int> e(p, 0);
    e[j] = 1;
    return polynomial_symbol(p, 1, {{e, Matrix::Identity(1, 1)}});
}

ParamSymbol rational_symbol(const std::vector<cplx>& num, const std::vector<cplx>& den)
{
    auto n = trim(num);
    auto d = trim(den);
    if (d.empty()) throw PreconditionError("rational_symbol: zero denominator");
    if (n.empty()) return zero_symbol(1, 1);
    if (d.size() == 1) {
        std::vector<Monomial> monos;
        for (size_t i = 0; i < n.size(); ++i)
            monos.push_back({{static_cast<int>(i)}, Matrix::Constant(1, 1, n[i] / d[0])});
        return polynomial_symbol(1, 1, monos);
    }
    return ParamSymbol(std::make_shared<RationalNode>(std::move(n), std::move(d)));
}

ParamSymbol radial_power_symbol(int p, const Matrix& d, double z)
{
    if (z == 0.0) return identity_symbol(p, static_cast<int>(d.rows()));
    return ParamSymbol(std::make_shared<RadialPowerNode>(p, d, z));
}

Cutoff default_cutoff()
{
    Cutoff c;
    c.value = bump_profile;
    c.derivative = [](double t) {
        if (std::abs(t) >= 1.0) return 0.0;
        const double s = 1.0 - t * t;
        return bump_profile(t) * (-2.0 * t / (s * s));
    };
    return c;
}

ParamSymbol cutoff_radial_symbol(int p, const Matrix& d, const Cutoff& phi)
{
    return ParamSymbol(std::make_shared<CutoffRadialNode>(p, d, phi));
}

ParamSymbol bump_symbol(int p, const Matrix& m, cplx amplitude, double width, const RealVec& center)
{
    if (width <= 0) throw PreconditionError("bump_symbol: width must be positive");
    if (center.size() != p) throw PreconditionError("bump_symbol: center dimension");
    if (amplitude == 0.0 || m.isZero(0.0)) return zero_symbol(p, static_cast<int>(m.rows()));
    return ParamSymbol(std::make_shared<BumpNode>(p, m, amplitude, width, center));
}

ParamSymbol custom_symbol(int p, int n, double order, std::function<Matrix(const RealVec&)> eval,
                          std::vector<HomogTerm> terms, double remainder_order, std::string name)
{
    Expansion e = exp_normalize(std::move(terms), remainder_order);
    return ParamSymbol(std::make_shared<CustomNode>(p, n, order, std::move(eval), std::move(e), std::move(name)));
}

ParamSymbol sym_lincomb(const std::vector<std::pair<cplx, ParamSymbol>>& parts)
{
    if (parts.empty()) throw PreconditionError("sym_lincomb: empty");
    const ParamSymbol& first = parts.front().second;
    std::vector<std::pair<cplx, ParamSymbol>> merged;
    auto add_one = [&](cplx c, const ParamSymbol& s) {
        if (c == 0.0 || s.is_zero()) return;
        for (auto& [mc, ms] : merged)
            if (ms.id() == s.id()) {
                mc += c;
                return;
            }
        merged.emplace_back(c, s);
    };
    for (const auto& [c, s] : parts) {
        require_same_shape(first, s, "sym_add");
        if (auto* sum = dynamic_cast<const SumNode*>(s.id())) {
            for (const auto& [ic, is] : sum->parts()) add_one(c * ic, is);
        } else {
            add_one(c, s);
        }
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(), [](const auto& e) { return e.first == 0.0; }),
                 merged.end());
    if (merged.empty()) return zero_symbol(first.p(), first.N());
    if (merged.size() == 1 && merged.front().first == 1.0) return merged.front().second;

    bool all_const = true;
    for (const auto& e : merged) all_const = all_const && constant_value(e.second);
    if (all_const) {
        Matrix m = Matrix::Zero(first.N(), first.N());
        for (const auto& [c, s] : merged) m += c * *constant_value(s);
        return constant_symbol(first.p(), m);
    }

    double order = kNegInf;
    bool values = true;
    for (const auto& [c, s] : merged) {
        order = std::max(order, s.order());
        values = values && s.has_values();
    }
    return ParamSymbol(std::make_shared<SumNode>(first.p(), first.N(), order, values, std::move(merged)));
}

ParamSymbol sym_add(const ParamSymbol& a, const ParamSymbol& b) { return sym_lincomb({{1.0, a}, {1.0, b}}); }
ParamSymbol sym_sub(const ParamSymbol& a, const ParamSymbol& b) { return sym_lincomb({{1.0, a}, {-1.0, b}}); }
ParamSymbol sym_scale(cplx c, const ParamSymbol& a) { return sym_lincomb({{c, a}}); }

ParamSymbol sym_mul(const ParamSymbol& a, const ParamSymbol& b)
{
    if (a.p() != b.p()) throw PreconditionError("sym_mul: dimension mismatch");
    if (a.N() != b.N() && a.N() != 1 && b.N() != 1) throw PreconditionError("sym_mul: dimension mismatch");
    const int n = std::max(a.N(), b.N());
    if (a.is_zero() || b.is_zero()) return zero_symbol(a.p(), n);
    const Matrix* ca = constant_value(a);
    const Matrix* cb = constant_value(b);
    if (ca && cb) return constant_symbol(a.p(), broadcast_product(*ca, *cb));
    if (ca && a.N() == n && ca->isIdentity(0.0) && b.N() == n) return b;
    if (cb && b.N() == n && cb->isIdentity(0.0) && a.N() == n) return a;
    return ParamSymbol(std::make_shared<ProductNode>(a, b));
}

ParamSymbol sym_mul(const std::vector<ParamSymbol>& factors)
{
    if (factors.empty()) throw PreconditionError("sym_mul: empty product");
    ParamSymbol out = factors.front();
    for (size_t i = 1; i < factors.size(); ++i) out = sym_mul(out, factors[i]);
    return out;
}

std::vector<RealVec> sphere_samples(int p)
{
    std::vector<RealVec> out;
    if (p == 1) {
        out.push_back(RealVec::Constant(1, 1.0));
        out.push_back(RealVec::Constant(1, -1.0));
    } else if (p == 2) {
        for (int i = 0; i < 16; ++i) {
            RealVec w(2);
            w << std::cos(2 * kPi * (i + 0.5) / 16), std::sin(2 * kPi * (i + 0.5) / 16);
            out.push_back(w);
        }
    } else {
        // Fibonacci lattice on S^2; higher p padded with axis directions.
        const int count = 32;
        const double golden = kPi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
            RealVec w = RealVec::Zero(p);
            const double z = 1.0 - 2.0 * (i + 0.5) / count;
            const double rho = std::sqrt(1.0 - z * z);
            w(0) = rho * std::cos(golden * i);
            w(1) = rho * std::sin(golden * i);
            w(2) = z;
            out.push_back(w);
        }
        for (int j = 3; j < p; ++j) {
            RealVec w = RealVec::Zero(p);
            w(j) = 1.0;
            out.push_back(w);
            out.push_back(-w);
        }
    }
    return out;
}

ParamSymbol sym_inv(const ParamSymbol& a)
{
    if (auto* c = constant_value(a)) {
        if (smallest_singular_ratio(*c) < 1e-13) throw PreconditionError("sym_inv: not invertible (constant)");
        return constant_symbol(a.p(), c->rows() == 1 ? Matrix(Matrix::Constant(1, 1, 1.0 / (*c)(0, 0)))
                                                     : Matrix(c->partialPivLu().inverse()));
    }
    Principal lead = find_principal(a);
    for (const auto& w : sphere_samples(a.p())) {
        if (smallest_singular_ratio(lead.angular->eval(w)) < 1e-10)
            throw PreconditionError("sym_inv: not elliptic (leading term singular at omega=" + format_mu(w) + ")");
    }
    if (a.has_values()) {
        for (double r : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0}) {
            for (const auto& w : sphere_samples(a.p())) {
                const RealVec mu = r * w;
                if (smallest_singular_ratio(a.eval(mu)) < 1e-12)
                    throw PreconditionError("sym_inv: not invertible at mu=" + format_mu(mu));
                if (r == 0.0) break;
            }
        }
    }
    return ParamSymbol(std::make_shared<InverseNode>(a, std::move(lead)));
}

ParamSymbol sym_partial(const ParamSymbol& a, int j) { return a.partial(j); }

ParamSymbol sym_trace(const ParamSymbol& a)
{
    if (a.N() == 1) return a;
    if (a.is_zero()) return zero_symbol(a.p(), 1);
    if (auto* c = constant_value(a)) return scalar_constant(a.p(), c->trace());
    return ParamSymbol(std::make_shared<TraceNode>(a));
}

ParamSymbol symbol_class(const ParamSymbol& a)
{
    if (!a.has_values()) return a;
    if (a.is_zero()) return a;
    return ParamSymbol(std::make_shared<ClassNode>(a));
}

ParamSymbol fd_partial(const ParamSymbol& a, int j)
{
    if (j < 0 || j >= a.p()) throw PreconditionError("fd_partial: axis out of range");
    return ParamSymbol(std::make_shared<PartialNode>(a, j, nullptr));
}

std::vector<HomogTerm> leading_part(const ParamSymbol& a, int n_terms)
{
    if (n_terms <= 0) return {};
    if (a.order() == kNegInf) return {};
    double t = a.order() - 0.5;
    for (int attempt = 0; attempt < 256; ++attempt, t -= 1.0) {
        const Expansion e = a.expansion(t);
        if (static_cast<int>(e.terms.size()) >= n_terms)
            return std::vector<HomogTerm>(e.terms.begin(), e.terms.begin() + n_terms);
        if (e.remainder_order == kNegInf) return e.terms;
        if (e.remainder_order > t + kDegreeEps)
            throw PreconditionError("leading_part: n_terms exceeds the available expansion");
    }
    throw PreconditionError("leading_part: n_terms exceeds the available expansion");
}

ExpansionCheck check_expansion(const ParamSymbol& a, double target)
{
    const Expansion e = a.expansion(target);
    ExpansionCheck out;
    double c[2] = {0.0, 0.0};
    const double radii[2] = {1e2, 1e3};
    for (int i = 0; i < 2; ++i) {
        for (const auto& w : sphere_samples(a.p())) {
            const RealVec mu = radii[i] * w;
            const Matrix v = a.eval(mu);
            const double resid = (v - e.eval(mu, a.N())).norm();
            const double floor = 1e-13 * std::max(1.0, v.norm());
            const double scale = e.remainder_order == kNegInf ? 1.0 : std::pow(radii[i], e.remainder_order);
            c[i] = std::max(c[i], std::max(0.0, resid - floor) / scale);
        }
    }
    out.constant_small = c[0];
    out.constant_large = c[1];
    out.stable = e.remainder_order == kNegInf ? (c[0] == 0.0 && c[1] == 0.0) : c[1] <= 4.0 * c[0] + 1e-300;
    return out;
}

} // namespace divflow
