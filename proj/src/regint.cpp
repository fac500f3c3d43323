#include "divflow/regint.hpp"

#include <cmath>

namespace divflow {

namespace {

double factorial(int n)
{
    double v = 1.0;
    for (int i = 2; i <= n; ++i) v *= i;
    return v;
}

// Antiderivative of r^{beta-1} log^l r: r^beta * poly(log r), or log^{l+1}/(l+1) when beta = 0.
double antiderivative(double beta, int l, double r)
{
    const double lr = std::log(r);
    if (std::abs(beta) < 1e-12) return std::pow(lr, l + 1) / (l + 1);
    double poly = 0.0;
    for (int j = 0; j <= l; ++j) {
        const double sign = ((l - j) % 2 == 0) ? 1.0 : -1.0;
        poly += sign * factorial(l) / factorial(j) * std::pow(beta, -(l - j + 1)) * std::pow(lr, j);
    }
    return std::pow(r, beta) * poly;
}

double radial_power(double r, double alpha, int l)
{
    double v = std::pow(r, alpha);
    if (l > 0) v *= std::pow(std::log(r), l);
    return v;
}

} // namespace

cplx tail_constant_term(double alpha, int l, cplx sphere_integral, double r0, int p)
{
    if (!(r0 > 0)) throw PreconditionError("tail_constant_term: R0 must be positive");
    return -antiderivative(alpha + p, l, r0) * sphere_integral;
}

cplx sphere_integral(const Angular& a, const SphereRule& rule)
{
    cplx s = 0.0;
    for (size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * a->eval(rule.nodes[i])(0, 0);
    return s;
}

RegIntegralParts reg_integral_parts(const ParamSymbol& f, const QuadConfig& cfg)
{
    cfg.validate();
    if (f.N() != 1) throw PreconditionError("reg_integral: expected a scalar symbol (N = 1)");
    const int p = f.p();
    RegIntegralParts out;
    if (f.is_zero()) return out;
    if (!f.has_values()) throw PreconditionError("reg_integral: symbol has no pointwise values");

    const Expansion e = f.expansion(-p - cfg.expansion_depth);
    if (!(e.remainder_order < -p))
        throw PreconditionError("reg_integral: insufficient expansion depth (remainder order " +
                                std::to_string(e.remainder_order) + " >= -p)");

    const SphereRule rule = sphere_rule(p, cfg);
    std::vector<cplx> c;
    for (const auto& t : e.terms) c.push_back(sphere_integral(t.angular, rule));

    auto shell_mean = [&](double r) {
        cplx s = 0.0;
        for (size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f.eval(r * rule.nodes[i])(0, 0);
        return s;
    };
    auto expansion_mean = [&](double r) {
        cplx s = 0.0;
        for (size_t t = 0; t < e.terms.size(); ++t)
            s += c[t] * radial_power(r, e.terms[t].degree, e.terms[t].log_power);
        return s;
    };

    const double r0 = cfg.split_radius;
    out.inner = integrate_interval([&](double r) { return std::pow(r, p - 1) * shell_mean(r); }, 0.0, r0, cfg);
    for (size_t t = 0; t < e.terms.size(); ++t)
        out.tails += tail_constant_term(e.terms[t].degree, e.terms[t].log_power, c[t], r0, p);
    out.remainder = integrate_to_infinity(
        [&](double r) { return std::pow(r, p - 1) * (shell_mean(r) - expansion_mean(r)); }, r0, cfg,
        [&](double r) { return std::pow(r, p - 1) * std::abs(expansion_mean(r)); });
    return out;
}

cplx reg_integral(const ParamSymbol& f, const QuadConfig& cfg) { return reg_integral_parts(f, cfg).value(); }

cplx plain_integral(const std::function<cplx(const RealVec&)>& f, int p, const QuadConfig& cfg)
{
    const SphereRule rule = sphere_rule(p, cfg);
    auto radial = [&](double r) {
        cplx s = 0.0;
        for (size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * f(r * rule.nodes[i]);
        return std::pow(r, p - 1) * s;
    };
    return integrate_interval(radial, 0.0, cfg.split_radius, cfg) + integrate_to_infinity(radial, cfg.split_radius, cfg);
}

cplx reg_integral_radial(const RadialFunction& f, const QuadConfig& cfg)
{
    cfg.validate();
    if (!(f.remainder_at_infinity < -1.0))
        throw PreconditionError("reg_integral_radial: expansion at infinity too shallow");
    if (!f.at_zero.empty() && !(f.remainder_at_zero > -1.0))
        throw PreconditionError("reg_integral_radial: expansion at zero too shallow");

    auto sum_terms = [](const std::vector<RadialTerm>& terms, double r) {
        cplx s = 0.0;
        for (const auto& t : terms) s += t.coef * radial_power(r, t.alpha, t.log_power);
        return s;
    };

    cplx value = integrate_interval([&](double r) { return f.g(r) - sum_terms(f.at_zero, r); }, 0.0, 1.0, cfg);
    for (const auto& t : f.at_zero) value += t.coef * antiderivative(t.alpha + 1.0, t.log_power, 1.0);

    for (const auto& t : f.at_infinity) value += tail_constant_term(t.alpha, t.log_power, t.coef, 1.0, 1);
    value += integrate_to_infinity([&](double r) { return f.g(r) - sum_terms(f.at_infinity, r); }, 1.0, cfg,
                                   [&](double r) { return std::abs(sum_terms(f.at_infinity, r)); });
    return value;
}

} // namespace divflow
