#include "divflow/forms.hpp"

#include "divflow/regint.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace divflow {

namespace {

void require_compatible(const OperatorForm& a, const OperatorForm& b, const char* op)
{
    if (a.p != b.p || a.N != b.N) {
        throw PreconditionError(std::string(op) + ": forms have different (p, N): (" + std::to_string(a.p) + ", " +
                                std::to_string(a.N) + ") vs (" + std::to_string(b.p) + ", " +
                                std::to_string(b.N) + ")");
    }
}

// Sign of dmu_I ^ dmu_J relative to dmu_{I u J}; 0 if they overlap.
int merge_sign(unsigned I, unsigned J)
{
    if (I & J) return 0;
    int inversions = 0;
    for (unsigned rest = J; rest; rest &= rest - 1) {
        const unsigned j = static_cast<unsigned>(std::countr_zero(rest));
        inversions += std::popcount(I >> (j + 1));
    }
    return inversions % 2 ? -1 : 1;
}

void accumulate(OperatorForm& w, unsigned mask, cplx c, const ParamSymbol& a)
{
    if (a.is_zero() || c == 0.0) return;
    ParamSymbol term = c == 1.0 ? a : sym_scale(c, a);
    auto it = w.coefficients.find(mask);
    if (it == w.coefficients.end()) {
        w.coefficients.emplace(mask, term);
        return;
    }
    ParamSymbol sum = sym_add(it->second, term);
    if (sum.is_zero())
        w.coefficients.erase(it);
    else
        it->second = sum;
}

double factorial(int k) { return std::tgamma(k + 1.0); }

} // namespace

ParamSymbol OperatorForm::coefficient(unsigned mask) const
{
    auto it = coefficients.find(mask);
    return it == coefficients.end() ? zero_symbol(p, N) : it->second;
}

unsigned index_mask(const std::vector<int>& indices)
{
    unsigned m = 0;
    for (int i : indices) m |= 1u << i;
    return m;
}

unsigned top_mask(int p) { return (1u << p) - 1u; }

OperatorForm zero_form(int p, int n, int degree)
{
    if (p < 1 || p > 3) throw PreconditionError("zero_form: p must be 1, 2 or 3");
    if (degree < 0) throw PreconditionError("zero_form: negative degree");
    OperatorForm w;
    w.p = p;
    w.N = n;
    w.degree = degree;
    return w;
}

OperatorForm function_form(const ParamSymbol& a)
{
    OperatorForm w = zero_form(a.p(), a.N(), 0);
    accumulate(w, 0u, 1.0, a);
    return w;
}

OperatorForm basis_form(const ParamSymbol& a, const std::vector<int>& indices)
{
    OperatorForm w = zero_form(a.p(), a.N(), static_cast<int>(indices.size()));
    unsigned mask = 0;
    int sign = 1;
    for (int i : indices) {
        if (i < 0 || i >= a.p()) {
            throw PreconditionError("basis_form: axis " + std::to_string(i) + " outside [0, " +
                                    std::to_string(a.p()) + ")");
        }
        const int s = merge_sign(mask, 1u << i);
        if (s == 0) return w;
        sign *= s;
        mask |= 1u << i;
    }
    accumulate(w, mask, static_cast<double>(sign), a);
    return w;
}

OperatorForm form_add(const OperatorForm& a, const OperatorForm& b)
{
    require_compatible(a, b, "form_add");
    if (b.is_zero() && b.degree != a.degree) return a;
    if (a.is_zero() && b.degree != a.degree) return b;
    if (a.degree != b.degree) {
        throw PreconditionError("form_add: degrees differ (" + std::to_string(a.degree) + " vs " +
                                std::to_string(b.degree) + ")");
    }
    OperatorForm w = a;
    for (const auto& [mask, c] : b.coefficients) accumulate(w, mask, 1.0, c);
    return w;
}

OperatorForm form_scale(cplx c, const OperatorForm& a)
{
    OperatorForm w = zero_form(a.p, a.N, a.degree);
    for (const auto& [mask, coef] : a.coefficients) accumulate(w, mask, c, coef);
    return w;
}

OperatorForm form_sub(const OperatorForm& a, const OperatorForm& b) { return form_add(a, form_scale(-1.0, b)); }

OperatorForm form_mul_symbol(const ParamSymbol& a, const OperatorForm& w, bool right)
{
    OperatorForm out = zero_form(w.p, w.N, w.degree);
    for (const auto& [mask, coef] : w.coefficients)
        accumulate(out, mask, 1.0, right ? sym_mul(coef, a) : sym_mul(a, coef));
    return out;
}

OperatorForm wedge(const OperatorForm& a, const OperatorForm& b)
{
    require_compatible(a, b, "wedge");
    OperatorForm w = zero_form(a.p, a.N, a.degree + b.degree);
    if (w.degree > w.p) return w;
    for (const auto& [I, ca] : a.coefficients) {
        for (const auto& [J, cb] : b.coefficients) {
            const int s = merge_sign(I, J);
            if (s != 0) accumulate(w, I | J, static_cast<double>(s), sym_mul(ca, cb));
        }
    }
    return w;
}

OperatorForm wedge(const std::vector<OperatorForm>& factors)
{
    if (factors.empty()) throw PreconditionError("wedge: empty product");
    OperatorForm w = factors.front();
    for (std::size_t i = 1; i < factors.size(); ++i) w = wedge(w, factors[i]);
    return w;
}

OperatorForm ext_d(const OperatorForm& a)
{
    OperatorForm w = zero_form(a.p, a.N, a.degree + 1);
    if (w.degree > w.p) return w;
    for (const auto& [I, c] : a.coefficients) {
        for (int j = 0; j < a.p; ++j) {
            const unsigned bit = 1u << j;
            if (I & bit) continue;
            const int s = std::popcount(I & (bit - 1)) % 2 ? -1 : 1;
            accumulate(w, I | bit, static_cast<double>(s), c.partial(j));
        }
    }
    return w;
}

OperatorForm ext_d(const ParamSymbol& a) { return ext_d(function_form(a)); }

OperatorForm word_form(const std::vector<ParamSymbol>& word)
{
    if (word.empty()) throw PreconditionError("word_form: empty word");
    OperatorForm w = function_form(word.front());
    for (std::size_t i = 1; i < word.size(); ++i) {
        if (word[i].p() != w.p || word[i].N() != w.N)
            throw PreconditionError("word_form: letters have different (p, N)");
        w = wedge(w, ext_d(word[i]));
        if (w.is_zero() && w.degree > w.p) break;
    }
    return w;
}

cplx tr_bar(const OperatorForm& w, const QuadConfig& cfg)
{
    if (w.degree != w.p) return 0.0;
    auto it = w.coefficients.find(top_mask(w.p));
    if (it == w.coefficients.end()) return 0.0;
    return reg_integral(sym_trace(it->second), cfg);
}

cplx tr_tilde_sphere(const OperatorForm& eta, const QuadConfig& cfg)
{
    const int p = eta.p;
    if (eta.degree != p - 1) {
        throw PreconditionError("tr_tilde: form has degree " + std::to_string(eta.degree) + ", expected " +
                                std::to_string(p - 1));
    }
    const double target_degree = 1.0 - p;
    const SphereRule rule = sphere_rule(p, cfg);
    cplx total = 0.0;
    for (int j = 0; j < p; ++j) {
        auto it = eta.coefficients.find(top_mask(p) & ~(1u << j));
        if (it == eta.coefficients.end()) continue;
        const Expansion e = sym_trace(it->second).expansion(target_degree - 0.5);
        if (!(e.remainder_order < target_degree)) {
            throw PreconditionError("tr_tilde: coefficient expansion reaches only order " +
                                    std::to_string(e.remainder_order) + ", need < " +
                                    std::to_string(target_degree));
        }
        cplx part = 0.0;
        for (const HomogTerm& t : e.terms) {
            if (t.log_power != 0 || std::abs(t.degree - target_degree) > 1e-9) continue;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q)
                part += rule.weights[q] * rule.nodes[q](j) * t.eval(rule.nodes[q])(0, 0);
        }
        total += (j % 2 ? -1.0 : 1.0) * part;
    }
    return total;
}

cplx tr_tilde_definition(const OperatorForm& eta, const QuadConfig& cfg)
{
    if (eta.degree != eta.p - 1) {
        throw PreconditionError("tr_tilde: form has degree " + std::to_string(eta.degree) + ", expected " +
                                std::to_string(eta.p - 1));
    }
    return tr_bar(ext_d(eta), cfg);
}

cplx tr_tilde(const OperatorForm& eta, const QuadConfig& cfg, FormalTraceMethod method)
{
    return method == FormalTraceMethod::Sphere ? tr_tilde_sphere(eta, cfg) : tr_tilde_definition(eta, cfg);
}

cplx character_phi(const std::vector<ParamSymbol>& word, const QuadConfig& cfg)
{
    if (word.empty()) throw PreconditionError("character_phi: empty word");
    const int k = static_cast<int>(word.size()) - 1;
    if (k != word.front().p()) return 0.0;
    return tr_bar(word_form(word), cfg) / factorial(k);
}

cplx character_psi(const std::vector<ParamSymbol>& word, const QuadConfig& cfg, FormalTraceMethod method)
{
    if (word.empty()) throw PreconditionError("character_psi: empty word");
    const int k = static_cast<int>(word.size());
    if (k != word.front().p()) return 0.0;
    return tr_tilde(word_form(word), cfg, method) / factorial(k - 1);
}

} // namespace divflow
