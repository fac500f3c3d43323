#pragma once

#include "divflow/quadrature.hpp"
#include "divflow/symbol.hpp"

#include <map>
#include <vector>

namespace divflow {

// Symbol-valued differential form on R^p. A multi-index I = {i_1 < ... < i_q}
// is stored as the bitmask sum 2^{i_k}; axes are 0-based.
struct OperatorForm {
    int p = 1;
    int N = 1;
    int degree = 0;
    std::map<unsigned, ParamSymbol> coefficients;

    // Coefficient of dmu_I, zero symbol if absent.
    ParamSymbol coefficient(unsigned mask) const;
    bool is_zero() const { return coefficients.empty(); }
};

unsigned index_mask(const std::vector<int>& indices);
unsigned top_mask(int p);

OperatorForm zero_form(int p, int n, int degree);
// a as a 0-form.
OperatorForm function_form(const ParamSymbol& a);
// a dmu_{i_1} ^ ... ^ dmu_{i_q}; indices in any order (sign applied), repeats give 0.
OperatorForm basis_form(const ParamSymbol& a, const std::vector<int>& indices);

OperatorForm form_add(const OperatorForm& a, const OperatorForm& b);
OperatorForm form_scale(cplx c, const OperatorForm& a);
OperatorForm form_sub(const OperatorForm& a, const OperatorForm& b);
// Multiply every coefficient by a symbol from the left (right = false) or right.
OperatorForm form_mul_symbol(const ParamSymbol& a, const OperatorForm& w, bool right = false);

OperatorForm wedge(const OperatorForm& a, const OperatorForm& b);
OperatorForm wedge(const std::vector<OperatorForm>& factors);
OperatorForm ext_d(const OperatorForm& a);
// d of a symbol as a 1-form.
OperatorForm ext_d(const ParamSymbol& a);
// a0 da1 ^ ... ^ dak
OperatorForm word_form(const std::vector<ParamSymbol>& word);

// Regularized graded trace: reg_integral of the trace of the top coefficient; 0 below top degree.
cplx tr_bar(const OperatorForm& w, const QuadConfig& cfg);

enum class FormalTraceMethod { Sphere, Definition };
// Formal trace of a (p-1)-form. Sphere: sum_j (-1)^j over S^{p-1} of omega_j times
// the |mu|^{1-p} (log-free) part of tr eta_{all but j}. Definition: tr_bar(d eta).
cplx tr_tilde(const OperatorForm& eta, const QuadConfig& cfg, FormalTraceMethod method = FormalTraceMethod::Sphere);
cplx tr_tilde_sphere(const OperatorForm& eta, const QuadConfig& cfg);
cplx tr_tilde_definition(const OperatorForm& eta, const QuadConfig& cfg);

// phi_k(a0..ak) = TR-bar(a0 da1 ... dak) / k!; zero unless k = p.
cplx character_phi(const std::vector<ParamSymbol>& word, const QuadConfig& cfg);
// psi_{k-1}(b0..b_{k-1}) = TR-tilde(b0 db1 ... db_{k-1}) / (k-1)!; zero unless k = p.
cplx character_psi(const std::vector<ParamSymbol>& word, const QuadConfig& cfg,
                   FormalTraceMethod method = FormalTraceMethod::Sphere);

} // namespace divflow
