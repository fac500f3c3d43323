#pragma once

#include "divflow/quadrature.hpp"
#include "divflow/symbol.hpp"

#include <functional>
#include <vector>

namespace divflow {

// Constant term contributed by int_{R0 <= |mu| <= R} of one homogeneous term
// r^alpha log^l r with the given sphere integral of its angular part.
cplx tail_constant_term(double alpha, int l, cplx sphere_integral, double r0, int p);

// Sphere integral of a scalar angular profile.
cplx sphere_integral(const Angular& a, const SphereRule& rule);

struct RegIntegralParts {
    cplx inner = 0.0;      // int_{|mu| <= R0} f
    cplx tails = 0.0;      // sum of tail constant terms
    cplx remainder = 0.0;  // int_{|mu| >= R0} (f - expansion)
    cplx value() const { return inner + tails + remainder; }
};

// Regularized (constant-term) integral over R^p of a scalar symbol, plain Lebesgue measure.
RegIntegralParts reg_integral_parts(const ParamSymbol& f, const QuadConfig& cfg);
cplx reg_integral(const ParamSymbol& f, const QuadConfig& cfg);

// Ordinary integral over R^p (no regularization), for absolutely integrable
// evaluators; used as a cross-check.
cplx plain_integral(const std::function<cplx(const RealVec&)>& f, int p, const QuadConfig& cfg);

struct RadialTerm {
    cplx coef;
    double alpha;
    int log_power = 0;
};

// Scalar function on (0, inf) with expansion data at infinity and optionally at 0.
struct RadialFunction {
    std::function<cplx(double)> g;
    std::vector<RadialTerm> at_infinity;
    double remainder_at_infinity = kNegInf;
    std::vector<RadialTerm> at_zero;
    double remainder_at_zero = 0.0;
};

// LIM_{eps -> 0} int_eps^1 g + LIM_{R -> inf} int_1^R g
cplx reg_integral_radial(const RadialFunction& f, const QuadConfig& cfg);

} // namespace divflow
