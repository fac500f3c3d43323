#pragma once

#include "divflow/chains.hpp"
#include "divflow/clifford.hpp"
#include "divflow/quadrature.hpp"
#include "divflow/symbol.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace divflow {

// Piecewise linear path of Hermitian matrices through (s_i, H_i), s_0 = 0, s_last = 1.
class HermitianPath {
public:
    HermitianPath() = default;
    HermitianPath(std::vector<double> s, std::vector<Matrix> h);

    int N() const { return n_; }
    const std::vector<double>& knots() const { return s_; }
    const std::vector<Matrix>& matrices() const { return h_; }

    Matrix at(double s) const;
    // Slope on the piece containing s (right-continuous, left slope at s = 1).
    Matrix slope(double s) const;
    std::vector<double> breakpoints() const;

private:
    std::size_t piece(double s) const;

    int n_ = 0;
    std::vector<double> s_;
    std::vector<Matrix> h_;
};

// D_s = (2s - 1) Id_n
HermitianPath linear_crossing_path(int n = 1);

struct FlowPart {
    std::string name;
    cplx value;
};

struct FlowResult {
    cplx value = 0.0;
    std::int64_t snapped = 0;
    double residual = 0.0;  // |value - snapped|
    std::vector<FlowPart> parts;
    std::map<std::string, double> diagnostics;
};

// Sums the parts and snaps to the nearest integer.
FlowResult make_flow_result(std::vector<FlowPart> parts, std::map<std::string, double> diagnostics = {});

// Eigenvalue crossings through 0; direction +1 for an up-crossing.
struct Crossing {
    double s = 0.0;
    int direction = 0;
};

struct SpectralFlowResult {
    int value = 0;
    std::vector<Crossing> crossings;
    int intervals = 0;  // certified s-intervals after refinement
};

// Signed count of eigenvalue crossings. Each s-interval is bisected until a
// Lipschitz bound on the eigenvalues excludes a zero inside it, or until it
// brackets a single sign change. The count is repeated from a grid twice as
// fine and must agree.
SpectralFlowResult spectral_flow_details(const HermitianPath& path, int n_s = 16);
int spectral_flow(const HermitianPath& path, int n_s = 16);

// Sorted eigenvalues of a Hermitian matrix.
RealVec hermitian_eigenvalues(const Matrix& d);

// sum of signs of nonzero eigenvalues; zero means |lambda| <= tol.
double eta_spectral(const Matrix& d, double tol = 1e-10);
// (eta + dim ker) / 2
double eta_reduced(const Matrix& d, double tol = 1e-10);

// Gamma((p+1)/2) / pi^{(p+1)/2} * TR-bar(D (D^2 + |mu|^2)^{-(p+1)/2})
cplx eta_parametric(const Matrix& d, int p, const QuadConfig& cfg);
// 2 Gamma(z) / (sqrt(pi) Gamma(z - 1/2)) int_0^inf r^{2z-2} tr D (D^2 + r^2)^{-z} dr, z = (p+1)/2
cplx eta_parametric_radial(const Matrix& d, int p, const QuadConfig& cfg);

// D_s (x) I + sign c(mu) on C^N (x) C^{2^k}, p odd.
SymbolPath suspend_odd(const HermitianPath& path, int p, int sign = 1);
// gamma (D (x) I + c(mu)) for p = 2k.
ParamSymbol suspend_even(const Matrix& d, int k);
// (1/2)(I - Q^{-1} D_{2k}), Q = (D^2 + |mu|^2)^{1/2} (x) I.
ParamSymbol idempotent_from_D(const Matrix& d, int k);
// Almost idempotents (1/2)(I - Q_s^{-1} D_{2k,s}) with Q_s^2 = D_{2k,s}^2 + phi(|mu|) phi(D_s^2),
// endpoints moved affinely onto idempotent_from_D(D_0), idempotent_from_D(D_1).
SymbolPath almost_idempotent_path(const HermitianPath& path, int k, const Cutoff& phi = default_cutoff());

// Odd divisor flow for p = 2k + 1. Parts: endpoint_1, endpoint_0, correction.
FlowResult divisor_flow_odd(const SymbolPath& path, int k, const QuadConfig& cfg);
// Even divisor flow for p = 2k. Parts: endpoint_1, endpoint_0, correction.
FlowResult divisor_flow_even(const SymbolPath& path, int k, const QuadConfig& cfg);
// DF through the relative Chern character and the character cochain.
cplx df_via_pairing(const SymbolPath& path, int k, const QuadConfig& cfg);

// TR-bar((P - 1/2)(dP)^{2k})
cplx even_eta_trace(const ParamSymbol& projection, int k, const QuadConfig& cfg);
// -2 / ((2 pi i)^k k!) * even_eta_trace
cplx eta_even(const ParamSymbol& projection, int k, const QuadConfig& cfg);

// Families

// ((mu + i)/(mu - i))^n, p = 1.
ParamSymbol winding_symbol(int n);
// 1 + s (g - 1) for a p = 1 symbol g equal to 1 at infinity.
SymbolPath linear_path_to(const ParamSymbol& g);
// V diag(g^{n_j}) V^{-1}, p = 1.
ParamSymbol winding_matrix_symbol(const std::vector<int>& exponents, const Matrix& v);
// 1 + s * amplitude * bump(mu) * m, p = 1; winding number 0.
SymbolPath bump_path(const Matrix& m, cplx amplitude, double width, double center);
SymbolPath constant_path(const ParamSymbol& a);
// s -> a_s b_s
SymbolPath product_path(const SymbolPath& a, const SymbolPath& b);
// s -> a_{f(s)} for a monotone map f of [0, 1] onto itself with derivative df.
SymbolPath reparametrize(const SymbolPath& a, std::function<double(double)> f, std::function<double(double)> df);

struct WindingFamily {
    std::vector<int> exponents;
    Matrix v;
    int expected() const;
};
// N in {1, 2}, exponents in [-2, 2], V well conditioned.
WindingFamily random_winding_family(std::mt19937& rng);
// N in [1, max_n], 2 to 4 knots, endpoints with |lambda| >= 0.1.
HermitianPath random_hermitian_path(std::mt19937& rng, int max_n = 3, int max_knots = 4);

} // namespace divflow
