#pragma once

#include "divflow/forms.hpp"
#include "divflow/symbol.hpp"

#include <functional>
#include <map>
#include <vector>

namespace divflow {

struct ChainWord {
    cplx coef = 1.0;
    std::vector<ParamSymbol> letters;
};

// Formal linear combination of words a_0 (x) ... (x) a_n, graded by n.
class TensorChain {
public:
    TensorChain() = default;
    TensorChain(int p, int n) : p_(p), n_(n) {}

    int p() const { return p_; }
    int N() const { return n_; }

    // Words with identical letters (by node identity) are merged.
    void add_word(cplx coef, std::vector<ParamSymbol> letters);
    TensorChain& add(const TensorChain& other, cplx coef = 1.0);

    const std::vector<ChainWord>& component(int degree) const;
    std::vector<int> degrees() const;
    bool empty() const;
    std::size_t word_count() const;

private:
    int p_ = 1;
    int n_ = 1;
    std::map<int, std::vector<ChainWord>> components_;
};

TensorChain chain_scale(cplx c, const TensorChain& a);
TensorChain chain_add(const TensorChain& a, const TensorChain& b, cplx cb = 1.0);
// Keeps components of degree <= max_degree.
TensorChain chain_truncate(const TensorChain& a, int max_degree);

// b and Connes' B = (1 - t) s N. On normalized cochains B agrees with the adjoint
// of sum_j (-1)^{nj} phi(1, a_j, .., a_{j-1}); the degenerate a_j (x) 1 terms carry a
// plus sign so that B^2 = bB + Bb = 0 hold on the unnormalized complex as well.
TensorChain b_chain(const TensorChain& c);
TensorChain B_chain(const TensorChain& c);

// Odd Chern character, components of degree 1, 3, ..., 2K+1.
TensorChain ch_odd(const ParamSymbol& g, int K);
// Secondary character, degrees 0, 2, ..., 2K+2.
TensorChain ch_sec_odd(const ParamSymbol& g, const ParamSymbol& h, int K);
// Second secondary character, degrees 1, 3, ..., 2K+3.
TensorChain ch_sec2_odd(const ParamSymbol& g, const ParamSymbol& h1, const ParamSymbol& h2, int K);

// Even Chern character of an idempotent, degrees 0, 2, ..., 2K.
TensorChain ch_even(const ParamSymbol& e, int K);
// Inserts h after every slot with alternating sign.
TensorChain iota(const ParamSymbol& h, const TensorChain& c);
TensorChain ch_sec_even(const ParamSymbol& e, const ParamSymbol& h, int K);

// Smooth family s -> a_s on [0, 1] with its s-derivative.
struct SymbolPath {
    int p = 1;
    int N = 1;
    std::function<ParamSymbol(double)> family;
    std::function<ParamSymbol(double)> derivative;
    // Interior points where the family is only piecewise smooth in s.
    std::vector<double> breakpoints;

    ParamSymbol at(double s) const { return family(s); }
    ParamSymbol dot(double s) const { return derivative(s); }
};

// If derivative is empty it is filled with a 5-point finite difference (h = 1e-3,
// one-sided near the ends and breakpoints).
SymbolPath make_path(int p, int n, std::function<ParamSymbol(double)> family,
                     std::function<ParamSymbol(double)> derivative = nullptr,
                     std::vector<double> breakpoints = {});

// Composite Gauss rule with n_s nodes on every smooth piece of [0, 1].
std::vector<std::pair<double, double>> path_rule(const SymbolPath& path, int n_s);

// Throws PreconditionError unless a_0, a_1 are invertible and sampled a_s are elliptic.
void check_admissible(const SymbolPath& path, bool endpoints_invertible = true);

struct RelativeChain {
    TensorChain bulk;
    TensorChain boundary;  // letters are leading-part classes
};

// (ch(a_1) - ch(a_0), -int_0^1 /ch(sigma(a_s), sigma(a_s')) ds) with an n_s point
// composite Gauss rule in s.
RelativeChain relative_ch_path(const SymbolPath& path, int K, int n_s);
// Even analogue for paths of almost idempotents: /ch(sigma(f), sigma((2f - 1) f')).
RelativeChain relative_ch_path_even(const SymbolPath& path, int K, int n_s);

// Cocycle used in a pairing; the character of the regularized relative cycle by default.
struct Cochain {
    std::function<cplx(const std::vector<ParamSymbol>&)> bulk;      // phi
    std::function<cplx(const std::vector<ParamSymbol>&)> boundary;  // psi
    int degree = 1;  // degree of phi; psi has degree - 1
};

Cochain character_cochain(int p, const QuadConfig& cfg, FormalTraceMethod method = FormalTraceMethod::Sphere);

// <phi, c_degree>
cplx pair(const Cochain& phi, const TensorChain& c);
// <phi, bulk_degree> + <psi, boundary_{degree - 1}>
cplx pair(const Cochain& phi, const RelativeChain& c);

} // namespace divflow
