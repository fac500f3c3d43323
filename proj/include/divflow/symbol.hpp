#pragma once

#include "divflow/angular.hpp"
#include "divflow/types.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

namespace divflow {

// angular(mu/|mu|) * |mu|^degree * log(|mu|)^log_power
struct HomogTerm {
    double degree = 0.0;
    int log_power = 0;
    Angular angular;

    Matrix eval(const RealVec& mu) const;
};

// Finite part of an asymptotic expansion at infinity. Terms are sorted by
// decreasing (degree, log_power); eval - sum(terms) = O(|mu|^remainder_order).
struct Expansion {
    std::vector<HomogTerm> terms;
    double remainder_order = kNegInf;

    Matrix eval(const RealVec& mu, int n) const;
    double top_degree() const { return terms.empty() ? remainder_order : terms.front().degree; }
};

Expansion exp_normalize(std::vector<HomogTerm> terms, double remainder_order);
Expansion exp_add(const std::vector<std::pair<cplx, Expansion>>& parts);
// Product truncated to degrees > target. top_a/top_b bound the degrees of the
// full symbols and enter the remainder estimate.
Expansion exp_mul(const Expansion& a, const Expansion& b, double target, double top_a, double top_b);
Expansion exp_derivative(const Expansion& a, int j);
Expansion exp_trace(const Expansion& a);
Expansion exp_truncate(const Expansion& a, double target);

class ParamSymbol;

class SymbolNode : public std::enable_shared_from_this<SymbolNode> {
public:
    SymbolNode(int p, int n, double order, bool has_values = true);
    virtual ~SymbolNode() = default;

    int p() const { return p_; }
    int n() const { return n_; }
    double order() const { return order_; }
    bool has_values() const { return has_values_; }
    virtual bool is_zero() const { return false; }
    virtual std::string kind() const = 0;

    virtual Matrix eval(const RealVec& mu) const = 0;
    ParamSymbol partial(int j) const;
    // Terms of degree > target; remainder_order <= target unless the
    // symbol cannot be expanded that far (then remainder_order > target).
    Expansion expansion(double target) const;

protected:
    virtual ParamSymbol compute_partial(int j) const;
    virtual Expansion compute_expansion(double target) const = 0;

private:
    int p_;
    int n_;
    double order_;
    bool has_values_;
    mutable std::mutex partial_mutex_;
    mutable std::mutex expansion_mutex_;
    mutable std::vector<std::shared_ptr<const SymbolNode>> partials_;
    mutable std::map<double, Expansion> expansions_;
};

// Immutable handle to a symbol DAG node. Axis indices are 0-based.
class ParamSymbol {
public:
    ParamSymbol() = default;
    explicit ParamSymbol(std::shared_ptr<const SymbolNode> node) : node_(std::move(node)) {}

    bool valid() const { return static_cast<bool>(node_); }
    int p() const { return node_->p(); }
    int N() const { return node_->n(); }
    double order() const { return node_->order(); }
    bool has_values() const { return node_->has_values(); }
    bool is_zero() const { return node_->is_zero(); }
    std::string kind() const { return node_->kind(); }

    Matrix eval(const RealVec& mu) const;
    Matrix eval1(double mu) const;
    ParamSymbol partial(int j) const { return node_->partial(j); }
    Expansion expansion(double target) const { return node_->expansion(target); }
    // Default depth: remainder_order < -p - 1.
    Expansion expansion() const { return expansion(default_target()); }
    double default_target() const { return -p() - 1.5; }
    std::vector<HomogTerm> terms() const { return expansion().terms; }
    double remainder_order() const { return expansion().remainder_order; }
    bool classical() const;

    const SymbolNode* id() const { return node_.get(); }
    const std::shared_ptr<const SymbolNode>& node() const { return node_; }

private:
    std::shared_ptr<const SymbolNode> node_;
};

// Constructors
ParamSymbol zero_symbol(int p, int n);
ParamSymbol constant_symbol(int p, const Matrix& m);
ParamSymbol identity_symbol(int p, int n);
ParamSymbol scalar_constant(int p, cplx c);

struct Monomial {
    std::vector<int> exps;
    Matrix coef;
};
ParamSymbol polynomial_symbol(int p, int n, const std::vector<Monomial>& monomials);
// m0 + sum_j mu_j m[j]
ParamSymbol linear_symbol(int p, const Matrix& m0, const std::vector<Matrix>& m);
// 1x1 symbol mu_j
ParamSymbol coordinate_symbol(int p, int j);
// p = 1 scalar num(mu)/den(mu); coefficients in increasing powers.
ParamSymbol rational_symbol(const std::vector<cplx>& num, const std::vector<cplx>& den);
// (D^2 + |mu|^2)^z for Hermitian D.
ParamSymbol radial_power_symbol(int p, const Matrix& d, double z);
// (D^2 + |mu|^2 + phi(|mu|) phi(D^2))^{-1/2}; phi must vanish for |t| >= 1.
struct Cutoff {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
};
Cutoff default_cutoff();
ParamSymbol cutoff_radial_symbol(int p, const Matrix& d, const Cutoff& phi);
// amplitude * m * psi(|mu - center| / width), psi(t) = exp(1 - 1/(1 - t^2)) on |t| < 1.
ParamSymbol bump_symbol(int p, const Matrix& m, cplx amplitude, double width, const RealVec& center);
// Arbitrary smooth evaluator with a supplied expansion; partials by central differences.
ParamSymbol custom_symbol(int p, int n, double order, std::function<Matrix(const RealVec&)> eval,
                          std::vector<HomogTerm> terms, double remainder_order, std::string name = "custom");

// Algebra
ParamSymbol sym_add(const ParamSymbol& a, const ParamSymbol& b);
ParamSymbol sym_sub(const ParamSymbol& a, const ParamSymbol& b);
ParamSymbol sym_scale(cplx c, const ParamSymbol& a);
ParamSymbol sym_lincomb(const std::vector<std::pair<cplx, ParamSymbol>>& parts);
// Matrix product; a 1x1 factor acts as a scalar.
ParamSymbol sym_mul(const ParamSymbol& a, const ParamSymbol& b);
ParamSymbol sym_mul(const std::vector<ParamSymbol>& factors);
ParamSymbol sym_inv(const ParamSymbol& a);
ParamSymbol sym_partial(const ParamSymbol& a, int j);
ParamSymbol sym_trace(const ParamSymbol& a);
// Leading-part class sigma(a): same expansion, no pointwise values.
ParamSymbol symbol_class(const ParamSymbol& a);
// Central difference partial with step 1e-5 (1 + |mu|); expansion is the termwise derivative.
ParamSymbol fd_partial(const ParamSymbol& a, int j);

std::vector<HomogTerm> leading_part(const ParamSymbol& a, int n_terms);

struct ExpansionCheck {
    double constant_small = 0.0;  // fitted C at R = 1e2
    double constant_large = 0.0;  // fitted C at R = 1e3
    bool stable = false;
};
// Fits |eval - sum terms| <= C R^rho at R in {1e2, 1e3} over sphere samples.
ExpansionCheck check_expansion(const ParamSymbol& a, double target);

// Fixed sample directions on S^{p-1} used for ellipticity checks.
std::vector<RealVec> sphere_samples(int p);

} // namespace divflow
