#pragma once

#include "divflow/types.hpp"

#include <memory>
#include <mutex>
#include <utility>
#include <vector>

namespace divflow {

class AngularNode;
using Angular = std::shared_ptr<const AngularNode>;

// Matrix-valued function on the unit sphere S^{p-1}, identified with its
// 0-homogeneous extension to R^p \ 0. derivative(j) is d/dmu_j of that
// extension restricted to the sphere (homogeneous of degree -1).
class AngularNode {
public:
    AngularNode(int p, int n) : p_(p), n_(n) {}
    virtual ~AngularNode() = default;

    int p() const { return p_; }
    int n() const { return n_; }

    virtual Matrix eval(const RealVec& omega) const = 0;
    virtual bool is_zero() const { return false; }
    // Non-null for nodes that do not depend on omega.
    virtual const Matrix* constant_value() const { return nullptr; }

    Angular derivative(int j) const;

protected:
    virtual Angular compute_derivative(int j) const = 0;

private:
    int p_;
    int n_;
    mutable std::mutex mutex_;
    mutable std::vector<Angular> dcache_;
};

Angular ang_zero(int p, int n);
Angular ang_const(int p, const Matrix& m);
// coef * prod_j omega_j^{exps[j]}, exps nonnegative.
Angular ang_monomial(int p, const Matrix& coef, const std::vector<int>& exps);
// p = 1 only: value at omega = +1 and at omega = -1.
Angular ang_sign(const Matrix& plus, const Matrix& minus);
Angular ang_add(const std::vector<std::pair<cplx, Angular>>& parts);
Angular ang_add(const Angular& a, const Angular& b);
Angular ang_scale(cplx c, const Angular& a);
// Matrix product; a 1x1 factor acts as a scalar.
Angular ang_mul(const Angular& a, const Angular& b);
Angular ang_inv(const Angular& a);
Angular ang_trace(const Angular& a);

} // namespace divflow
