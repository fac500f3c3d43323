#include "divflow/angular.hpp"

#include <cmath>

namespace divflow {

Angular AngularNode::derivative(int j) const
{
    if (j < 0 || j >= p_) throw PreconditionError("angular derivative: axis out of range");
    std::lock_guard<std::mutex> lock(mutex_);
    if (dcache_.empty()) dcache_.resize(p_);
    if (!dcache_[j]) dcache_[j] = compute_derivative(j);
    return dcache_[j];
}

namespace {

Matrix scalar_times(const Matrix& a, const Matrix& b)
{
    if (a.rows() == 1 && b.rows() != 1) return a(0, 0) * b;
    if (b.rows() == 1 && a.rows() != 1) return b(0, 0) * a;
    return a * b;
}

class ZeroAngular final : public AngularNode {
public:
    ZeroAngular(int p, int n) : AngularNode(p, n), value_(Matrix::Zero(n, n)) {}
    Matrix eval(const RealVec&) const override { return value_; }
    bool is_zero() const override { return true; }
    const Matrix* constant_value() const override { return &value_; }

protected:
    Angular compute_derivative(int) const override { return ang_zero(p(), n()); }

private:
    Matrix value_;
};

class ConstAngular final : public AngularNode {
public:
    ConstAngular(int p, Matrix m) : AngularNode(p, static_cast<int>(m.rows())), value_(std::move(m)) {}
    Matrix eval(const RealVec&) const override { return value_; }
    const Matrix* constant_value() const override { return &value_; }

protected:
    Angular compute_derivative(int) const override { return ang_zero(p(), n()); }

private:
    Matrix value_;
};

class MonomialAngular final : public AngularNode {
public:
    MonomialAngular(int p, Matrix coef, std::vector<int> exps)
        : AngularNode(p, static_cast<int>(coef.rows())), coef_(std::move(coef)), exps_(std::move(exps))
    {
    }

    Matrix eval(const RealVec& omega) const override
    {
        double v = 1.0;
        for (int j = 0; j < p(); ++j)
            if (exps_[j] > 0) v *= std::pow(omega(j), exps_[j]);
        return v * coef_;
    }

protected:
    // d_i (mu^a / r^|a|) on the sphere = a_i w^{a - e_i} - |a| w^a w_i
    Angular compute_derivative(int i) const override
    {
        int total = 0;
        for (int e : exps_) total += e;
        std::vector<std::pair<cplx, Angular>> parts;
        if (exps_[i] > 0) {
            auto lowered = exps_;
            lowered[i] -= 1;
            parts.emplace_back(static_cast<double>(exps_[i]), ang_monomial(p(), coef_, lowered));
        }
        if (total > 0) {
            auto raised = exps_;
            raised[i] += 1;
            parts.emplace_back(-static_cast<double>(total), ang_monomial(p(), coef_, raised));
        }
        return ang_add(parts);
    }

private:
    Matrix coef_;
    std::vector<int> exps_;
};

class SignAngular final : public AngularNode {
public:
    SignAngular(Matrix plus, Matrix minus)
        : AngularNode(1, static_cast<int>(plus.rows())), plus_(std::move(plus)), minus_(std::move(minus))
    {
    }
    Matrix eval(const RealVec& omega) const override { return omega(0) > 0 ? plus_ : minus_; }

protected:
    Angular compute_derivative(int) const override { return ang_zero(1, n()); }

private:
    Matrix plus_;
    Matrix minus_;
};

class SumAngular final : public AngularNode {
public:
    SumAngular(int p, int n, std::vector<std::pair<cplx, Angular>> parts)
        : AngularNode(p, n), parts_(std::move(parts))
    {
    }

    Matrix eval(const RealVec& omega) const override
    {
        Matrix out = Matrix::Zero(n(), n());
        for (const auto& [c, a] : parts_) {
            Matrix v = a->eval(omega);
            if (v.rows() == 1 && n() != 1)
                out.diagonal().array() += c * v(0, 0);
            else
                out += c * v;
        }
        return out;
    }

protected:
    Angular compute_derivative(int j) const override
    {
        std::vector<std::pair<cplx, Angular>> d;
        for (const auto& [c, a] : parts_) d.emplace_back(c, a->derivative(j));
        return ang_add(d);
    }

private:
    std::vector<std::pair<cplx, Angular>> parts_;
};

class ProductAngular final : public AngularNode {
public:
    ProductAngular(Angular a, Angular b)
        : AngularNode(a->p(), std::max(a->n(), b->n())), a_(std::move(a)), b_(std::move(b))
    {
    }
    Matrix eval(const RealVec& omega) const override { return scalar_times(a_->eval(omega), b_->eval(omega)); }

protected:
    Angular compute_derivative(int j) const override
    {
        return ang_add(ang_mul(a_->derivative(j), b_), ang_mul(a_, b_->derivative(j)));
    }

private:
    Angular a_;
    Angular b_;
};

class InverseAngular final : public AngularNode {
public:
    explicit InverseAngular(Angular a) : AngularNode(a->p(), a->n()), a_(std::move(a)) {}
    Matrix eval(const RealVec& omega) const override
    {
        Matrix v = a_->eval(omega);
        if (v.rows() == 1) return Matrix::Constant(1, 1, 1.0 / v(0, 0));
        return v.partialPivLu().inverse();
    }

protected:
    Angular compute_derivative(int j) const override
    {
        auto self = ang_inv(a_);
        return ang_scale(-1.0, ang_mul(ang_mul(self, a_->derivative(j)), self));
    }

private:
    Angular a_;
};

class TraceAngular final : public AngularNode {
public:
    explicit TraceAngular(Angular a) : AngularNode(a->p(), 1), a_(std::move(a)) {}
    Matrix eval(const RealVec& omega) const override { return Matrix::Constant(1, 1, a_->eval(omega).trace()); }

protected:
    Angular compute_derivative(int j) const override { return ang_trace(a_->derivative(j)); }

private:
    Angular a_;
};

} // namespace

Angular ang_zero(int p, int n) { return std::make_shared<ZeroAngular>(p, n); }

Angular ang_const(int p, const Matrix& m)
{
    if (m.isZero(0.0)) return ang_zero(p, static_cast<int>(m.rows()));
    return std::make_shared<ConstAngular>(p, m);
}

Angular ang_monomial(int p, const Matrix& coef, const std::vector<int>& exps)
{
    if (static_cast<int>(exps.size()) != p) throw PreconditionError("ang_monomial: exponent count != p");
    bool constant = true;
    for (int e : exps) {
        if (e < 0) throw PreconditionError("ang_monomial: negative exponent");
        if (e > 0) constant = false;
    }
    if (constant || coef.isZero(0.0)) return ang_const(p, coef);
    return std::make_shared<MonomialAngular>(p, coef, exps);
}

Angular ang_sign(const Matrix& plus, const Matrix& minus)
{
    if ((plus - minus).isZero(0.0)) return ang_const(1, plus);
    return std::make_shared<SignAngular>(plus, minus);
}

Angular ang_add(const std::vector<std::pair<cplx, Angular>>& parts)
{
    if (parts.empty()) throw PreconditionError("ang_add: empty sum");
    const int p = parts.front().second->p();
    int n = 1;
    for (const auto& part : parts) n = std::max(n, part.second->n());

    std::vector<std::pair<cplx, Angular>> kept;
    Matrix constant = Matrix::Zero(n, n);
    bool has_constant = false;
    for (const auto& [c, a] : parts) {
        if (c == 0.0 || a->is_zero()) continue;
        if (const Matrix* v = a->constant_value()) {
            if (v->rows() == 1 && n != 1)
                constant.diagonal().array() += c * (*v)(0, 0);
            else
                constant += c * *v;
            has_constant = true;
            continue;
        }
        kept.emplace_back(c, a);
    }
    if (has_constant && !constant.isZero(0.0)) kept.emplace_back(1.0, ang_const(p, constant));
    if (kept.empty()) return ang_zero(p, n);
    if (kept.size() == 1 && kept.front().first == 1.0 && kept.front().second->n() == n) return kept.front().second;
    return std::make_shared<SumAngular>(p, n, std::move(kept));
}

Angular ang_add(const Angular& a, const Angular& b) { return ang_add({{1.0, a}, {1.0, b}}); }

Angular ang_scale(cplx c, const Angular& a) { return ang_add({{c, a}}); }

Angular ang_mul(const Angular& a, const Angular& b)
{
    if (a->n() != b->n() && a->n() != 1 && b->n() != 1) throw PreconditionError("ang_mul: size mismatch");
    const int n = std::max(a->n(), b->n());
    if (a->is_zero() || b->is_zero()) return ang_zero(a->p(), n);
    const Matrix* ca = a->constant_value();
    const Matrix* cb = b->constant_value();
    if (ca && cb) return ang_const(a->p(), scalar_times(*ca, *cb));
    if (ca && ca->rows() == n && ca->isIdentity(0.0) && b->n() == n) return b;
    if (cb && cb->rows() == n && cb->isIdentity(0.0) && a->n() == n) return a;
    return std::make_shared<ProductAngular>(a, b);
}

Angular ang_inv(const Angular& a)
{
    if (const Matrix* v = a->constant_value()) {
        if (a->is_zero()) throw PreconditionError("ang_inv: zero profile");
        return ang_const(a->p(), v->rows() == 1 ? Matrix::Constant(1, 1, 1.0 / (*v)(0, 0))
                                                : Matrix(v->partialPivLu().inverse()));
    }
    return std::make_shared<InverseAngular>(a);
}

Angular ang_trace(const Angular& a)
{
    if (a->is_zero()) return ang_zero(a->p(), 1);
    if (const Matrix* v = a->constant_value()) return ang_const(a->p(), Matrix::Constant(1, 1, v->trace()));
    if (a->n() == 1) return a;
    return std::make_shared<TraceAngular>(a);
}

} // namespace divflow
