#include "divflow/clifford.hpp"

#include <algorithm>
#include <numeric>

namespace divflow {

namespace {

Matrix pauli(int which)
{
    Matrix s(2, 2);
    switch (which) {
    case 1: s << 0, 1, 1, 0; break;
    case 2: s << 0, -kI, kI, 0; break;
    case 3: s << 1, 0, 0, -1; break;
    default: s.setIdentity(); break;
    }
    return s;
}

// Hermitian, mutually anticommuting, squaring to Id: 2k strings on k qubits.
std::vector<Matrix> jordan_wigner(int k)
{
    std::vector<Matrix> out;
    for (int m = 0; m < k; ++m) {
        for (int which : {1, 2}) {
            Matrix g = Matrix::Identity(1, 1);
            for (int q = 0; q < k; ++q) {
                int factor = q < m ? 3 : (q == m ? which : 0);
                g = kron(g, pauli(factor));
            }
            out.push_back(std::move(g));
        }
    }
    return out;
}

cplx ipow(int n)
{
    static const cplx table[4] = {1.0, kI, -1.0, -kI};
    return table[((n % 4) + 4) % 4];
}

Matrix ordered_product(const std::vector<Matrix>& gens, int dim)
{
    Matrix out = Matrix::Identity(dim, dim);
    for (const auto& g : gens) out = out * g;
    return out;
}

} // namespace

Matrix kron(const Matrix& a, const Matrix& b)
{
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

CliffordRep build_clifford(int p)
{
    if (p < 1) throw PreconditionError("build_clifford: p must be positive");
    CliffordRep rep;
    rep.p = p;
    rep.k = p / 2;
    const int dim = rep.dim();

    std::vector<Matrix> hermitian = jordan_wigner(rep.k);
    for (const auto& h : hermitian) rep.generators.push_back(kI * h);
    Matrix gamma = ipow(rep.k) * ordered_product(rep.generators, dim);

    if (p % 2 == 0) {
        rep.grading = gamma;
        // gamma is diagonal with entries +-1 in this scheme.
        std::vector<int> order(dim);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return gamma(a, a).real() > gamma(b, b).real();
        });
        Matrix basis = Matrix::Zero(dim, dim);
        for (int col = 0; col < dim; ++col) basis(order[col], col) = 1.0;
        rep.graded_basis = basis;
    } else {
        rep.generators.push_back(kI * gamma);
        Matrix vol = ipow(rep.k + 1) * ordered_product(rep.generators, dim);
        if ((vol - Matrix::Identity(dim, dim)).norm() > 1e-12) {
            for (auto& g : rep.generators) g = -g;
        }
    }
    return rep;
}

Matrix c_of_mu(const CliffordRep& rep, const RealVec& mu)
{
    if (mu.size() != rep.p) throw PreconditionError("c_of_mu: length(mu) != p");
    Matrix out = Matrix::Zero(rep.dim(), rep.dim());
    for (int j = 0; j < rep.p; ++j) out += mu(j) * rep.generators[j];
    return out;
}

Matrix c_of_mu_graded(const CliffordRep& rep, const RealVec& mu)
{
    if (!rep.graded_basis) throw PreconditionError("c_of_mu_graded: p must be even");
    const Matrix& u = *rep.graded_basis;
    return u.adjoint() * c_of_mu(rep, mu) * u;
}

Matrix cplus_of_mu(const CliffordRep& rep, const RealVec& mu)
{
    if (rep.p % 2 != 0) throw PreconditionError("cplus_of_mu: p must be even");
    const int half = rep.dim() / 2;
    return c_of_mu_graded(rep, mu).block(half, 0, half, half);
}

} // namespace divflow
