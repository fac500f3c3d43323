#pragma once

#include "divflow/types.hpp"

#include <optional>
#include <vector>

namespace divflow {

// Irreducible complex representation of Cl_p on C^{2^k}, k = floor(p/2).
//
// Generators are built from Jordan-Wigner strings of Pauli matrices. For even
// p = 2k, c(e_j) = i*Gamma_j and gamma = i^k c(e_1)...c(e_p). For odd p the
// last generator is i times the grading of Cl_{p-1}; all generators are then
// negated if needed so that c(i^{k+1} e_1...e_p) = Id.
struct CliffordRep {
    int p = 0;
    int k = 0;
    std::vector<Matrix> generators;
    std::optional<Matrix> grading;
    // Unitary change of basis with basis^* gamma basis = diag(Id, -Id); even p only.
    std::optional<Matrix> graded_basis;

    int dim() const { return 1 << k; }
};

CliffordRep build_clifford(int p);

Matrix kron(const Matrix& a, const Matrix& b);

// sum_j mu_j c(e_j)
Matrix c_of_mu(const CliffordRep& rep, const RealVec& mu);

// Lower-left block of c(mu) in the graded basis (maps the +1 to the -1 eigenspace of gamma).
Matrix cplus_of_mu(const CliffordRep& rep, const RealVec& mu);

// c(mu) written in the graded basis.
Matrix c_of_mu_graded(const CliffordRep& rep, const RealVec& mu);

} // namespace divflow
