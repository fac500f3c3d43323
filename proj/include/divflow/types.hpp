#pragma once

#include <Eigen/Dense>

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

namespace divflow {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input violates an operation precondition (dimension, ellipticity, invertibility, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// A numerical procedure failed to meet its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

// Sum of orders with -inf absorbing.
inline double add_orders(double a, double b)
{
    if (a == kNegInf || b == kNegInf) return kNegInf;
    return a + b;
}

} // namespace divflow
