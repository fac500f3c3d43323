#pragma once

#include "divflow/types.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace divflow {

struct QuadConfig {
    double split_radius = 1.0;
    // Relative tolerance per adaptive Gauss-Kronrod panel.
    double radial_tol = 1e-12;
    int radial_max_depth = 12;  // at most 2^depth panels
    // Absolute target for the numeric remainder tail (shell increments).
    double tail_tol = 1e-11;
    int max_shells = 200;
    // Extra expansion depth below -p used by reg_integral (remainder <= -p - depth).
    double expansion_depth = 4.0;
    int sphere_nodes_2d = 256;
    int sphere_gauss_3d = 24;  // Gauss-Legendre nodes in cos(theta); 8, 16, 24 or 32
    int sphere_phi_3d = 48;
    // Composite Gauss rule in the path parameter s.
    int path_nodes = 32;
    double path_tol = 1e-7;
    int path_max_doublings = 4;

    void validate() const;
};

struct SphereRule {
    int p = 0;
    std::vector<RealVec> nodes;
    std::vector<double> weights;
};

// p = 1: {+1, -1}; p = 2: trapezoid; p = 3: Gauss (cos theta) x trapezoid (phi).
SphereRule sphere_rule(int p, const QuadConfig& cfg);

// Adaptive Gauss-Kronrod (31-point panels) on [a, b].
cplx integrate_interval(const std::function<cplx(double)>& f, double a, double b, const QuadConfig& cfg,
                        double abs_tol = 1e-14);

// Integral over [a, inf) of a decaying integrand, summed over dyadic shells
// [R, 2R] until increments fall below cfg.tail_tol (or below the roundoff
// floor estimated from `magnitude`, a bound on the unsubtracted integrand).
cplx integrate_to_infinity(const std::function<cplx(double)>& f, double a, const QuadConfig& cfg,
                           const std::function<double(double)>& magnitude = nullptr);

// Nodes and weights of a composite Gauss-Legendre rule with `nodes` points
// (8-point panels) on [a, b].
std::vector<std::pair<double, double>> composite_gauss(double a, double b, int nodes);

} // namespace divflow
