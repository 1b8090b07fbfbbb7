#pragma once

#include <Eigen/Dense>
#include <complex>

namespace fluor {

inline constexpr double kPhysicalityTol = 1e-9;

// Qubit state in modified Bloch coordinates. u = 1 + z = 2*rho_ee is the
// excitation, x and y are the usual coherences. The Bloch ball condition is
// x^2 + y^2 + (1-u)^2 <= 1.
struct BlochState {
    double u = 0.0;
    double x = 0.0;
    double y = 0.0;
};

using Matrix2c = Eigen::Matrix2cd;

// 1 - [x^2 + y^2 + (1-u)^2]; zero iff pure, positive for mixed states.
double purity_defect(const BlochState& s);

bool is_physical(const BlochState& s, double tol = kPhysicalityTol);

// Density matrix in the (|e>, |g>) basis: rho_ee = u/2, rho_eg = (x - iy)/2.
// Throws std::invalid_argument for non-physical input.
Matrix2c to_density(const BlochState& s);

// Inverse of to_density. Throws for non-Hermitian, non-unit-trace, or
// negative-eigenvalue input.
BlochState from_density(const Matrix2c& rho, double tol = kPhysicalityTol);

// Pure state on the x-z great circle: x = sin(theta), u = 1 + cos(theta),
// y = 0. theta is the polar angle measured from the z axis, theta = 0 is the
// excited state and theta = pi the ground state.
BlochState state_from_theta(double theta);

// Polar angle of a pure y = 0 state; inverse of state_from_theta on [0, pi].
double theta_from_state(const BlochState& s);

} // namespace fluor
