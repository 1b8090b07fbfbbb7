#pragma once

#include <cstddef>
#include <vector>

namespace fluor {

// Analytic most-likely-path machinery for the ideal measurement (eta = 1,
// gamma_phi = 0), where the pure state is parametrized by the polar angle
// theta and its conjugate momentum p_theta. Rates are quoted in units of
// gamma1; pass gamma1 explicitly where it matters.

struct IdealPhasePoint {
    double theta = 0.0;
    double p_theta = 0.0;
};

enum class ZeroEnergyBranch { Plus, Minus };

// Reduced Hamiltonian after eliminating the readout:
//   H' = gamma1 (a p^2 + b p + c), a = -c = cos^4(theta/2),
//   b = sin(theta) (1 + cos(theta)/2).
double ideal_h_prime(double theta, double p_theta, double gamma1 = 1.0);

// Zero-energy momentum lines
//   p^{+-} = [+-cos(theta/2) sqrt(10+6 cos) - (2+cos) sin] / (1+cos)^2.
// At theta = pi the plus branch tends to 0 and the minus branch diverges as
// 8/(theta-pi)^3; the divergence is returned as a signed infinity.
double p_zero_energy(double theta, ZeroEnergyBranch branch);

// Real momenta with H'(theta, p) = E, in ascending order; empty when the
// discriminant is negative. The degenerate line theta = pi yields {0} for
// E = 0 (the plus-branch limit) and no roots otherwise.
std::vector<double> p_at_energy(double theta, double energy, double gamma1 = 1.0);

// Action -int p dtheta along a zero-energy branch between theta0 and thetaf,
// from the closed-form antiderivative. Valid on segments inside (-pi, pi)
// that do not cross the minus-branch singularity.
double ideal_action_zero_energy(double theta0, double thetaf, ZeroEnergyBranch branch);

// Elapsed time of the zero-energy path between theta0 and thetaf,
//   T = (2/gamma1) [atanh(sqrt2 sin(theta/2)/sqrt(5+3 cos theta))]_{theta0}^{thetaf}.
// Positive when thetaf is downstream of theta0 on the branch.
double ideal_time_zero_energy(double theta0, double thetaf, double gamma1 = 1.0);

// Inverse of the above on the plus branch: the angle reached after time T
// starting from theta0 (bracketed root find, |result| < pi).
double ideal_theta_at_time(double theta0, double elapsed, double gamma1 = 1.0);

// Most likely quadrature current I = sqrt(gamma1/2)(sin theta + p (1+cos theta)).
double ideal_mlp_readout(double theta, double p_theta, double gamma1 = 1.0);

struct IdealPath {
    std::vector<double> times;
    std::vector<IdealPhasePoint> points;
    std::vector<double> readout_i;
    double energy = 0.0;
    double residual = 0.0;
    bool converged = false;
};

// Fixed-time two-point solve in the (theta, p_theta) plane: shooting on the
// initial momentum so that theta(T) = thetaf. n_steps RK4 steps.
IdealPath solve_ideal_bvp(double theta0, double thetaf, double total_time,
                          double gamma1 = 1.0, std::size_t n_steps = 4000);

// Constant-energy line sampled over a theta grid (phase-portrait export).
std::vector<IdealPhasePoint> ideal_energy_contour(double energy, double theta_min,
                                                  double theta_max, std::size_t n_points,
                                                  bool upper_root, double gamma1 = 1.0);

} // namespace fluor
