#pragma once

#include "fluor/bloch.hpp"
#include "fluor/measurement.hpp"
#include "fluor/trajectory.hpp"

#include <array>
#include <optional>
#include <vector>

namespace fluor {

// Point of the canonical most-likely-path phase space: state plus the
// conjugate momenta (p_u, p_x, p_y).
struct PhasePoint {
    BlochState state;
    double p_u = 0.0, p_x = 0.0, p_y = 0.0;
};

struct PhaseDeriv {
    StateDeriv state;
    double dp_u = 0.0, dp_x = 0.0, dp_y = 0.0;
};

// Stochastic Hamiltonian at given readouts: H = p . r_dot(I,Q)
// - I^2/2 + zeta x I - Q^2/2 + zeta y Q - eta gamma1 u / 2.
double stochastic_hamiltonian(const PhasePoint& pp, double i_cur, double q_cur,
                              const MeasurementParams& p);

// Stationary readouts from dH/dI = dH/dQ = 0:
//   I/zeta = x + p_x (u - x^2) - p_u u x - p_y x y, and x<->y for Q.
std::pair<double, double> optimal_readout(const PhasePoint& pp,
                                          const MeasurementParams& p);

// Canonical flow with the optimal readouts substituted in.
PhaseDeriv mlp_rhs(const PhasePoint& pp, const MeasurementParams& p);

struct MlpPath {
    std::vector<double> times;
    std::vector<PhasePoint> points;
    std::vector<double> readout_i, readout_q;
    std::vector<double> energy; // H along the path; constant to solver tolerance
};

// Fixed-step RK4 integration of the canonical flow.
MlpPath integrate_mlp(const PhasePoint& start, const MeasurementParams& p,
                      double total_time, double step);

struct MlpBvpResult {
    MlpPath path;
    double energy = 0.0;          // H at the initial point
    double residual = 0.0;        // final boundary residual norm
    bool converged = false;
    int newton_iterations = 0;
};

struct MlpBvpOptions {
    double step = 1e-3;           // RK4 step in units of 1/gamma1 at gamma1=1
    double tol = 1e-9;            // residual norm for convergence
    int max_newton = 60;
    int max_restarts = 24;
    std::uint64_t restart_seed = 12345;
    std::array<double, 3> initial_momenta{0.0, 0.0, 0.0};
};

// Shooting solve for the most likely path from s0 to a (possibly partial)
// final condition over time T. Unconstrained final coordinates get the
// natural boundary condition p_i(T) = 0.
MlpBvpResult solve_mlp_bvp(const BlochState& s0, const FinalCondition& sf, double total_time,
                           const MeasurementParams& p, const MlpBvpOptions& opts = {});

} // namespace fluor
