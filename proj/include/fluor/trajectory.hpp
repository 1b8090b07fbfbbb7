#pragma once

#include "fluor/bloch.hpp"
#include "fluor/measurement.hpp"
#include "fluor/random.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fluor {

enum class Scheme { Exact, Stratonovich, Ito };

Scheme scheme_from_string(const std::string& name);
std::string to_string(Scheme scheme);

// One monitored run. states has n_steps+1 entries on the uniform grid
// t_k = k*dt; readouts and noises have n_steps entries attached to the left
// endpoint of each step. Per step, I = zeta*x + xi_I and Q = zeta*y + xi_Q
// with the state taken at the step start.
struct Trajectory {
    std::vector<double> times;
    std::vector<BlochState> states;
    std::vector<double> readout_i, readout_q;
    std::vector<double> noise_i, noise_q;
    std::uint64_t seed = 0;

    std::size_t n_steps() const { return readout_i.size(); }
};

struct Ensemble {
    std::vector<Trajectory> members;
    MeasurementParams params;
    BlochState initial;
    Scheme scheme = Scheme::Ito;
};

struct StateDeriv {
    double du = 0.0, dx = 0.0, dy = 0.0;
};

// Stratonovich equations of motion with efficiency and dephasing, driven by
// the quadrature currents I, Q.
StateDeriv stratonovich_rhs(const BlochState& s, double i_cur, double q_cur,
                            const MeasurementParams& p);

// Ito equations of motion driven by the noises xi_I, xi_Q; the drift part
// (xi = 0) is pure exponential decay of u at gamma1 and x, y at gamma2.
StateDeriv ito_rhs(const BlochState& s, double xi_i, double xi_q,
                   const MeasurementParams& p);

// One Stratonovich-Heun step of the pure-state polar angle equation
// (eta = 1, gamma_phi = 0): theta_dot = (gamma1/2) sin(theta)
// + sqrt(gamma1/2) (1 + cos(theta)) I.
double theta_sde_step(double theta, double i_cur, const MeasurementParams& p);

// Simulates one trajectory. Deterministic given the seed. Exact scheme samples
// alpha from the exact outcome density and applies the exact state update;
// SDE schemes use Stratonovich-Heun / Euler-Maruyama at fixed step.
// Throws std::runtime_error with the step index if the state leaves the
// Bloch ball beyond tolerance.
Trajectory simulate_trajectory(const BlochState& s0, const MeasurementParams& p,
                               Scheme scheme, std::size_t n_steps, std::uint64_t seed);

// Member k uses seed = base_seed + k. n_threads = 0 picks the hardware count.
Ensemble simulate_ensemble(const BlochState& s0, const MeasurementParams& p,
                           Scheme scheme, std::size_t n_steps, std::size_t n_traj,
                           std::uint64_t base_seed, std::size_t n_threads = 0);

struct EnsembleStats {
    std::vector<double> times;
    std::vector<double> mean_u, mean_x, mean_y;
    std::vector<double> var_u, var_x, var_y;
};

EnsembleStats ensemble_stats(const Ensemble& e);

// Final-state condition on any subset of (u, x, y).
struct FinalCondition {
    std::optional<double> u, x, y;
};

// Members whose final state matches the condition component-wise within
// tolerance. An empty result is a valid return, not an error.
Ensemble postselect(const Ensemble& e, const FinalCondition& target, double tolerance);

// The member minimizing the time-averaged trace distance to all other
// members; trace distance = (1/2) Euclidean distance in (x, y, u). Ties break
// toward the lower seed. Requires at least 2 members.
const Trajectory& empirical_mlp(const Ensemble& e);

} // namespace fluor
