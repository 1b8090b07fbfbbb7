#pragma once

#include "fluor/bloch.hpp"
#include "fluor/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace fluor {

// Generic n-level diffusive stochastic master equation with m monitored
// channels, following the positivity-preserving discrete-time scheme. Dense
// matrices; intended for small n.

struct Channel {
    Eigen::MatrixXcd L;
    double eta = 1.0;
};

struct OperatorSet {
    Eigen::MatrixXcd H;
    std::vector<Channel> channels;

    Eigen::Index dim() const { return H.rows(); }
    std::size_t n_channels() const { return channels.size(); }

    // Hermitian H, square matrices of matching dimension, eta in [0,1].
    void validate(double tol = 1e-12) const;
};

// Throws std::invalid_argument unless rho is Hermitian, unit trace and
// positive semidefinite down to -tol.
void check_density(const Eigen::MatrixXcd& rho, double tol = 1e-9);

// One discrete step conditioned on the outcome vector r (length m):
//   M_r = I - (iH + sum L'L/2) dt + sum sqrt(eta) r L dt,
//   R   = I + (-iH + sum L'L/2)(iH + sum L'L/2) dt^2,
// with M and L right-multiplied by (sqrt R)^{-1} (Hermitian eigendecomposition),
// then rho' = (M rho M' + sum (1-eta) L rho L' dt) / trace. Positive and unit
// trace for every outcome by construction.
Eigen::MatrixXcd rouchon_step(const Eigen::MatrixXcd& rho, const std::vector<double>& r,
                              double dt, const OperatorSet& ops);

// Exact outcome density of one step, including the Gaussian reference measure
// prod sqrt(dt/2pi) e^{-r^2 dt/2}; integrates to 1 over R^m.
double outcome_density(const Eigen::MatrixXcd& rho, const std::vector<double>& r,
                       double dt, const OperatorSet& ops);

// Draws the outcome vector for one step. exact = true uses rejection against
// an inflated Gaussian (the density is Gaussian times a nonnegative
// quadratic); exact = false uses the O(dt)-biased Gaussian fast path
// r ~ Normal(sqrt(eta) tr((L+L')rho), 1/dt).
std::vector<double> sample_outcomes(const Eigen::MatrixXcd& rho, double dt,
                                    const OperatorSet& ops, Rng& rng, bool exact = true);

// First-order drift L(rho, r): Lindblad terms plus the efficiency and readout
// back-action terms. Traceless.
Eigen::MatrixXcd drift_superop(const Eigen::MatrixXcd& rho, const std::vector<double>& r,
                               const OperatorSet& ops);

// F(rho, r) = sum_nu (-r^2/2 + r sqrt(eta) tr(L rho + rho L') - eta tr(L rho L')) dt.
double log_likelihood(const Eigen::MatrixXcd& rho, const std::vector<double>& r,
                      const OperatorSet& ops, double dt);

// Stochastic Hamiltonian tr(xi L(rho,r)) + F(rho,r)/dt (i.e. the dt-free rate).
double general_stochastic_hamiltonian(const Eigen::MatrixXcd& xi, const Eigen::MatrixXcd& rho,
                                      const std::vector<double>& r, const OperatorSet& ops);

// Adjoint (costate) flow d(xi)/dt = -dH/d(rho); Hermitian output.
Eigen::MatrixXcd adjoint_rhs(const Eigen::MatrixXcd& xi, const Eigen::MatrixXcd& rho,
                             const std::vector<double>& r, const OperatorSet& ops);

// Stationary readout r_nu = sqrt(eta)[tr(xi (L rho + rho L')) -
// tr(L rho + rho L')(tr(xi rho) - 1)].
std::vector<double> stationary_readout(const Eigen::MatrixXcd& xi,
                                       const Eigen::MatrixXcd& rho, const OperatorSet& ops);

// Heterodyne-monitored fluorescing qubit: H = 0, L1 = sqrt(gamma1/2) sigma-,
// L2 = i L1 (efficiency eta each), L3 = sqrt(gamma_phi/2) sigma_z (eta = 0,
// omitted when gamma_phi = 0).
OperatorSet fluorescence_operator_set(double gamma1, double gamma_phi, double eta);

// Costate coordinate map for the qubit: xi = p_u sigma_z + p_x sigma_x +
// p_y sigma_y, so that tr(xi rho_dot) = p_u u_dot + p_x x_dot + p_y y_dot.
Eigen::Matrix2cd xi_from_momenta(double p_u, double p_x, double p_y);
void momenta_from_xi(const Eigen::MatrixXcd& xi, double& p_u, double& p_x, double& p_y);

struct SmeTrajectory {
    std::vector<double> times;                    // n_steps + 1
    std::vector<Eigen::MatrixXcd> states;         // n_steps + 1
    std::vector<std::vector<double>> outcomes;    // n_steps rows of length m
    std::uint64_t seed = 0;
};

// Repeated sample-then-step evolution from rho0. Deterministic given the seed.
SmeTrajectory simulate_sme(const Eigen::MatrixXcd& rho0, const OperatorSet& ops, double dt,
                           std::size_t n_steps, std::uint64_t seed, bool exact_sampling = true);

// JSON round-trip for operator sets; complex entries serialized as [re, im]
// in row-major matrices.
std::string operator_set_to_json(const OperatorSet& ops);
OperatorSet operator_set_from_json(const std::string& text);

} // namespace fluor
