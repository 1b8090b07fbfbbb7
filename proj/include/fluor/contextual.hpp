#pragma once

#include "fluor/measurement.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace fluor {

// Reconstruction of qubit observables from single-step heterodyne outcome
// statistics: each Pauli target has a contextual value C_A(alpha) such that
// integrating C_A(alpha) E_alpha over d^2alpha/pi recovers A.

// POVM element of the weak heterodyne step, in the (|e>, |g>) basis:
//   E_alpha = e^{-|a|^2} [[1 - eps(1-|a|^2), sqrt(eps) a], [sqrt(eps) a*, 1]].
Eigen::Matrix2cd povm_element(Complex alpha, double epsilon);

enum class PauliTarget { Identity, X, Y, Z };

PauliTarget pauli_from_string(const std::string& name);
std::string to_string(PauliTarget t);
Eigen::Matrix2cd pauli_matrix(PauliTarget t);

struct ContextualValue {
    PauliTarget target = PauliTarget::Identity;
    double epsilon = 0.0;

    // identity -> 1; sigma_x -> (2/sqrt(eps)) Re a; sigma_y -> (-2/sqrt(eps)) Im a;
    // sigma_z -> (2/eps)(|a|^2 - 1) - 1.
    double operator()(Complex alpha) const;
};

ContextualValue cv_for(PauliTarget target, double epsilon);

struct Reconstruction {
    double estimate = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

// Sample mean and standard error of C_A over outcome draws; unbiased for
// tr(rho A) when the draws come from the exact outcome density of rho.
Reconstruction reconstruct_expectation(const std::vector<Complex>& samples,
                                       const ContextualValue& cv);

// Convenience: repeated preparations of s, one exact weak-measurement outcome
// each (unit efficiency), then the estimator above.
Reconstruction reconstruct_from_state(const BlochState& s, double epsilon,
                                      PauliTarget target, std::size_t n_samples, Rng& rng);

// tr(rho A) for the target, for reporting alongside the estimate.
double true_expectation(const BlochState& s, PauliTarget target);

} // namespace fluor
