#pragma once

#include "fluor/trajectory.hpp"

#include <string>
#include <vector>

namespace fluor {

// Closed-form leading-order covariance functions for a fixed initial state.
// All vanish when min(t1,t2) = 0 and decay to zero at late times.

// Green function of the linearized dynamics: Theta(t-t') e^{-gamma_i (t-t')}
// with a left-continuous step, Theta(0) = 0. var is 'u', 'x' or 'y'.
double green_state(char var, double t, double t_prime, const MeasurementParams& p);

double cov_uu(double t1, double t2, const BlochState& s0, const MeasurementParams& p);
double cov_xx(double t1, double t2, const BlochState& s0, const MeasurementParams& p);
double cov_yy(double t1, double t2, const BlochState& s0, const MeasurementParams& p);
double cov_xy(double t1, double t2, const BlochState& s0, const MeasurementParams& p);
double cov_ux(double t1, double t2, const BlochState& s0, const MeasurementParams& p);
double cov_uy(double t1, double t2, const BlochState& s0, const MeasurementParams& p);

// Leading-order state-noise correlators <a(t1) xi_k(t2)>; zero for t1 <= t2.
// a is 'u', 'x' or 'y'; k is 'I' or 'Q'.
double corr_state_noise(char a, char k, double t1, double t2,
                        const BlochState& s0, const MeasurementParams& p);

// Next-order correction to <u(t1) xi_I(t2)>, suppressed by ~ eta x0^2 / 2.
double corr_u_xiI_higher_order(double t1, double t2, const BlochState& s0,
                               const MeasurementParams& p);

// Readout covariance Cov[I(t1) I(t2)] etc. for t1 != t2, assembled from the
// decomposition I = zeta x + xi_I. a, b in {'I', 'Q'}. The delta-correlated
// noise term contributes 1/dt only at equal times on a discrete grid and is
// excluded here.
double cov_readout(char a, char b, double t1, double t2,
                   const BlochState& s0, const MeasurementParams& p);

struct CovEstimate {
    double value = 0.0;
    double stderr_jackknife = 0.0;
    std::size_t n = 0;
};

// Variables selectable in empirical covariances: state components or noises.
enum class Var { U, X, Y, XiI, XiQ };

Var var_from_string(const std::string& name);
std::string to_string(Var v);

// Sample covariance Cov[a(t1) b(t2)] over ensemble members with a
// leave-one-out jackknife standard error. Times snap to the nearest grid
// point (noise variables live on the left step edges).
CovEstimate empirical_cov(const Ensemble& e, Var a, Var b, double t1, double t2);

// Closed-form value for the same pair, for side-by-side comparison; returns
// false if no closed form is implemented for the pair.
bool analytic_cov(Var a, Var b, double t1, double t2, const BlochState& s0,
                  const MeasurementParams& p, double& out);

struct CovarianceGrid {
    std::vector<double> t1, t2;
    std::vector<std::vector<double>> value;   // value[i][j] at (t1[i], t2[j])
    std::vector<std::vector<double>> stderr_; // empty for analytic grids
    std::string pair;
};

CovarianceGrid analytic_cov_grid(Var a, Var b, const std::vector<double>& times,
                                 const BlochState& s0, const MeasurementParams& p);
CovarianceGrid empirical_cov_grid(const Ensemble& e, Var a, Var b,
                                  const std::vector<double>& times);

} // namespace fluor
