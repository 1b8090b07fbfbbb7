#pragma once

#include "fluor/bloch.hpp"
#include "fluor/random.hpp"

#include <complex>
#include <utility>

namespace fluor {

// Parameters of one heterodyne monitoring channel. Rates are in units of
// inverse time; the natural time unit elsewhere is 1/gamma1.
struct MeasurementParams {
    double gamma1 = 1.0;   // relaxation rate
    double gamma_phi = 0.0; // pure dephasing rate
    double eta = 1.0;       // detection efficiency in [0, 1]
    double dt = 0.01;       // time step

    double epsilon() const { return gamma1 * dt; }
    double zeta() const { return std::sqrt(eta * gamma1 / 2.0); }
    double gamma2() const { return gamma1 / 2.0 + gamma_phi; }

    // Throws std::invalid_argument if rates/efficiency are out of range or
    // gamma1*dt exceeds the weak-measurement step bound (0.1 by default).
    void validate(double max_epsilon = 0.1) const;
};

using Complex = std::complex<double>;

// Quadrature currents and the raw complex outcome are related by
// Re(alpha) = I*sqrt(dt/2), Im(alpha) = -Q*sqrt(dt/2).
Complex alpha_from_currents(double i_cur, double q_cur, double dt);
std::pair<double, double> currents_from_alpha(Complex alpha, double dt);

// Outcome density of a single weak heterodyne step at unit efficiency,
// normalized with the coherent state measure d^2alpha/pi:
//   P(alpha) = e^{-|alpha|^2} [1 - (eps*u/2)(1-|alpha|^2)
//                              + sqrt(eps)(x Re(alpha) - y Im(alpha))].
// Nonnegative for every physical state.
double prob_alpha(const BlochState& s, double epsilon, Complex alpha);

// Same density including detection efficiency; reduces to prob_alpha at
// eta = 1. Loss events feed the outcome with vacuum statistics.
double prob_alpha_eta(const BlochState& s, double epsilon, double eta, Complex alpha);

// Log of the Gaussian quadrature-current distribution (up to an additive
// constant): means sqrt(eta*gamma1/2)*x and *y, variances 1/dt.
double logp_quadratures(const BlochState& s, const MeasurementParams& p,
                        double i_cur, double q_cur);

// Draws (I, Q) from the Gaussian distribution above.
std::pair<double, double> sample_quadratures(const BlochState& s,
                                             const MeasurementParams& p, Rng& rng);

// Draws alpha from the exact single-step outcome density (Kraus-trace norm,
// including efficiency) by rejection against a widened Gaussian.
Complex sample_alpha_exact(const BlochState& s, double epsilon, double eta, Rng& rng);

// Exact conditional state update for outcome alpha at unit efficiency:
//   u' = u(1-eps) e^{-|a|^2}/P,  x' = sqrt(1-eps)(x + sqrt(eps) u Re a) e^{-|a|^2}/P,
//   y' = sqrt(1-eps)(y - sqrt(eps) u Im a) e^{-|a|^2}/P.
// Throws std::runtime_error if the outcome has nonpositive probability.
BlochState kraus_update(const BlochState& s, Complex alpha, double epsilon);

// True iff the update for this outcome raises the excitation u:
//   (u/2)(1-|alpha|^2) - (1/sqrt(eps)) (x Re a - y Im a) > 1.
bool energy_gain_predicate(const BlochState& s, Complex alpha, double epsilon);

// Exact single step including efficiency (loss-averaged meter) and extra
// dephasing. The measurement branch and loss branch are combined exactly;
// pure dephasing is applied after the measurement update.
BlochState update_with_loss_dephasing(const BlochState& s, const MeasurementParams& p,
                                      Complex alpha);

// Photon-counting no-click update on a pure state a|e> + b|g>. The excited
// population never increases.
std::pair<Complex, Complex> no_click_update(Complex a, Complex b, double epsilon);

} // namespace fluor
