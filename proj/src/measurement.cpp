#include "fluor/measurement.hpp"

#include <cmath>
#include <stdexcept>

namespace fluor {

void MeasurementParams::validate(double max_epsilon) const {
    if (gamma1 <= 0.0) throw std::invalid_argument("MeasurementParams: gamma1 must be > 0");
    if (gamma_phi < 0.0) throw std::invalid_argument("MeasurementParams: gamma_phi must be >= 0");
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("MeasurementParams: eta must be in [0,1]");
    if (dt <= 0.0) throw std::invalid_argument("MeasurementParams: dt must be > 0");
    if (epsilon() > max_epsilon) {
        throw std::invalid_argument("MeasurementParams: gamma1*dt too large for a weak step");
    }
}

Complex alpha_from_currents(double i_cur, double q_cur, double dt) {
    const double f = std::sqrt(dt / 2.0);
    return {i_cur * f, -q_cur * f};
}

std::pair<double, double> currents_from_alpha(Complex alpha, double dt) {
    const double f = std::sqrt(2.0 / dt);
    return {alpha.real() * f, -alpha.imag() * f};
}

double prob_alpha(const BlochState& s, double epsilon, Complex alpha) {
    return prob_alpha_eta(s, epsilon, 1.0, alpha);
}

double prob_alpha_eta(const BlochState& s, double epsilon, double eta, Complex alpha) {
    const double a2 = std::norm(alpha);
    const double se = std::sqrt(eta * epsilon);
    return std::exp(-a2) * (1.0 - 0.5 * eta * epsilon * s.u * (1.0 - a2)
                            + se * (s.x * alpha.real() - s.y * alpha.imag()));
}

double logp_quadratures(const BlochState& s, const MeasurementParams& p,
                        double i_cur, double q_cur) {
    const double mean = std::sqrt(p.eta * p.gamma1 / 2.0);
    return -0.5 * p.dt * (i_cur * i_cur - 2.0 * mean * s.x * i_cur
                          + q_cur * q_cur - 2.0 * mean * s.y * q_cur
                          + s.u * p.gamma1);
}

std::pair<double, double> sample_quadratures(const BlochState& s,
                                             const MeasurementParams& p, Rng& rng) {
    const double mean = std::sqrt(p.eta * p.gamma1 / 2.0);
    const double sd = 1.0 / std::sqrt(p.dt);
    return {rng.normal(mean * s.x, sd), rng.normal(mean * s.y, sd)};
}

Complex sample_alpha_exact(const BlochState& s, double epsilon, double eta, Rng& rng) {
    // Density over (v, w) = (Re a, Im a):
    //   f = e^{-v^2-w^2} (c0 + c1 v + c2 w + c3 (v^2+w^2)) / pi,  integral = 1.
    const double se = std::sqrt(eta * epsilon);
    const double c0 = 1.0 - 0.5 * eta * epsilon * s.u;
    const double c1 = se * s.x;
    const double c2 = -se * s.y;
    const double c3 = 0.5 * eta * epsilon * s.u;
    const double clin = std::sqrt(c1 * c1 + c2 * c2);
    // Proposal: unit normal per component. Ratio f/q = 2 e^{-r^2/2} poly(v,w),
    // bounded via max_r r e^{-r^2/2} = e^{-1/2}, max_r r^2 e^{-r^2/2} = 2/e.
    const double bound = 2.0 * (std::max(c0, 0.0) + clin * 0.60653065971263342
                                + c3 * 0.73575888234288464);
    for (;;) {
        const double v = rng.normal();
        const double w = rng.normal();
        const double r2 = v * v + w * w;
        const double ratio = 2.0 * std::exp(-0.5 * r2) * (c0 + c1 * v + c2 * w + c3 * r2);
        if (rng.uniform() * bound < ratio) return {v, w};
    }
}

BlochState kraus_update(const BlochState& s, Complex alpha, double epsilon) {
    if (epsilon < 0.0 || epsilon >= 1.0) {
        throw std::invalid_argument("kraus_update: epsilon must be in [0,1)");
    }
    const double prob = prob_alpha(s, epsilon, alpha);
    if (prob <= 0.0) throw std::runtime_error("kraus_update: outcome has nonpositive probability");
    const double e = std::exp(-std::norm(alpha));
    const double s1 = std::sqrt(1.0 - epsilon);
    const double re = std::sqrt(epsilon) * alpha.real();
    const double im = std::sqrt(epsilon) * alpha.imag();
    BlochState out;
    out.u = s.u * (1.0 - epsilon) * e / prob;
    out.x = s1 * (s.x + s.u * re) * e / prob;
    out.y = s1 * (s.y - s.u * im) * e / prob;
    return out;
}

bool energy_gain_predicate(const BlochState& s, Complex alpha, double epsilon) {
    if (epsilon <= 0.0) return false;
    const double lhs = 0.5 * s.u * (1.0 - std::norm(alpha))
                       - (s.x * alpha.real() - s.y * alpha.imag()) / std::sqrt(epsilon);
    return lhs > 1.0;
}

BlochState update_with_loss_dephasing(const BlochState& s, const MeasurementParams& p,
                                      Complex alpha) {
    const double eps = p.epsilon();
    if (eps >= 1.0) throw std::invalid_argument("update_with_loss_dephasing: gamma1*dt >= 1");
    const double prob = prob_alpha_eta(s, eps, p.eta, alpha);
    if (prob <= 0.0) {
        throw std::runtime_error("update_with_loss_dephasing: outcome has nonpositive probability");
    }
    // No-loss Kraus branch M = e^{-|a|^2/2} [[sqrt(1-eps), 0], [sqrt(eta*eps) a*, 1]],
    // plus the loss branch (1-eta) eps (u/2) e^{-|a|^2} |g><g|.
    const double e = std::exp(-std::norm(alpha));
    const double s1 = std::sqrt(1.0 - eps);
    const double re = std::sqrt(p.eta * eps) * alpha.real();
    const double im = std::sqrt(p.eta * eps) * alpha.imag();
    BlochState out;
    out.u = s.u * (1.0 - eps) * e / prob;
    out.x = s1 * (s.x + s.u * re) * e / prob;
    out.y = s1 * (s.y - s.u * im) * e / prob;
    // Pure dephasing, applied after the measurement update within the step.
    const double deph = std::exp(-p.gamma_phi * p.dt);
    out.x *= deph;
    out.y *= deph;
    return out;
}

std::pair<Complex, Complex> no_click_update(Complex a, Complex b, double epsilon) {
    const Complex ap = a * std::sqrt(1.0 - epsilon);
    const double norm = std::sqrt(std::norm(ap) + std::norm(b));
    return {ap / norm, b / norm};
}

} // namespace fluor
