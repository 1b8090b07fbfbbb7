#include "fluor/ideal_mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fluor {

namespace {

// Coefficients of H'/gamma1 = a p^2 + b p + c and their theta-derivatives.
struct HCoeffs {
    double a, b, c, da, db, dc;
};

HCoeffs h_coeffs(double theta) {
    const double ch = std::cos(0.5 * theta);
    const double sh = std::sin(0.5 * theta);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    HCoeffs h;
    h.a = ch * ch * ch * ch;
    h.c = -h.a;
    h.b = st * (1.0 + 0.5 * ct);
    h.da = -2.0 * ch * ch * ch * sh;
    h.dc = -h.da;
    h.db = ct * (1.0 + 0.5 * ct) - 0.5 * st * st;
    return h;
}

double p_zero_energy_direct(double theta, int sign) {
    const double ch = std::cos(0.5 * theta);
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    const double num = sign * ch * std::sqrt(10.0 + 6.0 * ct) - (2.0 + ct) * st;
    const double den = (1.0 + ct) * (1.0 + ct);
    return num / den;
}

} // namespace

double ideal_h_prime(double theta, double p_theta, double gamma1) {
    const HCoeffs h = h_coeffs(theta);
    return gamma1 * (h.a * p_theta * p_theta + h.b * p_theta + h.c);
}

double p_zero_energy(double theta, ZeroEnergyBranch branch) {
    const int sign = branch == ZeroEnergyBranch::Plus ? 1 : -1;
    // The two roots multiply to c/a = -1, which gives a cancellation-free
    // route to whichever branch vanishes near theta = +-pi.
    if (theta > M_PI / 2.0) {
        // minus branch is safe here, plus branch goes to zero
        const double pm = p_zero_energy_direct(theta, -1);
        if (sign < 0) return pm;
        return pm == -std::numeric_limits<double>::infinity() ? 0.0 : -1.0 / pm;
    }
    if (theta < -M_PI / 2.0) {
        const double pp = p_zero_energy_direct(theta, 1);
        if (sign > 0) return pp;
        return pp == std::numeric_limits<double>::infinity() ? 0.0 : -1.0 / pp;
    }
    return p_zero_energy_direct(theta, sign);
}

std::vector<double> p_at_energy(double theta, double energy, double gamma1) {
    const HCoeffs h = h_coeffs(theta);
    const double c = h.c - energy / gamma1;
    constexpr double tiny = 1e-14;
    if (std::abs(h.a) < tiny) {
        if (std::abs(h.b) < tiny) {
            // theta = pi: H' vanishes identically; E = 0 is the degenerate line.
            if (std::abs(energy) < tiny) return {0.0};
            return {};
        }
        return {-c / h.b};
    }
    const double disc = h.b * h.b - 4.0 * h.a * c;
    if (disc < 0.0) return {};
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (h.b + std::copysign(sq, h.b));
    double r1, r2;
    if (std::abs(q) < tiny) {
        r1 = r2 = -h.b / (2.0 * h.a);
    } else {
        r1 = q / h.a;
        r2 = c / q;
    }
    if (r1 > r2) std::swap(r1, r2);
    return {r1, r2};
}

namespace {

double action_antiderivative(double theta, int sign) {
    const double ch = std::cos(0.5 * theta);
    const double sh = std::sin(0.5 * theta);
    const double ct = std::cos(theta);
    const double root = std::sqrt(10.0 + 6.0 * ct);
    return (-sign * root * sh + 2.0) / (2.0 * (1.0 + ct))
           - 2.0 * std::log(ch)
           - sign * 2.0 * std::atanh(std::sqrt(2.0) * sh / std::sqrt(5.0 + 3.0 * ct));
}

double time_antiderivative(double theta) {
    return 2.0 * std::atanh(std::sqrt(2.0) * std::sin(0.5 * theta)
                            / std::sqrt(5.0 + 3.0 * std::cos(theta)));
}

} // namespace

double ideal_action_zero_energy(double theta0, double thetaf, ZeroEnergyBranch branch) {
    const int sign = branch == ZeroEnergyBranch::Plus ? 1 : -1;
    return action_antiderivative(thetaf, sign) - action_antiderivative(theta0, sign);
}

double ideal_time_zero_energy(double theta0, double thetaf, double gamma1) {
    return (time_antiderivative(thetaf) - time_antiderivative(theta0)) / gamma1;
}

double ideal_theta_at_time(double theta0, double elapsed, double gamma1) {
    if (elapsed < 0.0) throw std::invalid_argument("ideal_theta_at_time: elapsed must be >= 0");
    const double target = time_antiderivative(theta0) + gamma1 * elapsed;
    double lo = theta0;
    double hi = M_PI - 1e-13;
    if (time_antiderivative(hi) < target) return hi;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (time_antiderivative(mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-15) break;
    }
    return 0.5 * (lo + hi);
}

double ideal_mlp_readout(double theta, double p_theta, double gamma1) {
    return std::sqrt(gamma1 / 2.0)
           * (std::sin(theta) + p_theta * (1.0 + std::cos(theta)));
}

namespace {

IdealPhasePoint ideal_rk4_step(const IdealPhasePoint& pt, double gamma1, double h) {
    const auto rhs = [gamma1](const IdealPhasePoint& q) {
        const HCoeffs hc = h_coeffs(q.theta);
        IdealPhasePoint d;
        d.theta = gamma1 * (2.0 * hc.a * q.p_theta + hc.b);
        d.p_theta = -gamma1 * (hc.da * q.p_theta * q.p_theta + hc.db * q.p_theta + hc.dc);
        return d;
    };
    const auto add = [](const IdealPhasePoint& base, const IdealPhasePoint& d, double s) {
        return IdealPhasePoint{base.theta + s * d.theta, base.p_theta + s * d.p_theta};
    };
    const IdealPhasePoint k1 = rhs(pt);
    const IdealPhasePoint k2 = rhs(add(pt, k1, 0.5 * h));
    const IdealPhasePoint k3 = rhs(add(pt, k2, 0.5 * h));
    const IdealPhasePoint k4 = rhs(add(pt, k3, h));
    return {pt.theta + h / 6.0 * (k1.theta + 2.0 * k2.theta + 2.0 * k3.theta + k4.theta),
            pt.p_theta + h / 6.0 * (k1.p_theta + 2.0 * k2.p_theta + 2.0 * k3.p_theta + k4.p_theta)};
}

// theta(T) for given initial momentum; NaN if the flow diverges.
double ideal_shoot(double theta0, double p0, double total_time, double gamma1,
                   std::size_t n_steps) {
    const double h = total_time / static_cast<double>(n_steps);
    IdealPhasePoint pt{theta0, p0};
    for (std::size_t k = 0; k < n_steps; ++k) {
        pt = ideal_rk4_step(pt, gamma1, h);
        if (!std::isfinite(pt.theta) || !std::isfinite(pt.p_theta)
            || std::abs(pt.p_theta) > 1e8) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    }
    return pt.theta;
}

} // namespace

IdealPath solve_ideal_bvp(double theta0, double thetaf, double total_time,
                          double gamma1, std::size_t n_steps) {
    if (total_time <= 0.0) throw std::invalid_argument("solve_ideal_bvp: T must be > 0");

    const auto miss = [&](double p0) { return ideal_shoot(theta0, p0, total_time, gamma1, n_steps) - thetaf; };

    // Bracket scan over initial momenta, then bisection on the best bracket.
    const int n_scan = 481;
    const double p_lo = -12.0, p_hi = 12.0;
    double best_p = 0.0, best_abs = std::numeric_limits<double>::infinity();
    double prev_p = 0.0, prev_f = std::numeric_limits<double>::quiet_NaN();
    double bra = 0.0, brb = 0.0;
    bool have_bracket = false;
    for (int k = 0; k < n_scan; ++k) {
        const double p0 = p_lo + (p_hi - p_lo) * k / (n_scan - 1);
        const double f = miss(p0);
        if (std::isfinite(f)) {
            if (std::abs(f) < best_abs) {
                best_abs = std::abs(f);
                best_p = p0;
            }
            if (std::isfinite(prev_f) && std::signbit(f) != std::signbit(prev_f)
                && !have_bracket) {
                bra = prev_p;
                brb = p0;
                have_bracket = true;
            }
        }
        prev_p = p0;
        prev_f = f;
    }

    IdealPath path;
    double p0 = best_p;
    if (have_bracket) {
        double fa = miss(bra);
        for (int iter = 0; iter < 200; ++iter) {
            const double mid = 0.5 * (bra + brb);
            const double fm = miss(mid);
            if (!std::isfinite(fm)) break;
            if (std::signbit(fm) == std::signbit(fa)) {
                bra = mid;
                fa = fm;
            } else {
                brb = mid;
            }
            if (brb - bra < 1e-14 * std::max(1.0, std::abs(bra))) break;
        }
        p0 = 0.5 * (bra + brb);
    }

    const double h = total_time / static_cast<double>(n_steps);
    IdealPhasePoint pt{theta0, p0};
    path.times.reserve(n_steps + 1);
    path.points.reserve(n_steps + 1);
    path.readout_i.reserve(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k) {
        path.times.push_back(static_cast<double>(k) * h);
        path.points.push_back(pt);
        path.readout_i.push_back(ideal_mlp_readout(pt.theta, pt.p_theta, gamma1));
        if (k < n_steps) pt = ideal_rk4_step(pt, gamma1, h);
    }
    path.energy = ideal_h_prime(theta0, p0, gamma1);
    path.residual = std::abs(path.points.back().theta - thetaf);
    path.converged = path.residual < 1e-7;
    return path;
}

std::vector<IdealPhasePoint> ideal_energy_contour(double energy, double theta_min,
                                                  double theta_max, std::size_t n_points,
                                                  bool upper_root, double gamma1) {
    std::vector<IdealPhasePoint> out;
    out.reserve(n_points);
    for (std::size_t k = 0; k < n_points; ++k) {
        const double theta = theta_min
            + (theta_max - theta_min) * static_cast<double>(k)
              / static_cast<double>(n_points - 1);
        const auto roots = p_at_energy(theta, energy, gamma1);
        if (roots.empty()) continue;
        out.push_back({theta, upper_root ? roots.back() : roots.front()});
    }
    return out;
}

} // namespace fluor
