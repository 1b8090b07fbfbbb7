#include "fluor/correlators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fluor {

namespace {

// (1 - e^{-lambda m}) / lambda, continuous through lambda = 0.
double decay_kernel(double lambda, double m) {
    if (std::abs(lambda * m) < 1e-10) {
        return m * (1.0 - 0.5 * lambda * m + lambda * lambda * m * m / 6.0);
    }
    return -std::expm1(-lambda * m) / lambda;
}

} // namespace

double green_state(char var, double t, double t_prime, const MeasurementParams& p) {
    if (t <= t_prime) return 0.0; // left-continuous step, Theta(0) = 0
    const double gamma = var == 'u' ? p.gamma1 : p.gamma2();
    return std::exp(-gamma * (t - t_prime));
}

double cov_uu(double t1, double t2, const BlochState& s0, const MeasurementParams& p) {
    const double z2 = p.zeta() * p.zeta();
    const double m = std::min(t1, t2);
    return z2 * s0.u * s0.u * (s0.x * s0.x + s0.y * s0.y)
           * std::exp(-p.gamma1 * (t1 + t2)) * decay_kernel(2.0 * p.gamma2(), m);
}

namespace {

// Shared bracket of C_xx with (first, second) initial coherences swapped for
// C_yy.
double cov_xx_impl(double t1, double t2, double u0, double a0, double b0,
                   const MeasurementParams& p) {
    const double z2 = p.zeta() * p.zeta();
    const double g2 = p.gamma2();
    const double m = std::min(t1, t2);
    const double bracket = u0 * u0 * decay_kernel(2.0 * (p.gamma1 - g2), m)
                           - 2.0 * u0 * a0 * a0 * decay_kernel(p.gamma1, m)
                           + a0 * a0 * (a0 * a0 + b0 * b0) * decay_kernel(2.0 * g2, m);
    return z2 * std::exp(-g2 * (t1 + t2)) * bracket;
}

} // namespace

double cov_xx(double t1, double t2, const BlochState& s0, const MeasurementParams& p) {
    return cov_xx_impl(t1, t2, s0.u, s0.x, s0.y, p);
}

double cov_yy(double t1, double t2, const BlochState& s0, const MeasurementParams& p) {
    return cov_xx_impl(t1, t2, s0.u, s0.y, s0.x, p);
}

double cov_xy(double t1, double t2, const BlochState& s0, const MeasurementParams& p) {
    const double z2 = p.zeta() * p.zeta();
    const double g2 = p.gamma2();
    const double m = std::min(t1, t2);
    const double r2 = s0.x * s0.x + s0.y * s0.y;
    return z2 * std::exp(-g2 * (t1 + t2))
           * (s0.x * s0.y * r2 * decay_kernel(2.0 * g2, m)
              - 2.0 * s0.u * s0.x * s0.y * decay_kernel(p.gamma1, m));
}

namespace {

double cov_ux_impl(double t1, double t2, double u0, double a0, double r2,
                   const MeasurementParams& p) {
    const double z2 = p.zeta() * p.zeta();
    const double g2 = p.gamma2();
    const double m = std::min(t1, t2);
    return z2 * std::exp(-p.gamma1 * t1 - g2 * t2)
           * (u0 * a0 * r2 * decay_kernel(2.0 * g2, m)
              - u0 * u0 * a0 * decay_kernel(p.gamma1, m));
}

} // namespace

double cov_ux(double t1, double t2, const BlochState& s0, const MeasurementParams& p) {
    return cov_ux_impl(t1, t2, s0.u, s0.x, s0.x * s0.x + s0.y * s0.y, p);
}

double cov_uy(double t1, double t2, const BlochState& s0, const MeasurementParams& p) {
    return cov_ux_impl(t1, t2, s0.u, s0.y, s0.x * s0.x + s0.y * s0.y, p);
}

double corr_state_noise(char a, char k, double t1, double t2,
                        const BlochState& s0, const MeasurementParams& p) {
    if (t1 <= t2) return 0.0;
    const double zeta = p.zeta();
    const double g1 = p.gamma1;
    const double g2 = p.gamma2();
    const double mixed = -zeta * s0.x * s0.y * std::exp(-g2 * (t1 + t2));
    if (a == 'u') {
        const double c0 = k == 'I' ? s0.x : s0.y;
        return -zeta * c0 * s0.u * std::exp(-g1 * t1 - g2 * t2);
    }
    if ((a == 'x' && k == 'I') || (a == 'y' && k == 'Q')) {
        const double c0 = a == 'x' ? s0.x : s0.y;
        return zeta * s0.u * std::exp(-g2 * t1 - (g1 - g2) * t2)
               - zeta * c0 * c0 * std::exp(-g2 * (t1 + t2));
    }
    if ((a == 'x' && k == 'Q') || (a == 'y' && k == 'I')) return mixed;
    throw std::invalid_argument("corr_state_noise: bad variable pair");
}

double corr_u_xiI_higher_order(double t1, double t2, const BlochState& s0,
                               const MeasurementParams& p) {
    if (t1 <= t2) return 0.0;
    const double zeta = p.zeta();
    const double g2 = p.gamma2();
    return -zeta * zeta * zeta * s0.u * s0.x * s0.x * s0.x
           * std::exp(-p.gamma1 * t1 - g2 * t2) * decay_kernel(2.0 * g2, t2) * 1.0;
}

double cov_readout(char a, char b, double t1, double t2,
                   const BlochState& s0, const MeasurementParams& p) {
    const double zeta = p.zeta();
    const char sa = a == 'I' ? 'x' : 'y';
    const char sb = b == 'I' ? 'x' : 'y';
    double state_part;
    if (sa == 'x' && sb == 'x') state_part = cov_xx(t1, t2, s0, p);
    else if (sa == 'y' && sb == 'y') state_part = cov_yy(t1, t2, s0, p);
    else if (sa == 'x' && sb == 'y') state_part = cov_xy(t1, t2, s0, p);
    else state_part = cov_xy(t2, t1, s0, p);
    return zeta * zeta * state_part
           + zeta * corr_state_noise(sa, b, t1, t2, s0, p)
           + zeta * corr_state_noise(sb, a, t2, t1, s0, p);
}

Var var_from_string(const std::string& name) {
    if (name == "u") return Var::U;
    if (name == "x") return Var::X;
    if (name == "y") return Var::Y;
    if (name == "xi_I") return Var::XiI;
    if (name == "xi_Q") return Var::XiQ;
    throw std::invalid_argument("unknown variable: " + name);
}

std::string to_string(Var v) {
    switch (v) {
        case Var::U: return "u";
        case Var::X: return "x";
        case Var::Y: return "y";
        case Var::XiI: return "xi_I";
        case Var::XiQ: return "xi_Q";
    }
    return "?";
}

namespace {

bool is_noise(Var v) { return v == Var::XiI || v == Var::XiQ; }

char state_char(Var v) {
    switch (v) {
        case Var::U: return 'u';
        case Var::X: return 'x';
        case Var::Y: return 'y';
        default: throw std::logic_error("state_char on noise variable");
    }
}

char noise_char(Var v) { return v == Var::XiI ? 'I' : 'Q'; }

// Value of variable v at time t for one trajectory, nearest grid point.
double sample_at(const Trajectory& tr, Var v, double t, double dt) {
    if (is_noise(v)) {
        auto idx = static_cast<std::size_t>(std::llround(t / dt));
        idx = std::min(idx, tr.n_steps() - 1);
        return v == Var::XiI ? tr.noise_i[idx] : tr.noise_q[idx];
    }
    auto idx = static_cast<std::size_t>(std::llround(t / dt));
    idx = std::min(idx, tr.states.size() - 1);
    const BlochState& s = tr.states[idx];
    return v == Var::U ? s.u : (v == Var::X ? s.x : s.y);
}

} // namespace

CovEstimate empirical_cov(const Ensemble& e, Var a, Var b, double t1, double t2) {
    const std::size_t n = e.members.size();
    if (n < 2) throw std::invalid_argument("empirical_cov: need >= 2 trajectories");
    const double dt = e.params.dt;

    std::vector<double> av(n), bv(n);
    for (std::size_t k = 0; k < n; ++k) {
        av[k] = sample_at(e.members[k], a, t1, dt);
        bv[k] = sample_at(e.members[k], b, t2, dt);
    }
    double sa = 0.0, sb = 0.0, sab = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sa += av[k];
        sb += bv[k];
        sab += av[k] * bv[k];
    }
    const double nn = static_cast<double>(n);
    CovEstimate est;
    est.n = n;
    est.value = sab / nn - (sa / nn) * (sb / nn);

    // Leave-one-out jackknife.
    double mean_loo = 0.0;
    std::vector<double> loo(n);
    const double nm1 = nn - 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double la = sa - av[k], lb = sb - bv[k], lab = sab - av[k] * bv[k];
        loo[k] = lab / nm1 - (la / nm1) * (lb / nm1);
        mean_loo += loo[k];
    }
    mean_loo /= nn;
    double ss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = loo[k] - mean_loo;
        ss += d * d;
    }
    est.stderr_jackknife = std::sqrt(nm1 / nn * ss);
    return est;
}

bool analytic_cov(Var a, Var b, double t1, double t2, const BlochState& s0,
                  const MeasurementParams& p, double& out) {
    if (!is_noise(a) && !is_noise(b)) {
        const char ca = state_char(a), cb = state_char(b);
        if (ca == cb) {
            out = ca == 'u' ? cov_uu(t1, t2, s0, p)
                            : (ca == 'x' ? cov_xx(t1, t2, s0, p) : cov_yy(t1, t2, s0, p));
            return true;
        }
        if (ca == 'u') { out = cb == 'x' ? cov_ux(t1, t2, s0, p) : cov_uy(t1, t2, s0, p); return true; }
        if (cb == 'u') { out = ca == 'x' ? cov_ux(t2, t1, s0, p) : cov_uy(t2, t1, s0, p); return true; }
        out = ca == 'x' ? cov_xy(t1, t2, s0, p) : cov_xy(t2, t1, s0, p);
        return true;
    }
    if (!is_noise(a) && is_noise(b)) {
        out = corr_state_noise(state_char(a), noise_char(b), t1, t2, s0, p);
        return true;
    }
    if (is_noise(a) && !is_noise(b)) {
        out = corr_state_noise(state_char(b), noise_char(a), t2, t1, s0, p);
        return true;
    }
    // noise-noise: delta correlated, 1/dt on the discrete diagonal
    out = (a == b && t1 == t2) ? 1.0 / p.dt : 0.0;
    return true;
}

CovarianceGrid analytic_cov_grid(Var a, Var b, const std::vector<double>& times,
                                 const BlochState& s0, const MeasurementParams& p) {
    CovarianceGrid grid;
    grid.t1 = times;
    grid.t2 = times;
    grid.pair = to_string(a) + "-" + to_string(b);
    grid.value.assign(times.size(), std::vector<double>(times.size(), 0.0));
    for (std::size_t i = 0; i < times.size(); ++i) {
        for (std::size_t j = 0; j < times.size(); ++j) {
            double v = 0.0;
            analytic_cov(a, b, times[i], times[j], s0, p, v);
            grid.value[i][j] = v;
        }
    }
    return grid;
}

CovarianceGrid empirical_cov_grid(const Ensemble& e, Var a, Var b,
                                  const std::vector<double>& times) {
    CovarianceGrid grid;
    grid.t1 = times;
    grid.t2 = times;
    grid.pair = to_string(a) + "-" + to_string(b);
    grid.value.assign(times.size(), std::vector<double>(times.size(), 0.0));
    grid.stderr_.assign(times.size(), std::vector<double>(times.size(), 0.0));
    for (std::size_t i = 0; i < times.size(); ++i) {
        for (std::size_t j = 0; j < times.size(); ++j) {
            const CovEstimate est = empirical_cov(e, a, b, times[i], times[j]);
            grid.value[i][j] = est.value;
            grid.stderr_[i][j] = est.stderr_jackknife;
        }
    }
    return grid;
}

} // namespace fluor
