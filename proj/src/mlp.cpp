#include "fluor/mlp.hpp"
#include "fluor/random.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace fluor {

double stochastic_hamiltonian(const PhasePoint& pp, double i_cur, double q_cur,
                              const MeasurementParams& p) {
    const BlochState& s = pp.state;
    const StateDeriv d = stratonovich_rhs(s, i_cur, q_cur, p);
    const double zeta = p.zeta();
    return pp.p_u * d.du + pp.p_x * d.dx + pp.p_y * d.dy
           - 0.5 * i_cur * i_cur + zeta * s.x * i_cur
           - 0.5 * q_cur * q_cur + zeta * s.y * q_cur
           - 0.5 * p.eta * p.gamma1 * s.u;
}

std::pair<double, double> optimal_readout(const PhasePoint& pp,
                                          const MeasurementParams& p) {
    const BlochState& s = pp.state;
    const double zeta = p.zeta();
    const double i_cur = zeta * (s.x + pp.p_x * (s.u - s.x * s.x)
                                 - pp.p_u * s.u * s.x - pp.p_y * s.x * s.y);
    const double q_cur = zeta * (s.y + pp.p_y * (s.u - s.y * s.y)
                                 - pp.p_u * s.u * s.y - pp.p_x * s.x * s.y);
    return {i_cur, q_cur};
}

PhaseDeriv mlp_rhs(const PhasePoint& pp, const MeasurementParams& p) {
    const auto [i_cur, q_cur] = optimal_readout(pp, p);
    const BlochState& s = pp.state;
    const double zeta = p.zeta();
    const double g1 = p.gamma1;
    const double mix = s.x * i_cur + s.y * q_cur;

    PhaseDeriv d;
    d.state = stratonovich_rhs(s, i_cur, q_cur, p);
    d.dp_u = g1 * pp.p_u * (1.0 - p.eta * s.u)
             - 0.5 * g1 * p.eta * (pp.p_x * s.x + pp.p_y * s.y)
             + zeta * (pp.p_u * mix - pp.p_x * i_cur - pp.p_y * q_cur)
             + 0.5 * p.eta * g1;
    d.dp_x = 0.5 * g1 * pp.p_x * (1.0 - p.eta * s.u) + p.gamma_phi * pp.p_x
             + zeta * (pp.p_u * s.u * i_cur + 2.0 * pp.p_x * s.x * i_cur
                       + pp.p_x * s.y * q_cur + pp.p_y * s.y * i_cur - i_cur);
    d.dp_y = 0.5 * g1 * pp.p_y * (1.0 - p.eta * s.u) + p.gamma_phi * pp.p_y
             + zeta * (pp.p_u * s.u * q_cur + pp.p_x * s.x * q_cur
                       + pp.p_y * s.x * i_cur + 2.0 * pp.p_y * s.y * q_cur - q_cur);
    return d;
}

namespace {

PhasePoint axpy(const PhasePoint& base, const PhaseDeriv& d, double h) {
    PhasePoint out;
    out.state.u = base.state.u + h * d.state.du;
    out.state.x = base.state.x + h * d.state.dx;
    out.state.y = base.state.y + h * d.state.dy;
    out.p_u = base.p_u + h * d.dp_u;
    out.p_x = base.p_x + h * d.dp_x;
    out.p_y = base.p_y + h * d.dp_y;
    return out;
}

PhasePoint rk4_step(const PhasePoint& pp, const MeasurementParams& p, double h) {
    const PhaseDeriv k1 = mlp_rhs(pp, p);
    const PhaseDeriv k2 = mlp_rhs(axpy(pp, k1, 0.5 * h), p);
    const PhaseDeriv k3 = mlp_rhs(axpy(pp, k2, 0.5 * h), p);
    const PhaseDeriv k4 = mlp_rhs(axpy(pp, k3, h), p);
    PhasePoint out = pp;
    out.state.u += h / 6.0 * (k1.state.du + 2.0 * k2.state.du + 2.0 * k3.state.du + k4.state.du);
    out.state.x += h / 6.0 * (k1.state.dx + 2.0 * k2.state.dx + 2.0 * k3.state.dx + k4.state.dx);
    out.state.y += h / 6.0 * (k1.state.dy + 2.0 * k2.state.dy + 2.0 * k3.state.dy + k4.state.dy);
    out.p_u += h / 6.0 * (k1.dp_u + 2.0 * k2.dp_u + 2.0 * k3.dp_u + k4.dp_u);
    out.p_x += h / 6.0 * (k1.dp_x + 2.0 * k2.dp_x + 2.0 * k3.dp_x + k4.dp_x);
    out.p_y += h / 6.0 * (k1.dp_y + 2.0 * k2.dp_y + 2.0 * k3.dp_y + k4.dp_y);
    return out;
}

bool blown_up(const PhasePoint& pp) {
    const double big = 1e6;
    return !std::isfinite(pp.state.u) || !std::isfinite(pp.state.x)
           || !std::isfinite(pp.state.y) || !std::isfinite(pp.p_u)
           || !std::isfinite(pp.p_x) || !std::isfinite(pp.p_y)
           || std::abs(pp.p_u) > big || std::abs(pp.p_x) > big || std::abs(pp.p_y) > big
           || std::abs(pp.state.u) > 10.0 || std::abs(pp.state.x) > 10.0
           || std::abs(pp.state.y) > 10.0;
}

// Integrates and returns only the endpoint; empty if the flow diverges.
std::optional<PhasePoint> shoot(const PhasePoint& start, const MeasurementParams& p,
                                double total_time, double step) {
    const auto n = static_cast<std::size_t>(std::ceil(total_time / step - 1e-12));
    const double h = total_time / static_cast<double>(n);
    PhasePoint pp = start;
    for (std::size_t k = 0; k < n; ++k) {
        pp = rk4_step(pp, p, h);
        if (blown_up(pp)) return std::nullopt;
    }
    return pp;
}

} // namespace

MlpPath integrate_mlp(const PhasePoint& start, const MeasurementParams& p,
                      double total_time, double step) {
    const auto n = static_cast<std::size_t>(std::ceil(total_time / step - 1e-12));
    const double h = total_time / static_cast<double>(n);
    MlpPath path;
    path.times.reserve(n + 1);
    path.points.reserve(n + 1);
    path.readout_i.reserve(n + 1);
    path.readout_q.reserve(n + 1);
    path.energy.reserve(n + 1);

    PhasePoint pp = start;
    for (std::size_t k = 0; k <= n; ++k) {
        path.times.push_back(static_cast<double>(k) * h);
        path.points.push_back(pp);
        const auto [i_cur, q_cur] = optimal_readout(pp, p);
        path.readout_i.push_back(i_cur);
        path.readout_q.push_back(q_cur);
        path.energy.push_back(stochastic_hamiltonian(pp, i_cur, q_cur, p));
        if (k < n) {
            pp = rk4_step(pp, p, h);
            if (blown_up(pp)) {
                throw std::runtime_error("integrate_mlp: flow diverged at t="
                                         + std::to_string(path.times.back()));
            }
        }
    }
    return path;
}

MlpBvpResult solve_mlp_bvp(const BlochState& s0, const FinalCondition& sf, double total_time,
                           const MeasurementParams& p, const MlpBvpOptions& opts) {
    if (total_time <= 0.0) throw std::invalid_argument("solve_mlp_bvp: T must be > 0");
    if (!is_physical(s0)) throw std::invalid_argument("solve_mlp_bvp: unphysical s0");

    const double bad = 1e8;
    // Residual: matched final coordinates where conditioned, transversality
    // p_i(T) = 0 on the free ones.
    const auto residual = [&](const Eigen::Vector3d& p0) -> Eigen::Vector3d {
        PhasePoint start{s0, p0[0], p0[1], p0[2]};
        const auto end = shoot(start, p, total_time, opts.step);
        if (!end) return Eigen::Vector3d::Constant(bad);
        Eigen::Vector3d r;
        r[0] = sf.u ? end->state.u - *sf.u : end->p_u;
        r[1] = sf.x ? end->state.x - *sf.x : end->p_x;
        r[2] = sf.y ? end->state.y - *sf.y : end->p_y;
        return r;
    };

    Rng restart_rng(opts.restart_seed);
    MlpBvpResult result;
    Eigen::Vector3d best_p0(opts.initial_momenta[0], opts.initial_momenta[1],
                            opts.initial_momenta[2]);
    double best_norm = std::numeric_limits<double>::infinity();

    for (int attempt = 0; attempt <= opts.max_restarts && !result.converged; ++attempt) {
        Eigen::Vector3d p0(opts.initial_momenta[0], opts.initial_momenta[1],
                           opts.initial_momenta[2]);
        if (attempt > 0) {
            const double scale = 0.5 * static_cast<double>(1 + attempt / 4);
            for (int i = 0; i < 3; ++i) p0[i] += scale * restart_rng.normal();
        }
        Eigen::Vector3d r = residual(p0);
        double norm = r.norm();
        for (int iter = 0; iter < opts.max_newton && norm > opts.tol; ++iter) {
            ++result.newton_iterations;
            if (norm >= bad) break;
            // Central-difference Jacobian of the shooting map.
            Eigen::Matrix3d jac;
            const double fd = 1e-6 * std::max(1.0, p0.norm());
            bool jac_ok = true;
            for (int j = 0; j < 3; ++j) {
                Eigen::Vector3d pl = p0, pr = p0;
                pl[j] -= fd;
                pr[j] += fd;
                const Eigen::Vector3d rl = residual(pl), rr = residual(pr);
                if (rl.norm() >= bad || rr.norm() >= bad) { jac_ok = false; break; }
                jac.col(j) = (rr - rl) / (2.0 * fd);
            }
            if (!jac_ok) break;
            const Eigen::Vector3d delta = jac.fullPivLu().solve(-r);
            if (!delta.allFinite()) break;
            // Damped update: halve until the residual improves.
            double lambda = 1.0;
            bool improved = false;
            for (int half = 0; half < 20; ++half, lambda *= 0.5) {
                const Eigen::Vector3d cand = p0 + lambda * delta;
                const Eigen::Vector3d rc = residual(cand);
                if (rc.norm() < norm) {
                    p0 = cand;
                    r = rc;
                    norm = rc.norm();
                    improved = true;
                    break;
                }
            }
            if (!improved) break;
        }
        if (norm < best_norm) {
            best_norm = norm;
            best_p0 = p0;
        }
        if (norm <= opts.tol) result.converged = true;
    }

    result.residual = best_norm;
    PhasePoint start{s0, best_p0[0], best_p0[1], best_p0[2]};
    result.path = integrate_mlp(start, p, total_time, opts.step);
    result.energy = result.path.energy.front();
    return result;
}

} // namespace fluor
