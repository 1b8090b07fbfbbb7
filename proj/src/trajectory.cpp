#include "fluor/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace fluor {

namespace {

// Clip a small Euler overshoot back onto the ball surface; anything larger is
// an integration failure. The exact scheme stays inside up to roundoff; the
// fixed-step SDE schemes can overshoot by O(dt) in noise tails (the quadratic
// term zeta^2 xi^2 dt^2 with xi ~ 1/sqrt(dt) beats the inward drift near the
// surface), so their tolerance scales with the step size.
void enforce_physical(BlochState& s, std::size_t step, double clip_limit) {
    const double defect = purity_defect(s);
    if (defect >= -kPhysicalityTol) return;
    if (defect < -clip_limit) {
        throw std::runtime_error("trajectory: state left the Bloch ball at step "
                                 + std::to_string(step));
    }
    const double zm = s.u - 1.0;
    const double r = std::sqrt(s.x * s.x + s.y * s.y + zm * zm);
    s.x /= r;
    s.y /= r;
    s.u = 1.0 + zm / r;
}

} // namespace

Scheme scheme_from_string(const std::string& name) {
    if (name == "exact") return Scheme::Exact;
    if (name == "stratonovich") return Scheme::Stratonovich;
    if (name == "ito") return Scheme::Ito;
    throw std::invalid_argument("unknown scheme: " + name);
}

std::string to_string(Scheme scheme) {
    switch (scheme) {
        case Scheme::Exact: return "exact";
        case Scheme::Stratonovich: return "stratonovich";
        case Scheme::Ito: return "ito";
    }
    return "?";
}

StateDeriv stratonovich_rhs(const BlochState& s, double i_cur, double q_cur,
                            const MeasurementParams& p) {
    const double zeta = p.zeta();
    const double mix = s.x * i_cur + s.y * q_cur;
    StateDeriv d;
    d.du = -p.gamma1 * s.u * (1.0 - 0.5 * p.eta * s.u) - zeta * s.u * mix;
    d.dx = -0.5 * p.gamma1 * s.x * (1.0 - p.eta * s.u) - p.gamma_phi * s.x
           + zeta * (s.u * i_cur - s.x * mix);
    d.dy = -0.5 * p.gamma1 * s.y * (1.0 - p.eta * s.u) - p.gamma_phi * s.y
           + zeta * (s.u * q_cur - s.y * mix);
    return d;
}

StateDeriv ito_rhs(const BlochState& s, double xi_i, double xi_q,
                   const MeasurementParams& p) {
    const double zeta = p.zeta();
    const double gamma2 = p.gamma2();
    const double mix = s.x * xi_i + s.y * xi_q;
    StateDeriv d;
    d.du = -p.gamma1 * s.u - zeta * s.u * mix;
    d.dx = -gamma2 * s.x + zeta * (s.u * xi_i - s.x * mix);
    d.dy = -gamma2 * s.y + zeta * (s.u * xi_q - s.y * mix);
    return d;
}

double theta_sde_step(double theta, double i_cur, const MeasurementParams& p) {
    const auto rhs = [&](double th) {
        return 0.5 * p.gamma1 * std::sin(th)
               + std::sqrt(p.gamma1 / 2.0) * (1.0 + std::cos(th)) * i_cur;
    };
    const double k1 = rhs(theta);
    const double k2 = rhs(theta + k1 * p.dt);
    return theta + 0.5 * p.dt * (k1 + k2);
}

Trajectory simulate_trajectory(const BlochState& s0, const MeasurementParams& p,
                               Scheme scheme, std::size_t n_steps, std::uint64_t seed) {
    p.validate();
    if (!is_physical(s0)) throw std::invalid_argument("simulate_trajectory: unphysical s0");

    Trajectory tr;
    tr.seed = seed;
    tr.times.resize(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k) tr.times[k] = static_cast<double>(k) * p.dt;
    tr.states.reserve(n_steps + 1);
    tr.readout_i.reserve(n_steps);
    tr.readout_q.reserve(n_steps);
    tr.noise_i.reserve(n_steps);
    tr.noise_q.reserve(n_steps);

    Rng rng(seed);
    const double zeta = p.zeta();
    const double eps = p.epsilon();
    const double noise_sd = 1.0 / std::sqrt(p.dt);
    const double clip_limit = scheme == Scheme::Exact
        ? 1e-6
        : 1e-6 + 40.0 * p.eta * p.gamma1 * p.dt;

    BlochState s = s0;
    tr.states.push_back(s);
    for (std::size_t k = 0; k < n_steps; ++k) {
        double i_cur, q_cur;
        if (scheme == Scheme::Exact) {
            const Complex alpha = sample_alpha_exact(s, eps, p.eta, rng);
            std::tie(i_cur, q_cur) = currents_from_alpha(alpha, p.dt);
            tr.readout_i.push_back(i_cur);
            tr.readout_q.push_back(q_cur);
            tr.noise_i.push_back(i_cur - zeta * s.x);
            tr.noise_q.push_back(q_cur - zeta * s.y);
            s = update_with_loss_dephasing(s, p, alpha);
        } else {
            const double xi_i = rng.normal(0.0, noise_sd);
            const double xi_q = rng.normal(0.0, noise_sd);
            i_cur = zeta * s.x + xi_i;
            q_cur = zeta * s.y + xi_q;
            tr.readout_i.push_back(i_cur);
            tr.readout_q.push_back(q_cur);
            tr.noise_i.push_back(xi_i);
            tr.noise_q.push_back(xi_q);
            if (scheme == Scheme::Ito) {
                const StateDeriv d = ito_rhs(s, xi_i, xi_q, p);
                s.u += d.du * p.dt;
                s.x += d.dx * p.dt;
                s.y += d.dy * p.dt;
            } else {
                const StateDeriv k1 = stratonovich_rhs(s, i_cur, q_cur, p);
                BlochState mid{s.u + k1.du * p.dt, s.x + k1.dx * p.dt, s.y + k1.dy * p.dt};
                const StateDeriv k2 = stratonovich_rhs(mid, i_cur, q_cur, p);
                s.u += 0.5 * p.dt * (k1.du + k2.du);
                s.x += 0.5 * p.dt * (k1.dx + k2.dx);
                s.y += 0.5 * p.dt * (k1.dy + k2.dy);
            }
        }
        enforce_physical(s, k, clip_limit);
        tr.states.push_back(s);
    }
    return tr;
}

Ensemble simulate_ensemble(const BlochState& s0, const MeasurementParams& p,
                           Scheme scheme, std::size_t n_steps, std::size_t n_traj,
                           std::uint64_t base_seed, std::size_t n_threads) {
    Ensemble e;
    e.params = p;
    e.initial = s0;
    e.scheme = scheme;
    e.members.resize(n_traj);

    if (n_threads == 0) {
        n_threads = std::max(1u, std::thread::hardware_concurrency());
    }
    n_threads = std::min<std::size_t>(n_threads, std::max<std::size_t>(1, n_traj));

    std::vector<std::thread> workers;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t t = 0; t < n_threads; ++t) {
        workers.emplace_back([&, t] {
            try {
                for (std::size_t k = t; k < n_traj; k += n_threads) {
                    e.members[k] = simulate_trajectory(s0, p, scheme, n_steps, base_seed + k);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    if (error) std::rethrow_exception(error);
    return e;
}

EnsembleStats ensemble_stats(const Ensemble& e) {
    if (e.members.empty()) throw std::invalid_argument("ensemble_stats: empty ensemble");
    const std::size_t n_pts = e.members.front().states.size();
    const double n = static_cast<double>(e.members.size());

    EnsembleStats st;
    st.times = e.members.front().times;
    st.mean_u.assign(n_pts, 0.0);
    st.mean_x.assign(n_pts, 0.0);
    st.mean_y.assign(n_pts, 0.0);
    st.var_u.assign(n_pts, 0.0);
    st.var_x.assign(n_pts, 0.0);
    st.var_y.assign(n_pts, 0.0);

    for (const auto& tr : e.members) {
        for (std::size_t k = 0; k < n_pts; ++k) {
            st.mean_u[k] += tr.states[k].u;
            st.mean_x[k] += tr.states[k].x;
            st.mean_y[k] += tr.states[k].y;
        }
    }
    for (std::size_t k = 0; k < n_pts; ++k) {
        st.mean_u[k] /= n;
        st.mean_x[k] /= n;
        st.mean_y[k] /= n;
    }
    for (const auto& tr : e.members) {
        for (std::size_t k = 0; k < n_pts; ++k) {
            const double du = tr.states[k].u - st.mean_u[k];
            const double dx = tr.states[k].x - st.mean_x[k];
            const double dy = tr.states[k].y - st.mean_y[k];
            st.var_u[k] += du * du;
            st.var_x[k] += dx * dx;
            st.var_y[k] += dy * dy;
        }
    }
    const double denom = e.members.size() > 1 ? n - 1.0 : 1.0;
    for (std::size_t k = 0; k < n_pts; ++k) {
        st.var_u[k] /= denom;
        st.var_x[k] /= denom;
        st.var_y[k] /= denom;
    }
    return st;
}

Ensemble postselect(const Ensemble& e, const FinalCondition& target, double tolerance) {
    if (tolerance <= 0.0) throw std::invalid_argument("postselect: tolerance must be > 0");
    Ensemble out;
    out.params = e.params;
    out.initial = e.initial;
    out.scheme = e.scheme;
    for (const auto& tr : e.members) {
        const BlochState& f = tr.states.back();
        if (target.u && std::abs(f.u - *target.u) > tolerance) continue;
        if (target.x && std::abs(f.x - *target.x) > tolerance) continue;
        if (target.y && std::abs(f.y - *target.y) > tolerance) continue;
        out.members.push_back(tr);
    }
    return out;
}

const Trajectory& empirical_mlp(const Ensemble& e) {
    if (e.members.size() < 2) throw std::invalid_argument("empirical_mlp: need >= 2 members");
    const std::size_t n = e.members.size();
    const std::size_t n_pts = e.members.front().states.size();

    std::vector<double> total(n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n_pts; ++k) {
                const BlochState& sa = e.members[a].states[k];
                const BlochState& sb = e.members[b].states[k];
                const double du = sa.u - sb.u;
                const double dx = sa.x - sb.x;
                const double dy = sa.y - sb.y;
                acc += 0.5 * std::sqrt(du * du + dx * dx + dy * dy);
            }
            const double avg = acc / static_cast<double>(n_pts);
            total[a] += avg;
            total[b] += avg;
        }
    }
    std::size_t best = 0;
    for (std::size_t a = 1; a < n; ++a) {
        if (total[a] < total[best]
            || (total[a] == total[best] && e.members[a].seed < e.members[best].seed)) {
            best = a;
        }
    }
    return e.members[best];
}

} // namespace fluor
