#include "fluor/sme.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace fluor {

namespace {

using Eigen::MatrixXcd;
using Complexd = std::complex<double>;

MatrixXcd hermitize(const MatrixXcd& m) { return 0.5 * (m + m.adjoint()); }

// B = iH + sum L'L/2; the no-outcome Kraus piece is M0 = I - B dt and the
// normalization matrix is R = M0'M0 + sum L'L dt = I + B'B dt^2.
MatrixXcd drift_operator(const OperatorSet& ops) {
    const auto n = ops.dim();
    MatrixXcd b = Complexd(0.0, 1.0) * ops.H;
    for (const auto& ch : ops.channels) b += 0.5 * ch.L.adjoint() * ch.L;
    (void)n;
    return b;
}

// (sqrt R)^{-1} by Hermitian eigendecomposition.
MatrixXcd inv_sqrt_r(const MatrixXcd& b, double dt) {
    const auto n = b.rows();
    const MatrixXcd r = hermitize(MatrixXcd::Identity(n, n) + b.adjoint() * b * (dt * dt));
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(r);
    if (es.info() != Eigen::Success) throw std::runtime_error("inv_sqrt_r: eigensolver failed");
    Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace

void OperatorSet::validate(double tol) const {
    const auto n = dim();
    if (H.rows() != H.cols()) throw std::invalid_argument("OperatorSet: H must be square");
    if ((H - H.adjoint()).cwiseAbs().maxCoeff() > tol) {
        throw std::invalid_argument("OperatorSet: H must be Hermitian");
    }
    for (const auto& ch : channels) {
        if (ch.L.rows() != n || ch.L.cols() != n) {
            throw std::invalid_argument("OperatorSet: channel dimension mismatch");
        }
        if (ch.eta < 0.0 || ch.eta > 1.0) {
            throw std::invalid_argument("OperatorSet: efficiency must lie in [0, 1]");
        }
    }
}

void check_density(const Eigen::MatrixXcd& rho, double tol) {
    if (rho.rows() != rho.cols()) throw std::invalid_argument("density matrix must be square");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) {
        throw std::invalid_argument("density matrix must be Hermitian");
    }
    if (std::abs(rho.trace().real() - 1.0) > tol || std::abs(rho.trace().imag()) > tol) {
        throw std::invalid_argument("density matrix must have unit trace");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(hermitize(rho));
    if (es.eigenvalues().minCoeff() < -tol) {
        throw std::invalid_argument("density matrix must be positive semidefinite");
    }
}

Eigen::MatrixXcd rouchon_step(const Eigen::MatrixXcd& rho, const std::vector<double>& r,
                              double dt, const OperatorSet& ops) {
    if (r.size() != ops.n_channels()) {
        throw std::invalid_argument("rouchon_step: outcome vector length mismatch");
    }
    const auto n = ops.dim();
    const MatrixXcd b = drift_operator(ops);
    const MatrixXcd s = inv_sqrt_r(b, dt);

    MatrixXcd m = MatrixXcd::Identity(n, n) - b * dt;
    for (std::size_t nu = 0; nu < r.size(); ++nu) {
        m += std::sqrt(ops.channels[nu].eta) * r[nu] * dt * ops.channels[nu].L;
    }
    m = m * s;

    MatrixXcd out = m * rho * m.adjoint();
    for (const auto& ch : ops.channels) {
        const MatrixXcd lt = ch.L * s;
        out += (1.0 - ch.eta) * dt * (lt * rho * lt.adjoint());
    }
    const double tr = out.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) {
        throw std::runtime_error("rouchon_step: nonpositive trace");
    }
    return hermitize(out / tr);
}

namespace {

// Exact outcome density is gaussian(r) * g(r) with g a nonnegative quadratic:
//   g(r) = a + b.r + r^T C r,  sigma = S rho S,
//   a = tr(M0 sigma M0') + sum (1-eta) tr(L sigma L') dt,
//   b_nu = 2 sqrt(eta) dt Re tr(L_nu sigma M0'),
//   C_numu = sqrt(eta_nu eta_mu) dt^2 Re tr(L_nu sigma L_mu') (symmetrized).
// E[g] over r ~ Normal(0, 1/dt)^m equals 1 exactly.
struct QuadraticDensity {
    double a = 0.0;
    Eigen::VectorXd b;
    Eigen::MatrixXd c;

    double g(const Eigen::VectorXd& r) const {
        return a + b.dot(r) + r.dot(c * r);
    }
};

QuadraticDensity outcome_quadratic(const Eigen::MatrixXcd& rho, double dt,
                                   const OperatorSet& ops) {
    const auto n = ops.dim();
    const auto m_ch = static_cast<Eigen::Index>(ops.n_channels());
    const MatrixXcd bop = drift_operator(ops);
    const MatrixXcd s = inv_sqrt_r(bop, dt);
    const MatrixXcd sigma = s * rho * s.adjoint();
    const MatrixXcd m0 = MatrixXcd::Identity(n, n) - bop * dt;

    QuadraticDensity q;
    q.b = Eigen::VectorXd::Zero(m_ch);
    q.c = Eigen::MatrixXd::Zero(m_ch, m_ch);
    q.a = (m0 * sigma * m0.adjoint()).trace().real();
    for (Eigen::Index nu = 0; nu < m_ch; ++nu) {
        const auto& lnu = ops.channels[nu].L;
        const double eta_nu = ops.channels[nu].eta;
        q.a += (1.0 - eta_nu) * dt * (lnu * sigma * lnu.adjoint()).trace().real();
        q.b[nu] = 2.0 * std::sqrt(eta_nu) * dt * (lnu * sigma * m0.adjoint()).trace().real();
        for (Eigen::Index mu = 0; mu < m_ch; ++mu) {
            const auto& lmu = ops.channels[mu].L;
            q.c(nu, mu) = std::sqrt(eta_nu * ops.channels[mu].eta) * dt * dt
                          * (lnu * sigma * lmu.adjoint()).trace().real();
        }
    }
    q.c = 0.5 * (q.c + q.c.transpose()).eval();
    return q;
}

} // namespace

double outcome_density(const Eigen::MatrixXcd& rho, const std::vector<double>& r,
                       double dt, const OperatorSet& ops) {
    const QuadraticDensity q = outcome_quadratic(rho, dt, ops);
    Eigen::VectorXd rv = Eigen::Map<const Eigen::VectorXd>(r.data(),
                                                           static_cast<Eigen::Index>(r.size()));
    double gauss = 1.0;
    for (double ri : r) gauss *= std::sqrt(dt / (2.0 * M_PI)) * std::exp(-0.5 * ri * ri * dt);
    return q.g(rv) * gauss;
}

std::vector<double> sample_outcomes(const Eigen::MatrixXcd& rho, double dt,
                                    const OperatorSet& ops, Rng& rng, bool exact) {
    const auto m_ch = ops.n_channels();
    std::vector<double> r(m_ch, 0.0);
    const double sd = 1.0 / std::sqrt(dt);

    if (!exact) {
        for (std::size_t nu = 0; nu < m_ch; ++nu) {
            const auto& ch = ops.channels[nu];
            const double mean = std::sqrt(ch.eta)
                                * ((ch.L * rho).trace() + (rho * ch.L.adjoint()).trace()).real();
            r[nu] = rng.normal(mean, sd);
        }
        return r;
    }

    const QuadraticDensity q = outcome_quadratic(rho, dt, ops);
    // Rejection against the inflated proposal Normal(0, 2/dt)^m. The ratio is
    // 2^{m/2} g(r) e^{-|r|^2 dt/4}, bounded term by term:
    //   sup |r| e^{-|r|^2 dt/4} = sqrt(2/dt) e^{-1/2},
    //   sup |r|^2 e^{-|r|^2 dt/4} = (4/dt) e^{-1}.
    const double mm = static_cast<double>(m_ch);
    const double bnorm = q.b.norm();
    double lam_max = 0.0;
    if (m_ch > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q.c);
        lam_max = std::max(0.0, es.eigenvalues().maxCoeff());
    }
    const double bound = std::pow(2.0, 0.5 * mm)
                         * (q.a + bnorm * std::sqrt(2.0 / dt) * std::exp(-0.5)
                            + lam_max * 4.0 / (dt * M_E));
    const double prop_sd = std::sqrt(2.0) * sd;

    Eigen::VectorXd rv(static_cast<Eigen::Index>(m_ch));
    for (int attempt = 0; attempt < 100000; ++attempt) {
        double r2 = 0.0;
        for (Eigen::Index nu = 0; nu < rv.size(); ++nu) {
            rv[nu] = rng.normal(0.0, prop_sd);
            r2 += rv[nu] * rv[nu];
        }
        const double ratio = std::pow(2.0, 0.5 * mm) * q.g(rv) * std::exp(-0.25 * r2 * dt);
        if (rng.uniform() * bound <= ratio) {
            for (std::size_t nu = 0; nu < m_ch; ++nu) r[nu] = rv[static_cast<Eigen::Index>(nu)];
            return r;
        }
    }
    throw std::runtime_error("sample_outcomes: rejection sampler failed to accept");
}

Eigen::MatrixXcd drift_superop(const Eigen::MatrixXcd& rho, const std::vector<double>& r,
                               const OperatorSet& ops) {
    if (r.size() != ops.n_channels()) {
        throw std::invalid_argument("drift_superop: outcome vector length mismatch");
    }
    const Complexd im(0.0, 1.0);
    MatrixXcd out = -im * (ops.H * rho - rho * ops.H);
    for (std::size_t nu = 0; nu < r.size(); ++nu) {
        const auto& l = ops.channels[nu].L;
        const double eta = ops.channels[nu].eta;
        const MatrixXcd lrl = l * rho * l.adjoint();
        const MatrixXcd ll = l.adjoint() * l;
        const MatrixXcd sig = l * rho + rho * l.adjoint();
        out += lrl - 0.5 * (ll * rho + rho * ll);
        out += eta * (lrl.trace().real() * rho - lrl);
        out += r[nu] * std::sqrt(eta) * (sig - sig.trace().real() * rho);
    }
    return out;
}

double log_likelihood(const Eigen::MatrixXcd& rho, const std::vector<double>& r,
                      const OperatorSet& ops, double dt) {
    if (r.size() != ops.n_channels()) {
        throw std::invalid_argument("log_likelihood: outcome vector length mismatch");
    }
    double f = 0.0;
    for (std::size_t nu = 0; nu < r.size(); ++nu) {
        const auto& l = ops.channels[nu].L;
        const double eta = ops.channels[nu].eta;
        const double sig = (l * rho + rho * l.adjoint()).trace().real();
        const double lrl = (l * rho * l.adjoint()).trace().real();
        f += -0.5 * r[nu] * r[nu] + r[nu] * std::sqrt(eta) * sig - eta * lrl;
    }
    return f * dt;
}

double general_stochastic_hamiltonian(const Eigen::MatrixXcd& xi, const Eigen::MatrixXcd& rho,
                                      const std::vector<double>& r, const OperatorSet& ops) {
    // rate form: F per unit time, so the value matches the coordinate-space
    // stochastic Hamiltonian for the qubit specialization
    return (xi * drift_superop(rho, r, ops)).trace().real()
           + log_likelihood(rho, r, ops, 1.0);
}

Eigen::MatrixXcd adjoint_rhs(const Eigen::MatrixXcd& xi, const Eigen::MatrixXcd& rho,
                             const std::vector<double>& r, const OperatorSet& ops) {
    if (r.size() != ops.n_channels()) {
        throw std::invalid_argument("adjoint_rhs: outcome vector length mismatch");
    }
    const Complexd im(0.0, 1.0);
    MatrixXcd out = -im * (ops.H * xi - xi * ops.H);
    const double xr = (xi * rho).trace().real();
    for (std::size_t nu = 0; nu < r.size(); ++nu) {
        const auto& l = ops.channels[nu].L;
        const double eta = ops.channels[nu].eta;
        const MatrixXcd ll = l.adjoint() * l;
        const MatrixXcd lxl = l.adjoint() * xi * l;
        const MatrixXcd sig = l + l.adjoint();
        const double tr_sig = (l * rho + rho * l.adjoint()).trace().real();
        const double tr_lrl = (l * rho * l.adjoint()).trace().real();
        out -= lxl - 0.5 * (ll * xi + xi * ll);
        out -= eta * (tr_lrl * xi + (xr - 1.0) * ll - lxl);
        out -= r[nu] * std::sqrt(eta)
               * (xi * l + l.adjoint() * xi - tr_sig * xi - (xr - 1.0) * sig);
    }
    return hermitize(out);
}

std::vector<double> stationary_readout(const Eigen::MatrixXcd& xi,
                                       const Eigen::MatrixXcd& rho, const OperatorSet& ops) {
    std::vector<double> r(ops.n_channels(), 0.0);
    const double xr = (xi * rho).trace().real();
    for (std::size_t nu = 0; nu < r.size(); ++nu) {
        const auto& l = ops.channels[nu].L;
        const MatrixXcd sig = l * rho + rho * l.adjoint();
        r[nu] = std::sqrt(ops.channels[nu].eta)
                * ((xi * sig).trace().real() - sig.trace().real() * (xr - 1.0));
    }
    return r;
}

OperatorSet fluorescence_operator_set(double gamma1, double gamma_phi, double eta) {
    if (gamma1 <= 0.0 || gamma_phi < 0.0 || eta < 0.0 || eta > 1.0) {
        throw std::invalid_argument("fluorescence_operator_set: invalid rates");
    }
    // basis order (|e>, |g>): sigma- = |g><e|
    Eigen::Matrix2cd sm = Eigen::Matrix2cd::Zero();
    sm(1, 0) = 1.0;
    Eigen::Matrix2cd sz = Eigen::Matrix2cd::Zero();
    sz(0, 0) = 1.0;
    sz(1, 1) = -1.0;

    OperatorSet ops;
    ops.H = Eigen::Matrix2cd::Zero();
    const MatrixXcd l1 = std::sqrt(gamma1 / 2.0) * sm;
    ops.channels.push_back({l1, eta});
    ops.channels.push_back({Complexd(0.0, 1.0) * l1, eta});
    if (gamma_phi > 0.0) {
        ops.channels.push_back({std::sqrt(gamma_phi / 2.0) * MatrixXcd(sz), 0.0});
    }
    return ops;
}

Eigen::Matrix2cd xi_from_momenta(double p_u, double p_x, double p_y) {
    const Complexd im(0.0, 1.0);
    Eigen::Matrix2cd xi;
    xi(0, 0) = p_u;
    xi(1, 1) = -p_u;
    xi(0, 1) = p_x - im * p_y;
    xi(1, 0) = p_x + im * p_y;
    return xi;
}

void momenta_from_xi(const Eigen::MatrixXcd& xi, double& p_u, double& p_x, double& p_y) {
    p_u = 0.5 * (xi(0, 0) - xi(1, 1)).real();
    p_x = (0.5 * (xi(0, 1) + xi(1, 0))).real();
    p_y = (0.5 * Complexd(0.0, 1.0) * (xi(0, 1) - xi(1, 0))).real();
}

SmeTrajectory simulate_sme(const Eigen::MatrixXcd& rho0, const OperatorSet& ops, double dt,
                           std::size_t n_steps, std::uint64_t seed, bool exact_sampling) {
    ops.validate();
    check_density(rho0);
    Rng rng(seed);
    SmeTrajectory traj;
    traj.seed = seed;
    traj.times.reserve(n_steps + 1);
    traj.states.reserve(n_steps + 1);
    traj.outcomes.reserve(n_steps);

    Eigen::MatrixXcd rho = rho0;
    for (std::size_t k = 0; k <= n_steps; ++k) {
        traj.times.push_back(static_cast<double>(k) * dt);
        traj.states.push_back(rho);
        if (k < n_steps) {
            std::vector<double> r = sample_outcomes(rho, dt, ops, rng, exact_sampling);
            rho = rouchon_step(rho, r, dt, ops);
            traj.outcomes.push_back(std::move(r));
        }
    }
    return traj;
}

namespace {

nlohmann::json matrix_to_json(const MatrixXcd& m) {
    nlohmann::json entries = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            entries.push_back({m(i, j).real(), m(i, j).imag()});
        }
    }
    return entries;
}

MatrixXcd matrix_from_json(const nlohmann::json& entries, Eigen::Index n) {
    if (entries.size() != static_cast<std::size_t>(n * n)) {
        throw std::invalid_argument("operator_set_from_json: matrix entry count mismatch");
    }
    MatrixXcd m(n, n);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j, ++k) {
            m(i, j) = Complexd(entries[k].at(0).get<double>(), entries[k].at(1).get<double>());
        }
    }
    return m;
}

} // namespace

std::string operator_set_to_json(const OperatorSet& ops) {
    nlohmann::json j;
    j["dim"] = ops.dim();
    j["H"] = matrix_to_json(ops.H);
    j["channels"] = nlohmann::json::array();
    for (const auto& ch : ops.channels) {
        j["channels"].push_back({{"L", matrix_to_json(ch.L)}, {"eta", ch.eta}});
    }
    return j.dump(2);
}

OperatorSet operator_set_from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    const auto n = j.at("dim").get<Eigen::Index>();
    OperatorSet ops;
    ops.H = matrix_from_json(j.at("H"), n);
    for (const auto& ch : j.at("channels")) {
        ops.channels.push_back({matrix_from_json(ch.at("L"), n), ch.at("eta").get<double>()});
    }
    ops.validate();
    return ops;
}

} // namespace fluor
