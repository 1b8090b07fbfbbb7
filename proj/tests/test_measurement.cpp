#include "fluor/measurement.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace fluor;

namespace {

BlochState random_state(Rng& rng) {
    for (;;) {
        const double x = 2.0 * rng.uniform() - 1.0;
        const double y = 2.0 * rng.uniform() - 1.0;
        const double z = 2.0 * rng.uniform() - 1.0;
        if (x * x + y * y + z * z <= 1.0) return {1.0 + z, x, y};
    }
}

// Single-step Kraus operator in the (|e>, |g>) basis, unit efficiency.
Eigen::Matrix2cd kraus_matrix(Complex alpha, double epsilon) {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    m(0, 0) = std::sqrt(1.0 - epsilon);
    m(1, 0) = std::sqrt(epsilon) * std::conj(alpha);
    m(1, 1) = 1.0;
    return std::exp(-0.5 * std::norm(alpha)) * m;
}

Eigen::Matrix2cd density_of(const BlochState& s) {
    Eigen::Matrix2cd rho;
    rho(0, 0) = 0.5 * s.u;
    rho(0, 1) = 0.5 * Complex(s.x, -s.y);
    rho(1, 0) = 0.5 * Complex(s.x, s.y);
    rho(1, 1) = 1.0 - 0.5 * s.u;
    return rho;
}

} // namespace

TEST_CASE("outcome density special cases") {
    const Complex a(0.4, -0.7);
    CHECK(prob_alpha({0.0, 0.0, 0.0}, 0.05, a) == doctest::Approx(std::exp(-std::norm(a))));
    CHECK(prob_alpha({1.0, 0.3, -0.2}, 0.0, a) == doctest::Approx(std::exp(-std::norm(a))));
    const double eps = 0.04;
    CHECK(prob_alpha({2.0, 0.0, 0.0}, eps, a)
          == doctest::Approx(std::exp(-std::norm(a)) * (1.0 - eps * (1.0 - std::norm(a)))));
}

TEST_CASE("outcome density equals the Kraus trace and is nonnegative") {
    Rng rng(7);
    for (int k = 0; k < 200; ++k) {
        const BlochState s = random_state(rng);
        const Complex a(3.0 * rng.normal(), 3.0 * rng.normal());
        const double eps = 0.09 * rng.uniform();
        const Eigen::Matrix2cd m = kraus_matrix(a, eps);
        const double tr = (m * density_of(s) * m.adjoint()).trace().real();
        CHECK(prob_alpha(s, eps, a) == doctest::Approx(tr).epsilon(1e-10));
        CHECK(prob_alpha(s, eps, a) >= 0.0);
    }
}

TEST_CASE("outcome density normalizes to one under d^2alpha/pi") {
    const auto normalize = [](const BlochState& s, double eps, double eta) {
        return oracles::integrate_2d(
            [&](double v, double w) {
                return prob_alpha_eta(s, eps, eta, {v, w}) / M_PI;
            },
            6.0, 400);
    };
    CHECK(normalize({1.0, 1.0, 0.0}, 0.05, 1.0) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(normalize({2.0, 0.0, 0.0}, 0.05, 1.0) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(normalize({0.7, -0.2, 0.5}, 0.03, 0.4) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("quadrature log-density has the printed mean and curvature") {
    const MeasurementParams p{1.0, 0.0, 1.0, 0.01};
    const BlochState s{1.3, 0.6, -0.3};
    // maximum over I at I = sqrt(gamma1/2) x for eta = 1
    const double i_star = std::sqrt(p.gamma1 / 2.0) * s.x;
    const double h = 1e-5;
    const double d = (logp_quadratures(s, p, i_star + h, 0.0)
                      - logp_quadratures(s, p, i_star - h, 0.0)) / (2.0 * h);
    CHECK(d == doctest::Approx(0.0).epsilon(1e-9));
    // ground state: log P = -(dt/2)(I^2 + Q^2) up to the state-independent part
    const BlochState g{0.0, 0.0, 0.0};
    CHECK(logp_quadratures(g, p, 2.0, -3.0) - logp_quadratures(g, p, 0.0, 0.0)
          == doctest::Approx(-0.5 * p.dt * (4.0 + 9.0)));
}

TEST_CASE("quadrature sampling matches mean 0 variance 1/dt statistics") {
    const MeasurementParams p{1.0, 0.0, 1.0, 0.01};
    const BlochState s{1.0, 1.0, 0.0};
    Rng rng(11);
    const int n = 1000000;
    double si = 0.0, sq = 0.0, sii = 0.0, sqq = 0.0, siq = 0.0;
    for (int k = 0; k < n; ++k) {
        const auto [i_cur, q_cur] = sample_quadratures(s, p, rng);
        si += i_cur;
        sq += q_cur;
        sii += i_cur * i_cur;
        sqq += q_cur * q_cur;
        siq += i_cur * q_cur;
    }
    const double mi = si / n, mq = sq / n;
    const double vi = sii / n - mi * mi, vq = sqq / n - mq * mq;
    const double cov = siq / n - mi * mq;
    const double se_mean = std::sqrt(1.0 / p.dt / n);
    CHECK(std::abs(mi - std::sqrt(0.5)) < 3.0 * se_mean);
    CHECK(std::abs(mq) < 3.0 * se_mean);
    CHECK(vi == doctest::Approx(1.0 / p.dt).epsilon(0.01));
    CHECK(vq == doctest::Approx(1.0 / p.dt).epsilon(0.01));
    // no cross-correlation
    const double se_cov = (1.0 / p.dt) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(cov) < 3.0 * se_cov);
}

TEST_CASE("kraus update agrees with the matrix computation") {
    Rng rng(13);
    for (int k = 0; k < 200; ++k) {
        const BlochState s = random_state(rng);
        const Complex a(1.5 * rng.normal(), 1.5 * rng.normal());
        const double eps = 0.01 + 0.08 * rng.uniform();
        if (prob_alpha(s, eps, a) < 1e-12) continue;
        const Eigen::Matrix2cd m = kraus_matrix(a, eps);
        Eigen::Matrix2cd rho = m * density_of(s) * m.adjoint();
        rho /= rho.trace().real();
        const BlochState upd = kraus_update(s, a, eps);
        CHECK(upd.u == doctest::Approx(2.0 * rho(0, 0).real()).epsilon(1e-9));
        CHECK(upd.x == doctest::Approx(2.0 * rho(1, 0).real()).epsilon(1e-9));
        CHECK(upd.y == doctest::Approx(2.0 * rho(1, 0).imag()).epsilon(1e-9));
    }
}

TEST_CASE("kraus update preserves purity of pure states") {
    Rng rng(17);
    for (int k = 0; k < 100; ++k) {
        const double theta = M_PI * rng.uniform();
        const double phi = 2.0 * M_PI * rng.uniform();
        const BlochState s{1.0 + std::cos(theta), std::sin(theta) * std::cos(phi),
                           std::sin(theta) * std::sin(phi)};
        const Complex a(rng.normal(), rng.normal());
        const BlochState upd = kraus_update(s, a, 0.05);
        const double defect = 1.0 - (upd.x * upd.x + upd.y * upd.y
                                     + (1.0 - upd.u) * (1.0 - upd.u));
        CHECK(std::abs(defect) < 1e-10);
    }
}

TEST_CASE("energy gain predicate matches the actual excitation change") {
    Rng rng(19);
    int gains = 0;
    for (int k = 0; k < 500; ++k) {
        BlochState s = random_state(rng);
        if (s.u < 1e-3) s.u = 0.5; // u = 0 stays 0; predicate is about u > 0
        const Complex a(rng.normal(), rng.normal());
        const double eps = 0.05;
        if (prob_alpha(s, eps, a) < 1e-10) continue;
        const BlochState upd = kraus_update(s, a, eps);
        const bool gained = upd.u > s.u;
        CHECK(energy_gain_predicate(s, a, eps) == gained);
        gains += gained;
    }
    CHECK(gains > 0); // both branches exercised
}

TEST_CASE("loss-and-dephasing update reduces to the pure Kraus update at eta=1") {
    const MeasurementParams p{1.0, 0.0, 1.0, 0.02};
    Rng rng(23);
    for (int k = 0; k < 100; ++k) {
        const BlochState s = random_state(rng);
        const Complex a(rng.normal(), rng.normal());
        const BlochState via_eta = update_with_loss_dephasing(s, p, a);
        const BlochState via_kraus = kraus_update(s, a, p.epsilon());
        CHECK(via_eta.u == doctest::Approx(via_kraus.u).epsilon(1e-12));
        CHECK(via_eta.x == doctest::Approx(via_kraus.x).epsilon(1e-12));
        CHECK(via_eta.y == doctest::Approx(via_kraus.y).epsilon(1e-12));
    }
}

TEST_CASE("outcome-averaged update reproduces the Lindblad drift") {
    // E[s'] - s over the exact outcome distribution should match
    // u_dot = -gamma1 u, x_dot = -gamma2 x, y_dot = -gamma2 y up to O(dt^2).
    const MeasurementParams p{1.0, 0.7, 0.35, 0.004};
    const BlochState s{1.2, 0.5, -0.4};
    Rng rng(29);
    const int n = 400000;
    double su = 0.0, sx = 0.0, sy = 0.0;
    for (int k = 0; k < n; ++k) {
        const Complex a = sample_alpha_exact(s, p.epsilon(), p.eta, rng);
        const BlochState upd = update_with_loss_dephasing(s, p, a);
        su += upd.u;
        sx += upd.x;
        sy += upd.y;
    }
    const double du = (su / n - s.u) / p.dt;
    const double dx = (sx / n - s.x) / p.dt;
    const double dy = (sy / n - s.y) / p.dt;
    const double g2 = p.gamma2();
    CHECK(du == doctest::Approx(-p.gamma1 * s.u).epsilon(0.05));
    CHECK(dx == doctest::Approx(-g2 * s.x).epsilon(0.05));
    CHECK(dy == doctest::Approx(-g2 * s.y).epsilon(0.05));
}

TEST_CASE("exact outcome sampler matches low-order moments of the density") {
    const BlochState s{1.4, 0.55, -0.35};
    const double eps = 0.06, eta = 0.6;
    const auto moment = [&](auto f) {
        return oracles::integrate_2d(
            [&](double v, double w) {
                return f(v, w) * prob_alpha_eta(s, eps, eta, {v, w}) / M_PI;
            },
            6.0, 300);
    };
    const double ev = moment([](double v, double) { return v; });
    const double ew = moment([](double, double w) { return w; });
    const double er2 = moment([](double v, double w) { return v * v + w * w; });

    Rng rng(31);
    const int n = 500000;
    double sv = 0.0, sw = 0.0, sr2 = 0.0;
    for (int k = 0; k < n; ++k) {
        const Complex a = sample_alpha_exact(s, eps, eta, rng);
        sv += a.real();
        sw += a.imag();
        sr2 += std::norm(a);
    }
    const double se = 1.0 / std::sqrt(static_cast<double>(n)); // component sd ~ 1/sqrt(2)
    CHECK(std::abs(sv / n - ev) < 3.0 * se);
    CHECK(std::abs(sw / n - ew) < 3.0 * se);
    CHECK(std::abs(sr2 / n - er2) < 3.0 * se * 2.0);
}

TEST_CASE("no-click update keeps the excited amplitude shrinking") {
    Complex a(0.8, 0.0), b(0.6, 0.0);
    const double eps = 0.1;
    for (int k = 0; k < 50; ++k) {
        const auto [a2, b2] = no_click_update(a, b, eps);
        CHECK(std::norm(a2) + std::norm(b2) == doctest::Approx(1.0));
        CHECK(std::norm(a2) <= std::norm(a) / (std::norm(a) + std::norm(b)) + 1e-12);
        a = a2;
        b = b2;
    }
    CHECK(std::norm(a) < 1e-2); // drained toward the ground state
}

TEST_CASE("parameter validation rejects out-of-range inputs") {
    CHECK_THROWS_AS(MeasurementParams({-1.0, 0.0, 1.0, 0.01}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(MeasurementParams({1.0, -0.1, 1.0, 0.01}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(MeasurementParams({1.0, 0.0, 1.5, 0.01}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(MeasurementParams({1.0, 0.0, 1.0, 0.2}).validate(), std::invalid_argument);
    CHECK_NOTHROW(MeasurementParams({1.0, 0.5, 0.2, 0.01}).validate());
}
