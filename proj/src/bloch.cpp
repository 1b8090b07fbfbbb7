#include "fluor/bloch.hpp"

#include <cmath>
#include <stdexcept>

namespace fluor {

double purity_defect(const BlochState& s) {
    const double zm = 1.0 - s.u;
    return 1.0 - (s.x * s.x + s.y * s.y + zm * zm);
}

bool is_physical(const BlochState& s, double tol) {
    return purity_defect(s) >= -tol && s.u >= -tol && s.u <= 2.0 + tol;
}

Matrix2c to_density(const BlochState& s) {
    if (!is_physical(s)) {
        throw std::invalid_argument("to_density: state outside the Bloch ball");
    }
    Matrix2c rho;
    const std::complex<double> off(0.5 * s.x, -0.5 * s.y);
    rho << std::complex<double>(0.5 * s.u, 0.0), off,
           std::conj(off), std::complex<double>(1.0 - 0.5 * s.u, 0.0);
    return rho;
}

BlochState from_density(const Matrix2c& rho, double tol) {
    if ((rho - rho.adjoint()).norm() > 1e-10) {
        throw std::invalid_argument("from_density: matrix is not Hermitian");
    }
    if (std::abs(rho.trace().real() - 1.0) > 1e-10 || std::abs(rho.trace().imag()) > 1e-10) {
        throw std::invalid_argument("from_density: trace is not 1");
    }
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(rho);
    if (es.eigenvalues().minCoeff() < -tol) {
        throw std::invalid_argument("from_density: negative eigenvalue");
    }
    BlochState s;
    s.u = 2.0 * rho(0, 0).real();
    s.x = 2.0 * rho(0, 1).real();
    s.y = -2.0 * rho(0, 1).imag();
    return s;
}

BlochState state_from_theta(double theta) {
    return {1.0 + std::cos(theta), std::sin(theta), 0.0};
}

double theta_from_state(const BlochState& s) {
    return std::atan2(s.x, s.u - 1.0);
}

} // namespace fluor
