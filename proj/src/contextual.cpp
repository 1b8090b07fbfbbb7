#include "fluor/contextual.hpp"

#include <cmath>
#include <stdexcept>

namespace fluor {

Eigen::Matrix2cd povm_element(Complex alpha, double epsilon) {
    const double n2 = std::norm(alpha);
    const double w = std::exp(-n2);
    const double se = std::sqrt(epsilon);
    Eigen::Matrix2cd e;
    e(0, 0) = w * (1.0 - epsilon * (1.0 - n2));
    e(0, 1) = w * se * alpha;
    e(1, 0) = w * se * std::conj(alpha);
    e(1, 1) = w;
    return e;
}

PauliTarget pauli_from_string(const std::string& name) {
    if (name == "identity") return PauliTarget::Identity;
    if (name == "sigma_x") return PauliTarget::X;
    if (name == "sigma_y") return PauliTarget::Y;
    if (name == "sigma_z") return PauliTarget::Z;
    throw std::invalid_argument("unknown observable: " + name);
}

std::string to_string(PauliTarget t) {
    switch (t) {
        case PauliTarget::Identity: return "identity";
        case PauliTarget::X: return "sigma_x";
        case PauliTarget::Y: return "sigma_y";
        case PauliTarget::Z: return "sigma_z";
    }
    return "?";
}

Eigen::Matrix2cd pauli_matrix(PauliTarget t) {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    const Complex im(0.0, 1.0);
    switch (t) {
        case PauliTarget::Identity: m(0, 0) = m(1, 1) = 1.0; break;
        case PauliTarget::X: m(0, 1) = m(1, 0) = 1.0; break;
        case PauliTarget::Y: m(0, 1) = -im; m(1, 0) = im; break;
        case PauliTarget::Z: m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    }
    return m;
}

double ContextualValue::operator()(Complex alpha) const {
    switch (target) {
        case PauliTarget::Identity: return 1.0;
        case PauliTarget::X: return 2.0 / std::sqrt(epsilon) * alpha.real();
        case PauliTarget::Y: return -2.0 / std::sqrt(epsilon) * alpha.imag();
        case PauliTarget::Z: return 2.0 / epsilon * (std::norm(alpha) - 1.0) - 1.0;
    }
    return 0.0;
}

ContextualValue cv_for(PauliTarget target, double epsilon) {
    if (target != PauliTarget::Identity && epsilon <= 0.0) {
        throw std::invalid_argument("cv_for: epsilon must be > 0");
    }
    return ContextualValue{target, epsilon};
}

Reconstruction reconstruct_expectation(const std::vector<Complex>& samples,
                                       const ContextualValue& cv) {
    if (samples.empty()) throw std::invalid_argument("reconstruct_expectation: no samples");
    double sum = 0.0, sum2 = 0.0;
    for (Complex a : samples) {
        const double v = cv(a);
        sum += v;
        sum2 += v * v;
    }
    const double n = static_cast<double>(samples.size());
    Reconstruction rec;
    rec.n = samples.size();
    rec.estimate = sum / n;
    const double var = std::max(0.0, (sum2 / n - rec.estimate * rec.estimate)) * n / std::max(1.0, n - 1.0);
    rec.stderr_ = std::sqrt(var / n);
    return rec;
}

Reconstruction reconstruct_from_state(const BlochState& s, double epsilon,
                                      PauliTarget target, std::size_t n_samples, Rng& rng) {
    std::vector<Complex> samples;
    samples.reserve(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) {
        samples.push_back(sample_alpha_exact(s, epsilon, 1.0, rng));
    }
    return reconstruct_expectation(samples, cv_for(target, epsilon));
}

double true_expectation(const BlochState& s, PauliTarget target) {
    switch (target) {
        case PauliTarget::Identity: return 1.0;
        case PauliTarget::X: return s.x;
        case PauliTarget::Y: return s.y;
        case PauliTarget::Z: return s.u - 1.0;
    }
    return 0.0;
}

} // namespace fluor
