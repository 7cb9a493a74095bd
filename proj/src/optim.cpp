#include "gcsvr/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace gcsvr {

AdamState::AdamState(std::size_t rows, std::size_t cols, AdamConfig cfg)
    : cfg_(cfg), m_(rows, cols), v_(rows, cols) {
    if (!(cfg_.lr > 0.0)) throw std::invalid_argument("AdamState: lr must be positive");
}

Matrix adam_step(AdamState& state, const Matrix& param, const Matrix& grad) {
    if (!param.same_shape(state.m_) || !grad.same_shape(state.m_)) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    const AdamConfig& c = state.cfg_;
    state.steps_ += 1;
    const double t = static_cast<double>(state.steps_);
    const double bc1 = 1.0 - std::pow(c.beta1, t);
    const double bc2 = 1.0 - std::pow(c.beta2, t);

    Matrix out = param;
    auto& p = out.values();
    auto& m = state.m_.values();
    auto& v = state.v_.values();
    const auto& g = grad.values();
    for (std::size_t k = 0; k < p.size(); ++k) {
        p[k] -= c.lr * c.weight_decay * p[k];  // decoupled decay, before the update
        m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
        v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
        const double m_hat = m[k] / bc1;
        const double v_hat = v[k] / bc2;
        p[k] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps_stab);
    }
    return out;
}

}  // namespace gcsvr
