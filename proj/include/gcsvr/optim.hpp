#pragma once

#include <cstddef>

#include "gcsvr/matrix.hpp"

namespace gcsvr {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_stab = 1e-8;
    double weight_decay = 0.0;
};

/// Moment accumulators for one parameter tensor. Confined to the single
/// thread that owns the training loop.
class AdamState {
public:
    AdamState(std::size_t rows, std::size_t cols, AdamConfig cfg = {});

    const AdamConfig& config() const noexcept { return cfg_; }
    std::size_t step_count() const noexcept { return steps_; }
    const Matrix& first_moment() const noexcept { return m_; }
    const Matrix& second_moment() const noexcept { return v_; }

    friend Matrix adam_step(AdamState& state, const Matrix& param, const Matrix& grad);

private:
    AdamConfig cfg_;
    std::size_t steps_ = 0;
    Matrix m_;
    Matrix v_;
};

/// One Adam update with bias-corrected moments. Decoupled weight decay is
/// applied as param -= lr * weight_decay * param before the moment update.
Matrix adam_step(AdamState& state, const Matrix& param, const Matrix& grad);

}  // namespace gcsvr
