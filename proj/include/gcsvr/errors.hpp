#pragma once

#include <stdexcept>

namespace gcsvr {

// Spectral filtering needs zeta_max > 0; an edgeless graph cannot provide it.
struct DegenerateGraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Conformal quantiles need at least one calibration score in the window.
struct InsufficientCalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gcsvr
