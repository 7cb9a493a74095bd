#pragma once

#include <span>
#include <vector>

#include "gcsvr/matrix.hpp"

namespace gcsvr {

/// Per-column zero-mean unit-variance transform (population convention).
/// Standard deviations are floored so constant columns map to zero instead
/// of blowing up kernel distances.
class Standardizer {
public:
    static constexpr double kStdFloor = 1e-8;

    Standardizer() = default;

    /// Fit on a sample-per-row matrix; needs at least 2 rows.
    static Standardizer fit(const Matrix& rows);

    /// Rebuild from stored moments (model files); floors stddevs.
    static Standardizer from_moments(std::vector<double> means, std::vector<double> stddevs);

    std::vector<double> apply(std::span<const double> x) const;
    std::vector<double> inverse(std::span<const double> z) const;
    Matrix apply_rows(const Matrix& rows) const;

    std::size_t dims() const noexcept { return means_.size(); }
    const std::vector<double>& means() const noexcept { return means_; }
    const std::vector<double>& stddevs() const noexcept { return stds_; }

    bool operator==(const Standardizer& o) const = default;

private:
    std::vector<double> means_;
    std::vector<double> stds_;
};

}  // namespace gcsvr
