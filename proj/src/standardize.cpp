#include "gcsvr/standardize.hpp"

#include <cmath>
#include <stdexcept>

namespace gcsvr {

Standardizer Standardizer::fit(const Matrix& rows) {
    if (rows.rows() < 2) {
        throw std::invalid_argument("Standardizer::fit: need at least 2 rows");
    }
    const std::size_t n = rows.rows(), d = rows.cols();
    Standardizer s;
    s.means_.assign(d, 0.0);
    s.stds_.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) s.means_[j] += rows(i, j);
    for (std::size_t j = 0; j < d; ++j) s.means_[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double dv = rows(i, j) - s.means_[j];
            s.stds_[j] += dv * dv;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        s.stds_[j] = std::sqrt(s.stds_[j] / static_cast<double>(n));
        if (s.stds_[j] < kStdFloor) s.stds_[j] = kStdFloor;
    }
    return s;
}

Standardizer Standardizer::from_moments(std::vector<double> means, std::vector<double> stddevs) {
    if (means.size() != stddevs.size()) {
        throw std::invalid_argument("Standardizer::from_moments: length mismatch");
    }
    for (double& s : stddevs) {
        if (!(s >= kStdFloor)) s = kStdFloor;
    }
    Standardizer out;
    out.means_ = std::move(means);
    out.stds_ = std::move(stddevs);
    return out;
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
    if (x.size() != means_.size()) {
        throw std::invalid_argument("Standardizer::apply: dimension mismatch");
    }
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - means_[j]) / stds_[j];
    return z;
}

std::vector<double> Standardizer::inverse(std::span<const double> z) const {
    if (z.size() != means_.size()) {
        throw std::invalid_argument("Standardizer::inverse: dimension mismatch");
    }
    std::vector<double> x(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) x[j] = z[j] * stds_[j] + means_[j];
    return x;
}

Matrix Standardizer::apply_rows(const Matrix& rows) const {
    if (rows.cols() != means_.size()) {
        throw std::invalid_argument("Standardizer::apply_rows: dimension mismatch");
    }
    Matrix out(rows.rows(), rows.cols());
    for (std::size_t i = 0; i < rows.rows(); ++i)
        for (std::size_t j = 0; j < rows.cols(); ++j)
            out(i, j) = (rows(i, j) - means_[j]) / stds_[j];
    return out;
}

}  // namespace gcsvr
