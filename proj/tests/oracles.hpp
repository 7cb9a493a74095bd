#pragma once

// Test-side oracles. Each one recomputes a quantity by a route independent of
// the implementation it checks: naive loops, dense eigensolvers, projected
// gradient, quadrature.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "gcsvr/matrix.hpp"

namespace oracle {

inline gcsvr::Matrix matmul_naive(const gcsvr::Matrix& a, const gcsvr::Matrix& b) {
    gcsvr::Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            out(i, j) = s;
        }
    return out;
}

inline double max_eigenvalue(const gcsvr::Matrix& sym) {
    const auto n = static_cast<Eigen::Index>(sym.rows());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = sym(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    return solver.eigenvalues().maxCoeff();
}

/// Great-circle distance via the atan2 formulation (distinct from haversine).
inline double great_circle_atan2_km(double lat1, double lon1, double lat2, double lon2,
                                    double radius_km) {
    const double rad = std::acos(-1.0) / 180.0;
    const double p1 = lat1 * rad, p2 = lat2 * rad, dl = (lon1 - lon2) * rad;
    const double num = std::sqrt(std::pow(std::cos(p2) * std::sin(dl), 2) +
                                 std::pow(std::cos(p1) * std::sin(p2) -
                                              std::sin(p1) * std::cos(p2) * std::cos(dl),
                                          2));
    const double den = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
    return radius_km * std::atan2(num, den);
}

/// Adaptive Simpson integration.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int depth = 40) {
    const auto simpson = [&f](double lo, double hi) {
        return (hi - lo) / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi));
    };
    std::function<double(double, double, double, int)> rec =
        [&](double lo, double hi, double whole, int d) -> double {
        const double mid = 0.5 * (lo + hi);
        const double left = simpson(lo, mid);
        const double right = simpson(mid, hi);
        if (d <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
            return left + right + (left + right - whole) / 15.0;
        }
        return rec(lo, mid, left, d - 1) + rec(mid, hi, right, d - 1);
    };
    return rec(a, b, simpson(a, b), depth);
}

/// Epsilon-SVR dual solved as a 2n-variable box-and-hyperplane QP with
/// accelerated projected gradient. Everything here lives in (alpha, alpha*)
/// space, a different route from the pairwise SMO under test.
struct QpSolution {
    std::vector<double> beta;
    double bias = 0.0;
    double objective = 0.0;  // maximization form
};

inline QpSolution solve_svr_qp(const std::vector<std::vector<double>>& kernel,
                               std::span<const double> y, double C, double eps,
                               std::size_t max_iter = 400000) {
    const std::size_t n = y.size();

    // Lipschitz constant of the gradient: 2 * lambda_max(K).
    Eigen::MatrixXd k(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) k(static_cast<Eigen::Index>(i),
                                              static_cast<Eigen::Index>(j)) = kernel[i][j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
    const double lip = std::max(2.0 * es.eigenvalues().maxCoeff(), 1e-9);

    auto project = [&](std::vector<double>& u) {
        // exact projection onto {0 <= u <= C, sum(alpha) - sum(alpha*) = 0}
        double bound = C + 1.0;
        for (double v : u) bound = std::max(bound, std::abs(v) + C + 1.0);
        double lo = -bound, hi = bound;
        const auto constraint = [&](double lam) {
            double s = 0.0;
            for (std::size_t l = 0; l < n; ++l) {
                s += std::clamp(u[l] - lam, 0.0, C);
                s -= std::clamp(u[n + l] + lam, 0.0, C);
            }
            return s;
        };
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (constraint(mid) > 0.0) lo = mid;
            else hi = mid;
        }
        const double lam = 0.5 * (lo + hi);
        for (std::size_t l = 0; l < n; ++l) {
            u[l] = std::clamp(u[l] - lam, 0.0, C);
            u[n + l] = std::clamp(u[n + l] + lam, 0.0, C);
        }
    };

    auto grad = [&](const std::vector<double>& u, std::vector<double>& g) {
        for (std::size_t l = 0; l < n; ++l) {
            double kb = 0.0;
            for (std::size_t m = 0; m < n; ++m) kb += kernel[l][m] * (u[m] - u[n + m]);
            g[l] = kb + eps - y[l];
            g[n + l] = -kb + eps + y[l];
        }
    };

    std::vector<double> u(2 * n, 0.0), v = u, u_prev = u, g(2 * n);
    double t_accel = 1.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        grad(v, g);
        std::vector<double> u_next = v;
        for (std::size_t m = 0; m < 2 * n; ++m) u_next[m] -= g[m] / lip;
        project(u_next);

        double step = 0.0;
        for (std::size_t m = 0; m < 2 * n; ++m) step = std::max(step, std::abs(u_next[m] - v[m]));

        // restart acceleration when momentum points uphill
        double dot = 0.0;
        for (std::size_t m = 0; m < 2 * n; ++m) {
            dot += (v[m] - u_next[m]) * (u_next[m] - u[m]);
        }
        const double t_next = dot > 0.0 ? 1.0 : 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_accel * t_accel));
        u_prev = u;
        u = u_next;
        v = u;
        const double mom = (t_accel - 1.0) / t_next;
        for (std::size_t m = 0; m < 2 * n; ++m) v[m] += mom * (u[m] - u_prev[m]);
        t_accel = t_next;

        if (step < 1e-14 && it > 100) break;
    }

    QpSolution sol;
    sol.beta.resize(n);
    for (std::size_t l = 0; l < n; ++l) sol.beta[l] = u[l] - u[n + l];

    std::vector<double> kb(n, 0.0);
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t m = 0; m < n; ++m) kb[l] += kernel[l][m] * sol.beta[m];

    double obj = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        obj += -0.5 * sol.beta[l] * kb[l] - eps * (u[l] + u[n + l]) + y[l] * sol.beta[l];
    }
    sol.objective = obj;

    // bias: average over free multipliers, else midpoint of the feasible band
    const double slack = 1e-7 * std::max(1.0, C);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t l = 0; l < n; ++l) {
        if (u[l] > slack && u[l] < C - slack) {
            sum += y[l] - kb[l] - eps;
            ++count;
        }
        if (u[n + l] > slack && u[n + l] < C - slack) {
            sum += y[l] - kb[l] + eps;
            ++count;
        }
    }
    if (count > 0) {
        sol.bias = sum / static_cast<double>(count);
    } else {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < n; ++l) {
            if (u[l] < C - slack) lo = std::max(lo, y[l] - kb[l] - eps);
            if (u[l] > slack) hi = std::min(hi, y[l] - kb[l] - eps);
            if (u[n + l] < C - slack) hi = std::min(hi, y[l] - kb[l] + eps);
            if (u[n + l] > slack) lo = std::max(lo, y[l] - kb[l] + eps);
        }
        if (std::isinf(lo) && std::isinf(hi)) sol.bias = 0.0;
        else if (std::isinf(lo)) sol.bias = hi;
        else if (std::isinf(hi)) sol.bias = lo;
        else sol.bias = 0.5 * (lo + hi);
    }
    return sol;
}

/// Sort-based empirical quantile: the k-th smallest with k = ceil(level * n).
inline double sorted_quantile(std::vector<double> scores, double level) {
    std::sort(scores.begin(), scores.end());
    std::size_t k = static_cast<std::size_t>(std::ceil(level * static_cast<double>(scores.size()) -
                                                       1e-12));
    k = std::clamp<std::size_t>(k, 1, scores.size());
    return scores[k - 1];
}

}  // namespace oracle
