#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "gcsvr/matrix.hpp"
#include "gcsvr/standardize.hpp"

namespace gcsvr {

enum class KernelKind { rbf, linear };

struct KernelParams {
    KernelKind kind = KernelKind::rbf;
    double gamma = 1.0;  // rbf width, > 0

    bool operator==(const KernelParams&) const = default;
};

struct SvrConfig {
    double C = 100.0;
    double epsilon = 0.1;        // tube half-width, in standardized target units
    KernelKind kernel = KernelKind::rbf;
    bool gamma_scale = true;     // gamma = 1 / (d * pooled variance); else gamma_fixed
    double gamma_fixed = 1.0;
    double tol = 1e-3;           // max tolerated KKT violation
    std::size_t max_passes = 1000;  // sweep cap; one sweep = n working-set updates

    bool operator==(const SvrConfig&) const = default;
};

/// exp(-gamma * ||u - v||^2); 1 iff u == v.
double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma);

double kernel_eval(const KernelParams& k, std::span<const double> u, std::span<const double> v);

/// gamma = 1 / (n_features * pooled population variance of all entries).
/// Zero pooled variance falls back to 1 / n_features with a warning.
double gamma_scale(const Matrix& inputs);

/// max(0, |y - yhat| - epsilon).
double epsilon_loss(double y, double yhat, double epsilon);

/// Trained epsilon-SVR for one station. Support vectors and the dual
/// coefficients beta = alpha - alpha* live in standardized feature/target
/// space; predict() maps back to original units. Immutable after training.
struct SvrModel {
    Matrix support_vectors;      // n_sv x d, standardized
    std::vector<double> beta;    // one per support vector, in [-C, C]
    double bias = 0.0;           // standardized target units
    KernelParams kernel;
    Standardizer feature_scaler;
    double target_mean = 0.0;
    double target_std = 1.0;
    SvrConfig config;            // echo

    bool operator==(const SvrModel&) const = default;
};

struct SmoSolution {
    std::vector<double> beta;      // all n training coefficients
    std::vector<double> gradient;  // (K beta)_l - y_l at exit
    double bias = 0.0;
    double dual_objective = 0.0;  // maximization form
    std::size_t iterations = 0;
    double kkt_violation = 0.0;   // at exit
};

/// SMO on the standardized dual: maximal-violating-pair selection, exact
/// piecewise line search on the selected pair, equality constraint preserved
/// from the zero start. The observer (when set) receives the dual objective
/// after every accepted step.
SmoSolution smo_solve(const Matrix& inputs, std::span<const double> targets,
                      const KernelParams& kernel, double C, double epsilon, double tol,
                      std::size_t max_passes,
                      const std::function<void(double)>& objective_observer = {});

/// Standardizes features and targets, solves the dual, certifies the KKT
/// conditions at config.tol and drops zero-coefficient vectors. `info`, when
/// non-null, receives solver diagnostics.
SvrModel train_svr(const Matrix& inputs, std::span<const double> targets, const SvrConfig& config,
                   SmoSolution* info = nullptr);

/// Kernel expansion over stored vectors plus bias, de-standardized.
double svr_predict(const SvrModel& model, std::span<const double> input);

struct KktReport {
    double max_violation = 0.0;   // standardized target units
    double beta_sum = 0.0;
    double max_abs_beta = 0.0;
    bool complementarity_ok = true;  // min(alpha, alpha*) == 0 for every l

    bool pass(double tol) const {
        return max_violation <= tol + 1e-9 && std::abs(beta_sum) <= 1e-9 && complementarity_ok;
    }
};

/// Post-training certificate on the full training set (raw units in, checked
/// in standardized space).
KktReport svr_kkt_report(const SvrModel& model, const Matrix& raw_inputs,
                         std::span<const double> raw_targets);

/// svr_<station_id>.model round-trip; write-then-read is bit-exact.
void write_svr_model(const SvrModel& model, const std::filesystem::path& path);
SvrModel read_svr_model(const std::filesystem::path& path);

}  // namespace gcsvr
