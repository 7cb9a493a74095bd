#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gcsvr/forecaster.hpp"
#include "gcsvr/panel.hpp"

namespace gcsvr {

struct ConformalConfig {
    double rho = 0.1;           // miscoverage level
    std::size_t upsilon = 60;   // rolling calibration window length, >= 5
    enum class Scaler { constant, rolling_mae };
    Scaler scaler = Scaler::rolling_mae;
    // The paper's empirical infimum lacks the +1 finite-sample correction;
    // this switches to the ceil((1-rho)(n+1)) order statistic instead.
    bool finite_sample = false;

    bool operator==(const ConformalConfig&) const = default;
};

/// gamma = |actual - forecast| / scaler; scaler must be positive.
double conformity_score(double actual, double forecast, double scaler);

/// Smallest score omega in the window with fraction(scores <= omega) >= 1-rho,
/// i.e. the ceil((1-rho) n)-th order statistic. With finite_sample, the
/// ceil((1-rho)(n+1))-th (clamped to n). Throws InsufficientCalibrationError
/// on an empty window.
double conformal_quantile(std::span<const double> scores, double rho, bool finite_sample = false);

struct PredictionInterval {
    double lower = 0.0;
    double upper = 0.0;
    double center = 0.0;
    double kappa = 0.0;
    double scaler = 1.0;
};

/// [forecast - kappa*scaler, forecast + kappa*scaler].
PredictionInterval make_interval(double forecast, double kappa, double scaler);

/// Interval for a recursion step h >= 1. Scores are calibrated at h = 1 only;
/// with sqrt_h_scaling the h = 1 kappa is widened by sqrt(h), otherwise
/// horizons beyond 1 are refused (the default: calibration covers h = 1).
PredictionInterval interval_at_horizon(double forecast, double kappa, double scaler,
                                       std::size_t h, bool sqrt_h_scaling = false);

/// Rolling per-station state: a FIFO window of the most recent upsilon
/// (absolute error, scaler value) pairs. Owned by one evaluation stream.
class ConformalTracker {
public:
    explicit ConformalTracker(ConformalConfig config) : cfg_(config) {}

    std::size_t count() const noexcept { return window_.size(); }
    bool ready() const noexcept { return !window_.empty(); }

    /// Scaling function U evaluated on the current window: 1 for constant,
    /// the window's mean absolute error (floored at 1e-6) for rolling-mae.
    /// An empty window yields 1 so the first calibration scores are defined.
    double current_scaler() const;

    double current_kappa() const;  // conformal quantile of the buffered scores

    PredictionInterval interval_for(double forecast) const;

    /// Score the realized error with the scaler in effect now, then evict
    /// beyond upsilon.
    void observe(double actual, double forecast);

private:
    ConformalConfig cfg_;
    std::deque<std::pair<double, double>> window_;  // (abs error, scaler at push)
};

struct ConformalRecord {
    DayNumber day;
    std::size_t station;
    double forecast, lower, upper;
    double actual;
    bool covered;
};

struct ConformalReport {
    std::vector<ConformalRecord> records;
    std::vector<double> station_coverage;
    double pooled_coverage = 0.0;
    ConformalConfig config;
};

/// Streams one-step-ahead forecasts through the schedule's test period,
/// maintaining per-station rolling score windows. The upsilon days before the
/// first test day seed the calibration buffers (the panel must reach back a
/// further input_window days).
ConformalReport run_conformal(const GcsvrModel& model, const PanelSeries& panel,
                              const RollingSchedule& schedule, const ConformalConfig& config);

void write_intervals_csv(const ConformalReport& report,
                         const std::vector<std::string>& station_ids,
                         const std::filesystem::path& path);
void write_coverage_json(const ConformalReport& report,
                         const std::vector<std::string>& station_ids,
                         const std::map<std::string, std::string>& config_echo,
                         const std::filesystem::path& path);

}  // namespace gcsvr
