#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gcsvr/gcn.hpp"
#include "gcsvr/geo_graph.hpp"
#include "gcsvr/panel.hpp"
#include "gcsvr/svr.hpp"

namespace gcsvr {

/// Forward-fill per station, then back-fill leading gaps, then the station
/// mean for all-missing prefixes. Rejects stations with more than 50% missing.
PanelSeries impute(const PanelSeries& panel);

struct StationDataset {
    Matrix inputs;               // n x (p + r): [lag window || embedding]
    std::vector<double> targets;  // n
};

/// One sample per t in [p+1, T]: embedding from the window ending at t-1,
/// input = [X_{t-p..t-1} || Z_{t-1}], target = X_t.
std::vector<StationDataset> build_training_set(const PanelSeries& panel,
                                               const StationNetwork& network,
                                               const GcnModel& gcn, std::size_t p);

struct GcsvrOptions {
    bool zero_embeddings = false;            // lag-only ablation: embeddings forced to 0
    bool frozen_recursion_embeddings = false;  // keep the h=1 embedding for all horizons
    std::size_t jobs = 1;                    // per-station training parallelism

    bool operator==(const GcsvrOptions&) const = default;
};

struct GcsvrModel {
    GcnModel gcn;
    std::vector<SvrModel> svrs;  // one per station, network order
    StationNetwork network;
    GcsvrOptions options;

    std::size_t input_window() const { return gcn.config.input_window; }
    std::size_t embed_dim() const { return gcn.config.embed_dim; }
};

/// Trains the spatial module, freezes it, builds per-station datasets and
/// trains one SVR per station (in parallel when options.jobs > 1; results are
/// merged by index so the output is independent of the parallelism degree).
GcsvrModel gcsvr_fit(const PanelSeries& panel, const StationNetwork& network,
                     const GcnConfig& gcn_config, const SvrConfig& svr_config,
                     const GcsvrOptions& options = {});

struct ForecastBundle {
    std::size_t horizon = 0;
    Matrix points;     // q x N
    DayNumber origin;  // last observed day
    std::vector<double> residual_sigma;  // per station; empty unless attached
};

/// Recursive multi-step forecast: an N x p working window seeded with the
/// last p observed days; each step re-embeds the current window (unless
/// frozen_recursion_embeddings), predicts every station, appends the column
/// and drops the oldest.
ForecastBundle forecast_recursive(const GcsvrModel& model, const PanelSeries& panel,
                                  std::size_t q);

/// Persistence: repeat each station's last observed value q times.
ForecastBundle naive_baseline(const PanelSeries& panel, std::size_t q);

/// Standard deviation of the most recent one-step-ahead in-sample residuals
/// (up to max_window of them), floored at 1e-6. Feeds the gaussian predictive
/// laws and mirrors the conformal calibration window.
std::vector<double> residual_sigmas(const GcsvrModel& model, const PanelSeries& panel,
                                    std::size_t max_window = 60);

struct ScheduleWindow {
    DayNumber train_end;   // last training day (inclusive), = test_start - 1
    DayNumber test_start;  // inclusive
    DayNumber test_end;    // inclusive
};

struct RollingSchedule {
    int horizon_days = 30;  // 30, 60 or 90
    std::vector<ScheduleWindow> windows;
};

/// Expanding-origin windows tiling one year from test_year_start: 12 monthly,
/// 6 two-month or 4 quarterly windows for horizons 30/60/90.
RollingSchedule make_schedule(const CivilDate& test_year_start, int horizon_days);

struct BacktestWindowResult {
    ScheduleWindow window;
    ForecastBundle forecast;
    ForecastBundle naive;
};

/// Expanding-origin backtest over a schedule. The GCN + SVRs are refit per
/// window by default (seed derived per window); set refit_per_window = false
/// to train once on the first window's span.
std::vector<BacktestWindowResult> run_backtest(const PanelSeries& panel,
                                               const StationNetwork& network,
                                               const RollingSchedule& schedule,
                                               const GcnConfig& gcn_config,
                                               const SvrConfig& svr_config,
                                               const GcsvrOptions& options,
                                               bool refit_per_window = true);

/// forecasts.json: origin, horizon, per-station arrays, residual sigmas and a
/// config echo for provenance.
void write_forecast_json(const ForecastBundle& bundle,
                         const std::vector<std::string>& station_ids,
                         const std::map<std::string, std::string>& config_echo,
                         const std::filesystem::path& path);
ForecastBundle read_forecast_json(const std::filesystem::path& path,
                                  std::vector<std::string>* station_ids = nullptr);

}  // namespace gcsvr
