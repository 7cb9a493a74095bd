#include "gcsvr/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "gcsvr/errors.hpp"

namespace gcsvr {

double conformity_score(double actual, double forecast, double scaler) {
    if (!(scaler > 0.0)) throw std::invalid_argument("conformity_score: scaler must be positive");
    return std::abs(actual - forecast) / scaler;
}

double conformal_quantile(std::span<const double> scores, double rho, bool finite_sample) {
    if (scores.empty()) {
        throw InsufficientCalibrationError("conformal_quantile: empty calibration window");
    }
    if (!(rho > 0.0 && rho < 1.0)) {
        throw std::invalid_argument("conformal_quantile: rho must be in (0,1)");
    }
    const std::size_t n = scores.size();
    const double level = (1.0 - rho) * static_cast<double>(finite_sample ? n + 1 : n);
    std::size_t k = static_cast<std::size_t>(std::ceil(level - 1e-12));
    if (k < 1) k = 1;
    if (k > n) k = n;
    std::vector<double> v(scores.begin(), scores.end());
    std::nth_element(v.begin(), v.begin() + (k - 1), v.end());
    return v[k - 1];
}

PredictionInterval make_interval(double forecast, double kappa, double scaler) {
    if (kappa < 0.0) throw std::invalid_argument("make_interval: kappa must be >= 0");
    if (!(scaler > 0.0)) throw std::invalid_argument("make_interval: scaler must be positive");
    PredictionInterval iv;
    iv.center = forecast;
    iv.kappa = kappa;
    iv.scaler = scaler;
    iv.lower = forecast - kappa * scaler;
    iv.upper = forecast + kappa * scaler;
    return iv;
}

PredictionInterval interval_at_horizon(double forecast, double kappa, double scaler,
                                       std::size_t h, bool sqrt_h_scaling) {
    if (h < 1) throw std::invalid_argument("interval_at_horizon: h must be >= 1");
    if (h > 1 && !sqrt_h_scaling) {
        throw std::invalid_argument(
            "interval_at_horizon: scores are calibrated for h = 1; enable sqrt_h_scaling "
            "to extrapolate");
    }
    return make_interval(forecast, kappa * std::sqrt(static_cast<double>(h)), scaler);
}

double ConformalTracker::current_scaler() const {
    if (cfg_.scaler == ConformalConfig::Scaler::constant) return 1.0;
    if (window_.empty()) return 1.0;
    double s = 0.0;
    for (const auto& [abs_err, scaler] : window_) s += abs_err;
    return std::max(s / static_cast<double>(window_.size()), 1e-6);
}

double ConformalTracker::current_kappa() const {
    std::vector<double> scores;
    scores.reserve(window_.size());
    for (const auto& [abs_err, scaler] : window_) scores.push_back(abs_err / scaler);
    return conformal_quantile(scores, cfg_.rho, cfg_.finite_sample);
}

PredictionInterval ConformalTracker::interval_for(double forecast) const {
    return make_interval(forecast, current_kappa(), current_scaler());
}

void ConformalTracker::observe(double actual, double forecast) {
    const double scaler = current_scaler();
    window_.emplace_back(std::abs(actual - forecast), scaler);
    while (window_.size() > cfg_.upsilon) window_.pop_front();
}

ConformalReport run_conformal(const GcsvrModel& model, const PanelSeries& panel,
                              const RollingSchedule& schedule, const ConformalConfig& config) {
    if (schedule.windows.empty()) throw std::invalid_argument("run_conformal: empty schedule");
    if (config.upsilon < 5) throw std::invalid_argument("run_conformal: upsilon must be >= 5");
    if (!panel.values().all_finite()) {
        throw std::invalid_argument("run_conformal: panel has unfilled gaps; impute first");
    }
    const std::size_t p = model.input_window();
    const std::size_t n = model.network.size();
    const DayNumber first_test = schedule.windows.front().test_start;
    const DayNumber last_test = schedule.windows.back().test_end;
    const DayNumber calib_start = first_test - static_cast<DayNumber>(config.upsilon);
    if (calib_start - static_cast<DayNumber>(p) < panel.start_day() || last_test > panel.last_day()) {
        throw InsufficientCalibrationError(
            "run_conformal: panel too short for upsilon calibration days plus the input window");
    }

    std::vector<ConformalTracker> trackers(n, ConformalTracker(config));
    ConformalReport report;
    report.config = config;
    std::vector<std::size_t> observed(n, 0), covered(n, 0);

    std::vector<double> input(p + model.embed_dim());
    for (DayNumber d = calib_start; d <= last_test; ++d) {
        const std::size_t t = panel.index_of_day(d);
        Matrix window(n, p);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < p; ++c) window(i, c) = panel.value(t - p + c, i);
        }
        const Matrix emb = model.options.zero_embeddings
                               ? Matrix(n, model.embed_dim())
                               : gcn_embed(model.gcn, window, model.network).embeddings;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < p; ++c) input[c] = window(i, c);
            for (std::size_t c = 0; c < model.embed_dim(); ++c) input[p + c] = emb(i, c);
            const double forecast = svr_predict(model.svrs[i], input);

            // imputed cells feed the windows, but only genuinely observed
            // actuals are scored or pushed into the calibration buffer
            if (panel.missing(t, i)) continue;
            if (d >= first_test) {
                const PredictionInterval iv = trackers[i].interval_for(forecast);
                const double actual = panel.value(t, i);
                const bool hit = actual >= iv.lower && actual <= iv.upper;
                report.records.push_back({d, i, forecast, iv.lower, iv.upper, actual, hit});
                ++observed[i];
                if (hit) ++covered[i];
            }
            trackers[i].observe(panel.value(t, i), forecast);
        }
    }

    report.station_coverage.resize(n);
    std::size_t total_obs = 0, total_cov = 0;
    for (std::size_t i = 0; i < n; ++i) {
        report.station_coverage[i] =
            observed[i] > 0 ? static_cast<double>(covered[i]) / static_cast<double>(observed[i])
                            : 0.0;
        total_obs += observed[i];
        total_cov += covered[i];
    }
    report.pooled_coverage =
        total_obs > 0 ? static_cast<double>(total_cov) / static_cast<double>(total_obs) : 0.0;
    return report;
}

void write_intervals_csv(const ConformalReport& report,
                         const std::vector<std::string>& station_ids,
                         const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(17);
    out << "date,station_id,forecast,lower,upper,covered\n";
    for (const auto& r : report.records) {
        out << format_iso_date(r.day) << ',' << station_ids.at(r.station) << ',' << r.forecast
            << ',' << r.lower << ',' << r.upper << ',' << (r.covered ? 1 : 0) << '\n';
    }
}

void write_coverage_json(const ConformalReport& report,
                         const std::vector<std::string>& station_ids,
                         const std::map<std::string, std::string>& config_echo,
                         const std::filesystem::path& path) {
    nlohmann::json j;
    nlohmann::json per_station = nlohmann::json::object();
    for (std::size_t i = 0; i < station_ids.size(); ++i) {
        per_station[station_ids[i]] = report.station_coverage[i];
    }
    j["per_station"] = std::move(per_station);
    j["pooled"] = report.pooled_coverage;
    j["rho"] = report.config.rho;
    j["upsilon"] = report.config.upsilon;
    j["scaler"] =
        report.config.scaler == ConformalConfig::Scaler::constant ? "constant" : "rolling-mae";
    j["finite_sample"] = report.config.finite_sample;
    j["config"] = config_echo;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace gcsvr
