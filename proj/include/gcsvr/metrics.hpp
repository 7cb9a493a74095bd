#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gcsvr/matrix.hpp"

namespace gcsvr {

double mae(std::span<const double> actual, std::span<const double> forecast);
double rmse(std::span<const double> actual, std::span<const double> forecast);

/// Forecast MAE over the in-sample naive one-step MAE of the training series.
/// A constant training series floors the denominator at 1e-12 and sets
/// *unreliable when provided.
double mase(std::span<const double> actual, std::span<const double> forecast,
            std::span<const double> train, bool* unreliable = nullptr);

/// Symmetric percentage error in [0, 200]; terms with |X| + |Xhat| == 0
/// contribute 0.
double smape(std::span<const double> actual, std::span<const double> forecast);

/// Mean pinball loss of a rho-level quantile forecast.
double pinball(std::span<const double> actual, std::span<const double> quantile_forecast,
               double rho);

double normal_pdf(double z);
double normal_cdf(double z);
double normal_quantile(double p);  // inverse CDF, p in (0, 1)

/// Predictive distribution: gaussian(mean, sigma) or an empirical sample set.
class PredictiveLaw {
public:
    static PredictiveLaw gaussian(double mean, double sigma);
    static PredictiveLaw empirical(std::vector<double> samples);

    bool is_gaussian() const noexcept { return gaussian_; }
    double mean() const noexcept { return mean_; }
    double sigma() const noexcept { return sigma_; }
    const std::vector<double>& samples() const noexcept { return samples_; }

private:
    bool gaussian_ = true;
    double mean_ = 0.0;
    double sigma_ = 1.0;
    std::vector<double> samples_;
};

/// Gaussian kind uses the closed form sigma * (z(2Phi(z)-1) + 2phi(z) - 1/sqrt(pi));
/// empirical uses mean|s - x| - mean|s - s'| / 2.
double crps(double actual, const PredictiveLaw& law);

/// Gaussian: mean + sigma * Phi^-1(rho); empirical: order statistic with
/// linear interpolation.
double quantile_from_law(const PredictiveLaw& law, double rho);

struct MetricReport {
    std::vector<std::string> station_ids;
    std::vector<double> mae, mase, rmse, smape, pinball, crps;  // per station
    std::vector<std::uint8_t> mase_unreliable;
    double avg_mae = 0, avg_mase = 0, avg_rmse = 0, avg_smape = 0, avg_pinball = 0, avg_crps = 0;
    double rho = 0.8;
};

/// Six-metric report for a q x N forecast block against actuals. `train`
/// supplies the MASE denominators; `sigma` the per-station gaussian law used
/// for CRPS and the rho-quantile pinball.
MetricReport evaluate_point_forecasts(const Matrix& actual, const Matrix& forecast,
                                      const Matrix& train, std::span<const double> sigma,
                                      const std::vector<std::string>& station_ids,
                                      double rho = 0.8);

struct McbResult {
    std::vector<std::string> model_names;
    std::vector<double> mean_ranks;  // average over tasks, ties share the mean rank
    double critical_distance = 0.0;
    std::size_t best_index = 0;
    std::vector<std::uint8_t> significantly_worse;
};

/// Critical value delta_theta for F models at significance theta (0.05 or
/// 0.01): the studentized-range critical value over sqrt(2), from an embedded
/// table covering F in [2, 20].
double studentized_range_delta(std::size_t f, double theta);

/// Mean-rank multiple comparison with the best over a D x F loss matrix
/// (lower is better). CD = delta_theta * sqrt(F(F+1) / (6D)).
McbResult mcb_test(const Matrix& scores, std::vector<std::string> model_names, double theta);

void write_metrics_json(const std::vector<std::pair<std::string, MetricReport>>& reports,
                        const std::map<std::string, std::string>& config_echo,
                        const std::filesystem::path& path);
void write_mcb_csv(const McbResult& result, const std::filesystem::path& path);

/// plotdata_<name>.csv: per-series box-plot quartiles (min, q1, median, q3, max).
void write_plotdata_csv(const std::vector<std::pair<std::string, std::vector<double>>>& series,
                        const std::filesystem::path& path);

}  // namespace gcsvr
