#include "gcsvr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace gcsvr {

namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, const char* who) {
    if (a.size() != b.size() || a.empty()) {
        throw std::invalid_argument(std::string(who) + ": length mismatch or empty input");
    }
}

}  // namespace

double mae(std::span<const double> actual, std::span<const double> forecast) {
    check_lengths(actual, forecast, "mae");
    double s = 0.0;
    for (std::size_t h = 0; h < actual.size(); ++h) s += std::abs(actual[h] - forecast[h]);
    return s / static_cast<double>(actual.size());
}

double rmse(std::span<const double> actual, std::span<const double> forecast) {
    check_lengths(actual, forecast, "rmse");
    double s = 0.0;
    for (std::size_t h = 0; h < actual.size(); ++h) {
        const double d = actual[h] - forecast[h];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(actual.size()));
}

double mase(std::span<const double> actual, std::span<const double> forecast,
            std::span<const double> train, bool* unreliable) {
    check_lengths(actual, forecast, "mase");
    if (train.size() < 2) throw std::invalid_argument("mase: training series needs >= 2 points");
    double denom = 0.0;
    for (std::size_t t = 1; t < train.size(); ++t) denom += std::abs(train[t] - train[t - 1]);
    denom /= static_cast<double>(train.size() - 1);
    bool flagged = false;
    if (denom < 1e-12) {
        denom = 1e-12;
        flagged = true;
    }
    if (unreliable != nullptr) *unreliable = flagged;
    return mae(actual, forecast) / denom;
}

double smape(std::span<const double> actual, std::span<const double> forecast) {
    check_lengths(actual, forecast, "smape");
    double s = 0.0;
    for (std::size_t h = 0; h < actual.size(); ++h) {
        const double denom = std::abs(actual[h]) + std::abs(forecast[h]);
        if (denom > 0.0) s += 2.0 * std::abs(actual[h] - forecast[h]) / denom;
    }
    return s / static_cast<double>(actual.size()) * 100.0;
}

double pinball(std::span<const double> actual, std::span<const double> quantile_forecast,
               double rho) {
    check_lengths(actual, quantile_forecast, "pinball");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("pinball: rho must be in (0,1)");
    double s = 0.0;
    for (std::size_t h = 0; h < actual.size(); ++h) {
        const double d = actual[h] - quantile_forecast[h];
        s += std::max(rho * d, (rho - 1.0) * d);
    }
    return s / static_cast<double>(actual.size());
}

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
    // Acklam's rational approximation, then one Halley refinement.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

PredictiveLaw PredictiveLaw::gaussian(double mean, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("PredictiveLaw: sigma must be positive");
    PredictiveLaw law;
    law.gaussian_ = true;
    law.mean_ = mean;
    law.sigma_ = sigma;
    return law;
}

PredictiveLaw PredictiveLaw::empirical(std::vector<double> samples) {
    if (samples.empty()) throw std::invalid_argument("PredictiveLaw: need >= 1 sample");
    PredictiveLaw law;
    law.gaussian_ = false;
    law.samples_ = std::move(samples);
    std::sort(law.samples_.begin(), law.samples_.end());
    return law;
}

double crps(double actual, const PredictiveLaw& law) {
    if (law.is_gaussian()) {
        const double z = (actual - law.mean()) / law.sigma();
        return law.sigma() *
               (z * (2.0 * normal_cdf(z) - 1.0) + 2.0 * normal_pdf(z) -
                1.0 / std::sqrt(std::numbers::pi));
    }
    const auto& s = law.samples();
    const double m = static_cast<double>(s.size());
    double term1 = 0.0;
    for (double v : s) term1 += std::abs(v - actual);
    term1 /= m;
    double term2 = 0.0;
    for (double u : s)
        for (double v : s) term2 += std::abs(u - v);
    term2 /= (2.0 * m * m);
    return term1 - term2;
}

double quantile_from_law(const PredictiveLaw& law, double rho) {
    if (!(rho > 0.0 && rho < 1.0)) {
        throw std::invalid_argument("quantile_from_law: rho must be in (0,1)");
    }
    if (law.is_gaussian()) return law.mean() + law.sigma() * normal_quantile(rho);
    const auto& s = law.samples();  // sorted
    if (s.size() == 1) return s[0];
    const double pos = rho * static_cast<double>(s.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= s.size()) return s.back();
    const double frac = pos - static_cast<double>(lo);
    return s[lo] + frac * (s[lo + 1] - s[lo]);
}

MetricReport evaluate_point_forecasts(const Matrix& actual, const Matrix& forecast,
                                      const Matrix& train, std::span<const double> sigma,
                                      const std::vector<std::string>& station_ids,
                                      double rho) {
    if (!actual.same_shape(forecast) || actual.rows() == 0) {
        throw std::invalid_argument("evaluate_point_forecasts: shape mismatch");
    }
    const std::size_t n = actual.cols();
    if (train.cols() != n || sigma.size() != n || station_ids.size() != n) {
        throw std::invalid_argument("evaluate_point_forecasts: station count mismatch");
    }
    const std::size_t q = actual.rows();
    MetricReport rep;
    rep.station_ids = station_ids;
    rep.rho = rho;
    rep.mase_unreliable.assign(n, 0);
    const double zq = normal_quantile(rho);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> a(q), f(q), tr(train.rows());
        for (std::size_t h = 0; h < q; ++h) {
            a[h] = actual(h, i);
            f[h] = forecast(h, i);
        }
        for (std::size_t t = 0; t < train.rows(); ++t) tr[t] = train(t, i);
        rep.mae.push_back(mae(a, f));
        bool unreliable = false;
        rep.mase.push_back(mase(a, f, tr, &unreliable));
        rep.mase_unreliable[i] = unreliable ? 1 : 0;
        rep.rmse.push_back(rmse(a, f));
        rep.smape.push_back(smape(a, f));
        // gaussian law centered on the point forecast, per-station sigma
        std::vector<double> qf(q);
        for (std::size_t h = 0; h < q; ++h) qf[h] = f[h] + sigma[i] * zq;
        rep.pinball.push_back(pinball(a, qf, rho));
        double c = 0.0;
        for (std::size_t h = 0; h < q; ++h) {
            c += crps(a[h], PredictiveLaw::gaussian(f[h], sigma[i]));
        }
        rep.crps.push_back(c / static_cast<double>(q));
    }
    auto avg = [n](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
    };
    rep.avg_mae = avg(rep.mae);
    rep.avg_mase = avg(rep.mase);
    rep.avg_rmse = avg(rep.rmse);
    rep.avg_smape = avg(rep.smape);
    rep.avg_pinball = avg(rep.pinball);
    rep.avg_crps = avg(rep.crps);
    return rep;
}

double studentized_range_delta(std::size_t f, double theta) {
    // Upper critical values of the studentized range, infinite df, F = 2..20.
    static constexpr double q05[] = {2.771808, 3.314493, 3.633160, 3.857656, 4.030092, 4.169554,
                                     4.286309, 4.386509, 4.474124, 4.551864, 4.621655, 4.684920,
                                     4.742732, 4.795924, 4.845154, 4.890951, 4.933745, 4.973892,
                                     5.011689};
    static constexpr double q01[] = {3.642773, 4.120303, 4.402801, 4.602821, 4.757047, 4.882166,
                                     4.987183, 5.077506, 5.156635, 5.226963, 5.290196, 5.347592,
                                     5.400105, 5.448476, 5.493291, 5.535020, 5.574047, 5.610690,
                                     5.645215};
    if (f < 2 || f > 20) {
        throw std::invalid_argument("studentized_range_delta: F must be in [2, 20]");
    }
    const double* table = nullptr;
    if (std::abs(theta - 0.05) < 1e-12) table = q05;
    else if (std::abs(theta - 0.01) < 1e-12) table = q01;
    else throw std::invalid_argument("studentized_range_delta: theta must be 0.05 or 0.01");
    return table[f - 2] / std::numbers::sqrt2;
}

McbResult mcb_test(const Matrix& scores, std::vector<std::string> model_names, double theta) {
    const std::size_t d = scores.rows(), f = scores.cols();
    if (d < 2 || f < 2) throw std::invalid_argument("mcb_test: need D >= 2 tasks and F >= 2 models");
    if (model_names.size() != f) throw std::invalid_argument("mcb_test: name count mismatch");
    if (!scores.all_finite()) throw std::invalid_argument("mcb_test: non-finite scores");

    McbResult res;
    res.model_names = std::move(model_names);
    res.mean_ranks.assign(f, 0.0);
    for (std::size_t task = 0; task < d; ++task) {
        std::vector<std::size_t> order(f);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return scores(task, a) < scores(task, b);
        });
        // average-rank ties
        std::size_t k = 0;
        while (k < f) {
            std::size_t k2 = k;
            while (k2 + 1 < f && scores(task, order[k2 + 1]) == scores(task, order[k])) ++k2;
            const double shared =
                (static_cast<double>(k + 1) + static_cast<double>(k2 + 1)) / 2.0;
            for (std::size_t m = k; m <= k2; ++m) res.mean_ranks[order[m]] += shared;
            k = k2 + 1;
        }
    }
    for (double& r : res.mean_ranks) r /= static_cast<double>(d);

    res.critical_distance = studentized_range_delta(f, theta) *
                            std::sqrt(static_cast<double>(f * (f + 1)) / (6.0 * static_cast<double>(d)));
    res.best_index = static_cast<std::size_t>(
        std::min_element(res.mean_ranks.begin(), res.mean_ranks.end()) - res.mean_ranks.begin());
    res.significantly_worse.assign(f, 0);
    for (std::size_t m = 0; m < f; ++m) {
        if (res.mean_ranks[m] - res.mean_ranks[res.best_index] > res.critical_distance) {
            res.significantly_worse[m] = 1;
        }
    }
    return res;
}

void write_metrics_json(const std::vector<std::pair<std::string, MetricReport>>& reports,
                        const std::map<std::string, std::string>& config_echo,
                        const std::filesystem::path& path) {
    nlohmann::json j;
    nlohmann::json blocks = nlohmann::json::object();
    for (const auto& [label, rep] : reports) {
        nlohmann::json block;
        nlohmann::json per_station = nlohmann::json::object();
        for (std::size_t i = 0; i < rep.station_ids.size(); ++i) {
            per_station[rep.station_ids[i]] = {
                {"mae", rep.mae[i]},       {"mase", rep.mase[i]},
                {"rmse", rep.rmse[i]},     {"smape", rep.smape[i]},
                {"pinball", rep.pinball[i]}, {"crps", rep.crps[i]},
                {"mase_unreliable", rep.mase_unreliable[i] != 0}};
        }
        block["per_station"] = std::move(per_station);
        block["average"] = {{"mae", rep.avg_mae},       {"mase", rep.avg_mase},
                            {"rmse", rep.avg_rmse},     {"smape", rep.avg_smape},
                            {"pinball", rep.avg_pinball}, {"crps", rep.avg_crps}};
        block["rho"] = rep.rho;
        blocks[label] = std::move(block);
    }
    j["windows"] = std::move(blocks);
    j["config"] = config_echo;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_mcb_csv(const McbResult& result, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(17);
    out << "model,mean_rank,cd,flagged\n";
    for (std::size_t m = 0; m < result.model_names.size(); ++m) {
        out << result.model_names[m] << ',' << result.mean_ranks[m] << ','
            << result.critical_distance << ',' << (result.significantly_worse[m] ? 1 : 0) << '\n';
    }
}

void write_plotdata_csv(const std::vector<std::pair<std::string, std::vector<double>>>& series,
                        const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(17);
    out << "series,min,q1,median,q3,max\n";
    for (const auto& [name, values] : series) {
        if (values.empty()) continue;
        std::vector<double> v = values;
        std::sort(v.begin(), v.end());
        auto quantile = [&v](double p) {
            const double pos = p * static_cast<double>(v.size() - 1);
            const std::size_t lo = static_cast<std::size_t>(pos);
            if (lo + 1 >= v.size()) return v.back();
            return v[lo] + (pos - static_cast<double>(lo)) * (v[lo + 1] - v[lo]);
        };
        out << name << ',' << v.front() << ',' << quantile(0.25) << ',' << quantile(0.5) << ','
            << quantile(0.75) << ',' << v.back() << '\n';
    }
}

}  // namespace gcsvr
