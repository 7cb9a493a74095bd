#include "gcsvr/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "gcsvr/logging.hpp"
#include "gcsvr/parallel.hpp"

namespace gcsvr {

PanelSeries impute(const PanelSeries& panel) {
    const std::size_t t_len = panel.days(), n = panel.stations();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t miss = panel.missing_count(i);
        if (2 * miss > t_len) {
            throw std::invalid_argument("impute: station '" + panel.station_ids()[i] +
                                        "' has more than 50% missing values");
        }
    }
    Matrix values = panel.values();
    for (std::size_t i = 0; i < n; ++i) {
        // forward fill
        bool seen = false;
        double last = 0.0;
        for (std::size_t t = 0; t < t_len; ++t) {
            if (!panel.missing(t, i)) {
                last = values(t, i);
                seen = true;
            } else if (seen) {
                values(t, i) = last;
            }
        }
        // back fill the leading gap
        std::size_t first_obs = t_len;
        for (std::size_t t = 0; t < t_len; ++t) {
            if (!panel.missing(t, i)) {
                first_obs = t;
                break;
            }
        }
        if (first_obs == t_len) {
            // fully missing column survives the 50% gate only when T == 0;
            // keep the guard anyway
            throw std::invalid_argument("impute: station '" + panel.station_ids()[i] +
                                        "' has no observations");
        }
        for (std::size_t t = 0; t < first_obs; ++t) values(t, i) = values(first_obs, i);
    }
    // mask retained for reporting
    return PanelSeries(panel.start_day(), panel.station_ids(), std::move(values),
                       panel.missing_mask());
}

namespace {

Matrix window_ending_before(const PanelSeries& panel, std::size_t t, std::size_t p) {
    // rows = stations, columns = days [t - p, t), oldest first
    const std::size_t n = panel.stations();
    Matrix w(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < p; ++c) w(i, c) = panel.value(t - p + c, i);
    }
    return w;
}

}  // namespace

std::vector<StationDataset> build_training_set(const PanelSeries& panel,
                                               const StationNetwork& network,
                                               const GcnModel& gcn, std::size_t p) {
    const std::size_t t_len = panel.days(), n = panel.stations();
    if (n != network.size()) throw std::invalid_argument("build_training_set: panel/network mismatch");
    if (t_len < p + 1) throw std::invalid_argument("build_training_set: insufficient history");
    if (!panel.values().all_finite()) {
        throw std::invalid_argument("build_training_set: panel has unfilled gaps; impute first");
    }
    const std::size_t r = gcn.config.embed_dim;
    const std::size_t s_count = t_len - p;

    std::vector<StationDataset> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i].inputs = Matrix(s_count, p + r);
        out[i].targets.resize(s_count);
    }
    for (std::size_t s = 0; s < s_count; ++s) {
        const std::size_t t = s + p;  // target day index
        const Matrix w = window_ending_before(panel, t, p);
        const EmbeddingSet emb = gcn_embed(gcn, w, network);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < p; ++c) out[i].inputs(s, c) = w(i, c);
            for (std::size_t c = 0; c < r; ++c) out[i].inputs(s, p + c) = emb.embeddings(i, c);
            out[i].targets[s] = panel.value(t, i);
        }
    }
    return out;
}

GcsvrModel gcsvr_fit(const PanelSeries& panel, const StationNetwork& network,
                     const GcnConfig& gcn_config, const SvrConfig& svr_config,
                     const GcsvrOptions& options) {
    GcsvrModel model;
    model.network = network;
    model.options = options;

    if (options.zero_embeddings) {
        // Lag-only ablation: a zero-parameter GCN embeds everything to 0, so
        // the rest of the pipeline is unchanged.
        GcnModel gcn;
        gcn.config = gcn_config;
        const std::size_t p = gcn_config.input_window, h = gcn_config.hidden_dim,
                          r = gcn_config.embed_dim;
        gcn.w1 = Matrix(p, h);
        gcn.b1 = Matrix(p, h);
        gcn.w2 = Matrix(h, r);
        gcn.b2 = Matrix(h, r);
        gcn.head = Matrix(r, 1);
        model.gcn = std::move(gcn);
    } else {
        model.gcn = gcn_train(panel, network, gcn_config);
    }

    const auto datasets = build_training_set(panel, network, model.gcn, gcn_config.input_window);
    model.svrs.resize(datasets.size());
    parallel_for(datasets.size(), options.jobs, [&](std::size_t i) {
        model.svrs[i] = train_svr(datasets[i].inputs, datasets[i].targets, svr_config);
    });
    return model;
}

ForecastBundle forecast_recursive(const GcsvrModel& model, const PanelSeries& panel,
                                  std::size_t q) {
    if (q < 1) throw std::invalid_argument("forecast_recursive: q must be >= 1");
    const std::size_t p = model.input_window();
    const std::size_t n = model.network.size();
    if (panel.stations() != n) throw std::invalid_argument("forecast_recursive: panel/network mismatch");
    if (panel.days() < p) throw std::invalid_argument("forecast_recursive: need >= p trailing days");
    if (!panel.values().all_finite()) {
        throw std::invalid_argument("forecast_recursive: panel has unfilled gaps; impute first");
    }
    if (model.svrs.size() != n) throw std::invalid_argument("forecast_recursive: model incomplete");

    Matrix window = window_ending_before(panel, panel.days(), p);
    ForecastBundle out;
    out.horizon = q;
    out.points = Matrix(q, n);
    out.origin = panel.last_day();

    Matrix embeddings;
    std::vector<double> input(p + model.embed_dim());
    for (std::size_t h = 0; h < q; ++h) {
        if (h == 0 || !model.options.frozen_recursion_embeddings) {
            embeddings = model.options.zero_embeddings
                             ? Matrix(n, model.embed_dim())
                             : gcn_embed(model.gcn, window, model.network).embeddings;
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < p; ++c) input[c] = window(i, c);
            for (std::size_t c = 0; c < model.embed_dim(); ++c) {
                input[p + c] = embeddings(i, c);
            }
            out.points(h, i) = svr_predict(model.svrs[i], input);
        }
        // slide: drop the oldest column, append the predictions
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c + 1 < p; ++c) window(i, c) = window(i, c + 1);
            window(i, p - 1) = out.points(h, i);
        }
    }
    return out;
}

ForecastBundle naive_baseline(const PanelSeries& panel, std::size_t q) {
    if (q < 1) throw std::invalid_argument("naive_baseline: q must be >= 1");
    if (panel.days() < 1) throw std::invalid_argument("naive_baseline: empty panel");
    const std::size_t n = panel.stations();
    ForecastBundle out;
    out.horizon = q;
    out.points = Matrix(q, n);
    out.origin = panel.last_day();
    for (std::size_t i = 0; i < n; ++i) {
        // last observed value per station (panel may carry a mask)
        double last = 0.0;
        bool found = false;
        for (std::size_t t = panel.days(); t-- > 0;) {
            if (!panel.missing(t, i)) {
                last = panel.value(t, i);
                found = true;
                break;
            }
        }
        if (!found) throw std::invalid_argument("naive_baseline: station with no observations");
        for (std::size_t h = 0; h < q; ++h) out.points(h, i) = last;
    }
    return out;
}

std::vector<double> residual_sigmas(const GcsvrModel& model, const PanelSeries& panel,
                                    std::size_t max_window) {
    const std::size_t p = model.input_window();
    const std::size_t n = model.network.size();
    if (panel.days() < p + 2) throw std::invalid_argument("residual_sigmas: insufficient history");
    const std::size_t avail = panel.days() - p;
    const std::size_t m = std::min(avail, max_window);

    std::vector<std::vector<double>> residuals(n);
    std::vector<double> input(p + model.embed_dim());
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t t = panel.days() - m + k;  // target day
        const Matrix w = window_ending_before(panel, t, p);
        const Matrix emb = model.options.zero_embeddings
                               ? Matrix(n, model.embed_dim())
                               : gcn_embed(model.gcn, w, model.network).embeddings;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < p; ++c) input[c] = w(i, c);
            for (std::size_t c = 0; c < model.embed_dim(); ++c) input[p + c] = emb(i, c);
            residuals[i].push_back(panel.value(t, i) - svr_predict(model.svrs[i], input));
        }
    }
    std::vector<double> sigma(n);
    for (std::size_t i = 0; i < n; ++i) {
        double mu = 0.0;
        for (double e : residuals[i]) mu += e;
        mu /= static_cast<double>(residuals[i].size());
        double var = 0.0;
        for (double e : residuals[i]) var += (e - mu) * (e - mu);
        var /= static_cast<double>(residuals[i].size());
        sigma[i] = std::max(std::sqrt(var), 1e-6);
    }
    return sigma;
}

RollingSchedule make_schedule(const CivilDate& test_year_start, int horizon_days) {
    int window_count = 0;
    int months_per_window = 0;
    switch (horizon_days) {
        case 30: window_count = 12; months_per_window = 1; break;
        case 60: window_count = 6; months_per_window = 2; break;
        case 90: window_count = 4; months_per_window = 3; break;
        default:
            throw std::invalid_argument("make_schedule: horizon must be 30, 60 or 90 days");
    }
    RollingSchedule out;
    out.horizon_days = horizon_days;
    for (int k = 0; k < window_count; ++k) {
        const CivilDate ws = add_months(test_year_start, k * months_per_window);
        const CivilDate we = add_months(test_year_start, (k + 1) * months_per_window);
        ScheduleWindow w;
        w.test_start = to_day_number(ws);
        w.test_end = to_day_number(we) - 1;
        w.train_end = w.test_start - 1;
        out.windows.push_back(w);
    }
    return out;
}

std::vector<BacktestWindowResult> run_backtest(const PanelSeries& panel,
                                               const StationNetwork& network,
                                               const RollingSchedule& schedule,
                                               const GcnConfig& gcn_config,
                                               const SvrConfig& svr_config,
                                               const GcsvrOptions& options,
                                               bool refit_per_window) {
    std::vector<BacktestWindowResult> results;
    GcsvrModel shared_model;
    bool shared_ready = false;
    const SeededRng seed_root(gcn_config.seed);

    for (std::size_t w = 0; w < schedule.windows.size(); ++w) {
        const ScheduleWindow& win = schedule.windows[w];
        (void)panel.index_of_day(win.test_end);  // throws if the panel cannot cover the window
        const std::size_t train_len = panel.index_of_day(win.train_end) + 1;
        const std::size_t q =
            static_cast<std::size_t>(win.test_end - win.test_start + 1);
        const PanelSeries train = panel.slice(0, train_len);

        BacktestWindowResult res;
        res.window = win;
        if (refit_per_window || !shared_ready) {
            GcnConfig cfg = gcn_config;
            cfg.seed = seed_root.split(w).stream_key();  // per-window stream
            shared_model = gcsvr_fit(train, network, cfg, svr_config, options);
            shared_ready = true;
        }
        res.forecast = forecast_recursive(shared_model, train, q);
        res.forecast.residual_sigma = residual_sigmas(shared_model, train);
        res.naive = naive_baseline(train, q);
        results.push_back(std::move(res));
        log::info("backtest window " + std::to_string(w + 1) + "/" +
                  std::to_string(schedule.windows.size()) + " done");
    }
    return results;
}

void write_forecast_json(const ForecastBundle& bundle,
                         const std::vector<std::string>& station_ids,
                         const std::map<std::string, std::string>& config_echo,
                         const std::filesystem::path& path) {
    if (station_ids.size() != bundle.points.cols()) {
        throw std::invalid_argument("write_forecast_json: station id count mismatch");
    }
    nlohmann::json j;
    j["origin"] = format_iso_date(bundle.origin);
    j["horizon"] = bundle.horizon;
    j["station_ids"] = station_ids;
    nlohmann::json points = nlohmann::json::object();
    for (std::size_t i = 0; i < station_ids.size(); ++i) {
        std::vector<double> col(bundle.horizon);
        for (std::size_t h = 0; h < bundle.horizon; ++h) col[h] = bundle.points(h, i);
        points[station_ids[i]] = std::move(col);
    }
    j["points"] = std::move(points);
    if (!bundle.residual_sigma.empty()) {
        nlohmann::json sig = nlohmann::json::object();
        for (std::size_t i = 0; i < station_ids.size(); ++i) {
            sig[station_ids[i]] = bundle.residual_sigma[i];
        }
        j["residual_sigma"] = std::move(sig);
    }
    j["config"] = config_echo;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

ForecastBundle read_forecast_json(const std::filesystem::path& path,
                                  std::vector<std::string>* station_ids) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    ForecastBundle b;
    b.origin = to_day_number(parse_iso_date(j.at("origin").get<std::string>()));
    b.horizon = j.at("horizon").get<std::size_t>();
    const auto ids = j.at("station_ids").get<std::vector<std::string>>();
    b.points = Matrix(b.horizon, ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto col = j.at("points").at(ids[i]).get<std::vector<double>>();
        if (col.size() != b.horizon) {
            throw std::invalid_argument(path.string() + ": horizon/points mismatch");
        }
        for (std::size_t h = 0; h < b.horizon; ++h) b.points(h, i) = col[h];
    }
    if (j.contains("residual_sigma")) {
        b.residual_sigma.resize(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            b.residual_sigma[i] = j.at("residual_sigma").at(ids[i]).get<double>();
        }
    }
    if (station_ids != nullptr) *station_ids = ids;
    return b;
}

}  // namespace gcsvr
