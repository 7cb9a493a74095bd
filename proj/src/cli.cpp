#include "gcsvr/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "gcsvr/conformal.hpp"
#include "gcsvr/errors.hpp"
#include "gcsvr/forecaster.hpp"
#include "gcsvr/logging.hpp"
#include "gcsvr/metrics.hpp"
#include "gcsvr/panel_io.hpp"
#include "gcsvr/run_config.hpp"
#include "gcsvr/synthetic.hpp"

namespace gcsvr {

namespace {

namespace fs = std::filesystem;

std::string sanitize_filename(const std::string& id) {
    std::string out = id;
    for (char& c : out) {
        if (c == '/' || c == '\\' || c == ':' || c == ' ') c = '_';
    }
    return out;
}

StationNetwork graph_from_config(const std::vector<Station>& stations, const RunConfig& cfg) {
    double sigma_sq = cfg.sigma_tilde_sq;
    if (!(sigma_sq > 0.0)) {
        const double mean_d = mean_pairwise_distance_km(stations);
        sigma_sq = mean_d * mean_d;
        log::info("auto kernel bandwidth: sigma_tilde_sq = " + std::to_string(sigma_sq));
    }
    return build_adjacency(stations, sigma_sq, cfg.eps_sparsity);
}

void write_model_manifest(const RunConfig& cfg, const std::vector<std::string>& station_ids,
                          const fs::path& path) {
    nlohmann::json j;
    j["station_ids"] = station_ids;
    j["zero_embeddings"] = cfg.zero_embeddings;
    j["config"] = config_echo(cfg);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

GcsvrModel load_model_dir(const fs::path& dir, bool* zero_embeddings_out) {
    GcsvrModel model;
    model.network = read_graph_json(dir / "graph.json");
    model.gcn = read_gcn_model(dir / "gcn.model");
    std::ifstream mf(dir / "model.json");
    if (!mf) throw std::invalid_argument("cannot open " + (dir / "model.json").string());
    nlohmann::json j;
    mf >> j;
    model.options.zero_embeddings = j.at("zero_embeddings").get<bool>();
    if (zero_embeddings_out != nullptr) *zero_embeddings_out = model.options.zero_embeddings;
    for (const auto& s : model.network.stations()) {
        model.svrs.push_back(read_svr_model(dir / ("svr_" + sanitize_filename(s.id) + ".model")));
    }
    return model;
}

PanelSeries load_panel_for(const StationNetwork& network, const fs::path& path) {
    std::vector<std::string> ids;
    for (const auto& s : network.stations()) ids.push_back(s.id);
    return load_panel(path, &ids);
}

PanelSeries truncate_after(const PanelSeries& panel, std::optional<CivilDate> last_day) {
    if (!last_day) return panel;
    const DayNumber d = to_day_number(*last_day);
    return panel.slice(0, panel.index_of_day(d) + 1);
}

// Drop schedule windows the panel cannot cover; partial panels evaluate a
// partial test year.
RollingSchedule clip_schedule(RollingSchedule schedule, const PanelSeries& panel) {
    std::vector<ScheduleWindow> kept;
    for (const auto& w : schedule.windows) {
        if (w.test_end <= panel.last_day() && w.test_start >= panel.start_day()) {
            kept.push_back(w);
        }
    }
    if (kept.empty()) {
        throw std::invalid_argument("schedule: the panel covers no complete test window");
    }
    if (kept.size() != schedule.windows.size()) {
        log::info("schedule clipped to " + std::to_string(kept.size()) + " window(s)");
    }
    schedule.windows = std::move(kept);
    return schedule;
}

std::vector<double> fallback_sigma(const Matrix& train) {
    std::vector<double> sigma(train.cols());
    for (std::size_t i = 0; i < train.cols(); ++i) {
        double mu = 0.0;
        std::size_t m = 0;
        std::vector<double> diffs;
        for (std::size_t t = 1; t < train.rows(); ++t) {
            diffs.push_back(train(t, i) - train(t - 1, i));
            mu += diffs.back();
            ++m;
        }
        mu /= static_cast<double>(std::max<std::size_t>(m, 1));
        double var = 0.0;
        for (double d : diffs) var += (d - mu) * (d - mu);
        var /= static_cast<double>(std::max<std::size_t>(m, 1));
        sigma[i] = std::max(std::sqrt(var), 1e-6);
    }
    return sigma;
}

struct CommonFlags {
    std::string config_file;
    std::vector<std::string> sets;
    std::string out;
    std::string stations;
    std::string panel;
    std::uint64_t seed = 0;
    std::size_t jobs = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "flat key=value config file");
        cmd->add_option("--set", sets, "override a config key, e.g. --set gcn.epochs=50");
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--stations", stations, "stations.csv path");
        cmd->add_option("--panel", panel, "panel.csv path");
        cmd->add_option("--seed", seed, "run seed");
        cmd->add_option("--jobs", jobs, "max parallel tasks");
    }

    RunConfig resolve(const CLI::App* cmd) const {
        RunConfig cfg;
        if (!config_file.empty()) cfg = load_run_config(config_file);
        for (const auto& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) {
                throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
            }
            apply_config_kv(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (cmd->count("--out") > 0) cfg.out_dir = out;
        if (cmd->count("--stations") > 0) cfg.stations_path = stations;
        if (cmd->count("--panel") > 0) cfg.panel_path = panel;
        if (cmd->count("--seed") > 0) apply_config_kv(cfg, "seed", std::to_string(seed));
        if (cmd->count("--jobs") > 0) cfg.jobs = jobs;
        for (const fs::path* p : {&cfg.stations_path, &cfg.panel_path}) {
            if (!p->empty() && !fs::exists(*p)) {
                throw std::invalid_argument("config: file not found: " + p->string());
            }
        }
        fs::create_directories(cfg.out_dir);
        return cfg;
    }
};

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"GCSVR spatiotemporal forecasting toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic station network and panel");
    CommonFlags synth_flags;
    synth_flags.attach(synth);
    std::size_t nodes = 10, days = 500;
    std::string topology = "ring", start_date = "2019-01-01";
    double ar = 0.5, coupling = 0.3, noise = 1.0, base = 60.0;
    synth->add_option("--nodes", nodes, "station count");
    synth->add_option("--days", days, "panel length");
    synth->add_option("--topology", topology, "ring | grid | two-cluster");
    synth->add_option("--ar", ar, "AR(1) coefficient");
    synth->add_option("--coupling", coupling, "spatial coupling strength");
    synth->add_option("--noise", noise, "innovation sigma");
    synth->add_option("--base", base, "mean level");
    synth->add_option("--start", start_date, "first panel date (ISO)");

    // build-graph
    auto* graph_cmd = app.add_subcommand("build-graph", "build the station graph, write graph.json");
    CommonFlags graph_flags;
    graph_flags.attach(graph_cmd);

    // train
    auto* train_cmd = app.add_subcommand("train", "fit the GCN and per-station SVRs");
    CommonFlags train_flags;
    train_flags.attach(train_cmd);
    std::string train_end;
    train_cmd->add_option("--train-end", train_end, "last training day (ISO); default panel end");

    // forecast
    auto* fc_cmd = app.add_subcommand("forecast", "recursive multi-step forecast");
    CommonFlags fc_flags;
    fc_flags.attach(fc_cmd);
    std::string model_dir, origin;
    int fc_horizon = 0;
    fc_cmd->add_option("--model-dir", model_dir, "directory with trained model files");
    fc_cmd->add_option("--origin", origin, "forecast origin day (ISO); default panel end");
    fc_cmd->add_option("--horizon", fc_horizon, "steps ahead (defaults to config horizon)");

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "six-metric evaluation");
    CommonFlags eval_flags;
    eval_flags.attach(eval_cmd);
    std::string forecasts_path, eval_test_start;
    bool rolling = false;
    int eval_horizon = 0;
    eval_cmd->add_option("--forecasts", forecasts_path, "forecasts.json to score");
    eval_cmd->add_flag("--rolling", rolling, "run the rolling-window backtest instead");
    eval_cmd->add_option("--test-start", eval_test_start, "test year start (ISO), rolling mode");
    eval_cmd->add_option("--horizon", eval_horizon, "rolling horizon label: 30, 60 or 90");

    // mcb
    auto* mcb_cmd = app.add_subcommand("mcb", "multiple-comparison-with-the-best rank test");
    CommonFlags mcb_flags;
    mcb_flags.attach(mcb_cmd);
    std::string scores_path;
    double theta = 0.05;
    mcb_cmd->add_option("--scores", scores_path, "scores.csv (task,model,score)")->required();
    mcb_cmd->add_option("--theta", theta, "significance level (0.05 or 0.01)");

    // conformal
    auto* conf_cmd = app.add_subcommand("conformal", "rolling-calibration prediction intervals");
    CommonFlags conf_flags;
    conf_flags.attach(conf_cmd);
    std::string conf_test_start;
    int conf_horizon = 0;
    conf_cmd->add_option("--test-start", conf_test_start, "test period start (ISO)");
    conf_cmd->add_option("--horizon", conf_horizon, "schedule horizon label: 30, 60 or 90");

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the parse error
        return code == 0 ? 0 : 1;
    }

    if (*synth) {
        const RunConfig cfg = synth_flags.resolve(synth);
        SyntheticSpec spec;
        spec.nodes = nodes;
        spec.days = days;
        spec.topology = topology_from_name(topology);
        spec.ar_coeff = ar;
        spec.coupling = coupling;
        spec.noise_sigma = noise;
        spec.base_level = base;
        spec.seed = cfg.seed;
        spec.start_date = parse_iso_date(start_date);
        const SyntheticData data = generate_synthetic(spec);
        write_stations_csv(data.stations, cfg.out_dir / "stations.csv");
        write_panel_csv(data.panel, cfg.out_dir / "panel.csv");
        nlohmann::json truth;
        truth["topology"] = topology_name(spec.topology);
        truth["ar_coeff"] = spec.ar_coeff;
        truth["coupling"] = spec.coupling;
        truth["noise_sigma"] = spec.noise_sigma;
        truth["base_level"] = spec.base_level;
        truth["seed"] = spec.seed;
        truth["generator_adjacency"] = data.generator_adjacency.values();
        truth["suggested_sigma_tilde_sq"] = data.suggested_sigma_sq;
        truth["suggested_eps_sparsity"] = data.suggested_eps;
        std::ofstream tf(cfg.out_dir / "truth.json");
        tf << truth.dump(2) << '\n';
        std::cout << "synth: wrote " << (cfg.out_dir / "panel.csv").string() << " ("
                  << data.panel.days() << " days x " << data.panel.stations() << " stations)\n";
        return 0;
    }

    if (*graph_cmd) {
        const RunConfig cfg = graph_flags.resolve(graph_cmd);
        const auto stations = read_stations_csv(cfg.stations_path);
        const StationNetwork net = graph_from_config(stations, cfg);
        write_graph_json(net, cfg.out_dir / "graph.json");
        std::cout << "build-graph: N=" << net.size() << " zeta_max=" << net.zeta_max() << "\n";
        return 0;
    }

    if (*train_cmd) {
        RunConfig cfg = train_flags.resolve(train_cmd);
        const auto stations = read_stations_csv(cfg.stations_path);
        const StationNetwork net = graph_from_config(stations, cfg);
        PanelSeries panel = impute(load_panel_for(net, cfg.panel_path));
        std::optional<CivilDate> end;
        if (!train_end.empty()) end = parse_iso_date(train_end);
        panel = truncate_after(panel, end);

        GcsvrOptions options;
        options.zero_embeddings = cfg.zero_embeddings;
        options.jobs = std::max<std::size_t>(cfg.jobs, 1);
        const GcsvrModel model = gcsvr_fit(panel, net, cfg.gcn, cfg.svr, options);

        write_graph_json(net, cfg.out_dir / "graph.json");
        write_gcn_model(model.gcn, cfg.out_dir / "gcn.model");
        for (std::size_t i = 0; i < model.svrs.size(); ++i) {
            write_svr_model(model.svrs[i], cfg.out_dir / ("svr_" +
                                sanitize_filename(net.stations()[i].id) + ".model"));
        }
        write_model_manifest(cfg, panel.station_ids(), cfg.out_dir / "model.json");
        std::cout << "train: fitted " << model.svrs.size() << " station models on "
                  << panel.days() << " days\n";
        return 0;
    }

    if (*fc_cmd) {
        RunConfig cfg = fc_flags.resolve(fc_cmd);
        const fs::path dir = model_dir.empty() ? cfg.out_dir : fs::path(model_dir);
        GcsvrModel model = load_model_dir(dir, nullptr);
        PanelSeries panel = impute(load_panel_for(model.network, cfg.panel_path));
        std::optional<CivilDate> org;
        if (!origin.empty()) org = parse_iso_date(origin);
        panel = truncate_after(panel, org);
        const std::size_t q = fc_horizon > 0 ? static_cast<std::size_t>(fc_horizon)
                                             : static_cast<std::size_t>(cfg.horizon);
        ForecastBundle bundle = forecast_recursive(model, panel, q);
        bundle.residual_sigma = residual_sigmas(model, panel, cfg.conformal.upsilon);
        write_forecast_json(bundle, panel.station_ids(), config_echo(cfg),
                            cfg.out_dir / "forecasts.json");
        std::cout << "forecast: origin " << format_iso_date(bundle.origin) << ", horizon " << q
                  << "\n";
        return 0;
    }

    if (*eval_cmd) {
        RunConfig cfg = eval_flags.resolve(eval_cmd);
        if (eval_horizon > 0) apply_config_kv(cfg, "horizon", std::to_string(eval_horizon));
        if (rolling) {
            if (!eval_test_start.empty()) cfg.test_start = parse_iso_date(eval_test_start);
            if (!cfg.test_start) {
                throw std::invalid_argument("evaluate --rolling needs --test-start");
            }
            const auto stations = read_stations_csv(cfg.stations_path);
            const StationNetwork net = graph_from_config(stations, cfg);
            const PanelSeries panel = impute(load_panel_for(net, cfg.panel_path));
            const RollingSchedule schedule =
                clip_schedule(make_schedule(*cfg.test_start, cfg.horizon), panel);
            GcsvrOptions options;
            options.zero_embeddings = cfg.zero_embeddings;
            options.jobs = std::max<std::size_t>(cfg.jobs, 1);
            GcnConfig gcn_cfg = cfg.gcn;
            gcn_cfg.seed = cfg.seed;
            const auto results = run_backtest(panel, net, schedule, gcn_cfg, cfg.svr, options,
                                              cfg.refit_per_window);
            std::vector<std::pair<std::string, MetricReport>> reports;
            std::vector<std::pair<std::string, std::vector<double>>> plot_series;
            for (const auto& res : results) {
                const std::size_t t0 = panel.index_of_day(res.window.test_start);
                const std::size_t t1 = panel.index_of_day(res.window.test_end) + 1;
                const std::size_t q = t1 - t0;
                Matrix actual(q, panel.stations());
                for (std::size_t h = 0; h < q; ++h)
                    for (std::size_t i = 0; i < panel.stations(); ++i)
                        actual(h, i) = panel.value(t0 + h, i);
                const Matrix train =
                    panel.slice(0, panel.index_of_day(res.window.train_end) + 1).values();
                const MetricReport rep = evaluate_point_forecasts(
                    actual, res.forecast.points, train, res.forecast.residual_sigma,
                    panel.station_ids());
                reports.emplace_back(format_iso_date(res.window.test_start), rep);
                plot_series.emplace_back("mae_" + format_iso_date(res.window.test_start), rep.mae);
            }
            write_metrics_json(reports, config_echo(cfg), cfg.out_dir / "metrics.json");
            write_plotdata_csv(plot_series, cfg.out_dir / "plotdata_metrics.csv");
            std::cout << "evaluate: " << results.size() << " rolling windows -> metrics.json\n";
            return 0;
        }
        if (forecasts_path.empty()) {
            throw std::invalid_argument("evaluate needs --forecasts (or --rolling)");
        }
        std::vector<std::string> ids;
        const ForecastBundle bundle = read_forecast_json(forecasts_path, &ids);
        const PanelSeries panel = load_panel(cfg.panel_path, &ids);
        const std::size_t t_origin = panel.index_of_day(bundle.origin);
        if (t_origin + bundle.horizon >= panel.days()) {
            throw std::invalid_argument("evaluate: panel does not cover the forecast horizon");
        }
        Matrix actual(bundle.horizon, ids.size());
        for (std::size_t h = 0; h < bundle.horizon; ++h) {
            for (std::size_t i = 0; i < ids.size(); ++i) {
                if (panel.missing(t_origin + 1 + h, i)) {
                    throw std::invalid_argument("evaluate: actual missing for station '" + ids[i] +
                                                "' at " +
                                                format_iso_date(panel.day(t_origin + 1 + h)));
                }
                actual(h, i) = panel.value(t_origin + 1 + h, i);
            }
        }
        const Matrix train = impute(panel.slice(0, t_origin + 1)).values();
        std::vector<double> sigma = bundle.residual_sigma;
        if (sigma.empty()) {
            log::warn("forecasts.json has no residual_sigma; using train-diff fallback");
            sigma = fallback_sigma(train);
        }
        const MetricReport rep = evaluate_point_forecasts(actual, bundle.points, train, sigma, ids);
        write_metrics_json({{format_iso_date(bundle.origin), rep}}, config_echo(cfg),
                           cfg.out_dir / "metrics.json");
        std::vector<std::pair<std::string, std::vector<double>>> plot_series = {
            {"mae", rep.mae},   {"mase", rep.mase},     {"rmse", rep.rmse},
            {"smape", rep.smape}, {"pinball", rep.pinball}, {"crps", rep.crps}};
        write_plotdata_csv(plot_series, cfg.out_dir / "plotdata_metrics.csv");
        std::cout << "evaluate: avg MAE " << rep.avg_mae << ", avg RMSE " << rep.avg_rmse << "\n";
        return 0;
    }

    if (*mcb_cmd) {
        const RunConfig cfg = mcb_flags.resolve(mcb_cmd);
        const ScoreTable table = load_scores_csv(scores_path);
        const McbResult res = mcb_test(table.scores, table.models, theta);
        write_mcb_csv(res, cfg.out_dir / "mcb.csv");
        std::vector<std::pair<std::string, std::vector<double>>> plot_series;
        for (std::size_t m = 0; m < table.models.size(); ++m) {
            std::vector<double> col(table.tasks.size());
            for (std::size_t t = 0; t < table.tasks.size(); ++t) col[t] = table.scores(t, m);
            plot_series.emplace_back(table.models[m], std::move(col));
        }
        write_plotdata_csv(plot_series, cfg.out_dir / "plotdata_scores.csv");
        std::cout << "mcb: best " << res.model_names[res.best_index] << " (mean rank "
                  << res.mean_ranks[res.best_index] << ", CD " << res.critical_distance << ")\n";
        return 0;
    }

    if (*conf_cmd) {
        RunConfig cfg = conf_flags.resolve(conf_cmd);
        if (conf_horizon > 0) apply_config_kv(cfg, "horizon", std::to_string(conf_horizon));
        if (!conf_test_start.empty()) cfg.test_start = parse_iso_date(conf_test_start);
        if (!cfg.test_start) throw std::invalid_argument("conformal needs --test-start");
        const auto stations = read_stations_csv(cfg.stations_path);
        const StationNetwork net = graph_from_config(stations, cfg);
        const PanelSeries panel = impute(load_panel_for(net, cfg.panel_path));
        const RollingSchedule schedule =
            clip_schedule(make_schedule(*cfg.test_start, cfg.horizon), panel);

        // Train strictly before the calibration window so the seed scores are
        // out-of-sample too.
        const DayNumber fit_end =
            schedule.windows.front().test_start - static_cast<DayNumber>(cfg.conformal.upsilon) - 1;
        const PanelSeries train = panel.slice(0, panel.index_of_day(fit_end) + 1);
        GcsvrOptions options;
        options.zero_embeddings = cfg.zero_embeddings;
        options.jobs = std::max<std::size_t>(cfg.jobs, 1);
        GcnConfig gcn_cfg = cfg.gcn;
        gcn_cfg.seed = cfg.seed;
        const GcsvrModel model = gcsvr_fit(train, net, gcn_cfg, cfg.svr, options);
        const ConformalReport report = run_conformal(model, panel, schedule, cfg.conformal);
        write_intervals_csv(report, panel.station_ids(), cfg.out_dir / "intervals.csv");
        write_coverage_json(report, panel.station_ids(), config_echo(cfg),
                            cfg.out_dir / "coverage.json");
        std::cout << "conformal: pooled coverage " << report.pooled_coverage << " over "
                  << report.records.size() << " intervals\n";
        return 0;
    }

    return 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    try {
        return dispatch(args);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
}

}  // namespace gcsvr
