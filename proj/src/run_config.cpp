#include "gcsvr/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gcsvr {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double to_double(std::string_view v, std::string_view key) {
    try {
        return std::stod(std::string(v));
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad numeric value for '" + std::string(key) + "'");
    }
}

std::uint64_t to_u64(std::string_view v, std::string_view key) {
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw std::invalid_argument("config: bad integer value for '" + std::string(key) + "'");
    }
    return out;
}

bool to_bool(std::string_view v, std::string_view key) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw std::invalid_argument("config: bad boolean value for '" + std::string(key) + "'");
}

}  // namespace

void apply_config_kv(RunConfig& cfg, std::string_view key, std::string_view value) {
    const std::string k(trim(key));
    const std::string v(trim(value));
    if (k == "stations") cfg.stations_path = v;
    else if (k == "panel") cfg.panel_path = v;
    else if (k == "out") cfg.out_dir = v;
    else if (k == "sigma_tilde_sq") cfg.sigma_tilde_sq = to_double(v, k);
    else if (k == "eps_sparsity") cfg.eps_sparsity = to_double(v, k);
    else if (k == "gcn.input_window") cfg.gcn.input_window = to_u64(v, k);
    else if (k == "gcn.hidden_dim") cfg.gcn.hidden_dim = to_u64(v, k);
    else if (k == "gcn.embed_dim") cfg.gcn.embed_dim = to_u64(v, k);
    else if (k == "gcn.dropout") cfg.gcn.dropout_rate = to_double(v, k);
    else if (k == "gcn.epochs") cfg.gcn.epochs = to_u64(v, k);
    else if (k == "gcn.lr") cfg.gcn.lr = to_double(v, k);
    else if (k == "gcn.weight_decay") cfg.gcn.weight_decay = to_double(v, k);
    else if (k == "gcn.weighted_mean") cfg.gcn.weighted_mean = to_bool(v, k);
    else if (k == "svr.C") cfg.svr.C = to_double(v, k);
    else if (k == "svr.epsilon") cfg.svr.epsilon = to_double(v, k);
    else if (k == "svr.kernel") {
        if (v == "rbf") cfg.svr.kernel = KernelKind::rbf;
        else if (v == "linear") cfg.svr.kernel = KernelKind::linear;
        else throw std::invalid_argument("config: svr.kernel must be rbf or linear");
    } else if (k == "svr.gamma") {
        if (v == "scale") {
            cfg.svr.gamma_scale = true;
        } else {
            cfg.svr.gamma_scale = false;
            cfg.svr.gamma_fixed = to_double(v, k);
        }
    } else if (k == "svr.tol") cfg.svr.tol = to_double(v, k);
    else if (k == "svr.max_passes") cfg.svr.max_passes = to_u64(v, k);
    else if (k == "horizon") {
        cfg.horizon = static_cast<int>(to_u64(v, k));
        if (cfg.horizon != 30 && cfg.horizon != 60 && cfg.horizon != 90) {
            throw std::invalid_argument("config: horizon must be 30, 60 or 90");
        }
    } else if (k == "conformal.rho") cfg.conformal.rho = to_double(v, k);
    else if (k == "conformal.upsilon") cfg.conformal.upsilon = to_u64(v, k);
    else if (k == "conformal.scaler") {
        if (v == "constant") cfg.conformal.scaler = ConformalConfig::Scaler::constant;
        else if (v == "rolling-mae") cfg.conformal.scaler = ConformalConfig::Scaler::rolling_mae;
        else throw std::invalid_argument("config: conformal.scaler must be constant or rolling-mae");
    } else if (k == "conformal.finite_sample") cfg.conformal.finite_sample = to_bool(v, k);
    else if (k == "seed") {
        cfg.seed = to_u64(v, k);
        cfg.gcn.seed = cfg.seed;
    } else if (k == "jobs") cfg.jobs = to_u64(v, k);
    else if (k == "test_start") cfg.test_start = parse_iso_date(v);
    else if (k == "zero_embeddings") cfg.zero_embeddings = to_bool(v, k);
    else if (k == "refit_per_window") cfg.refit_per_window = to_bool(v, k);
    else throw std::invalid_argument("config: unknown key '" + k + "'");
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config " + path.string());
    RunConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        const auto eq = sv.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                        ": expected key = value");
        }
        apply_config_kv(cfg, sv.substr(0, eq), sv.substr(eq + 1));
    }
    return cfg;
}

std::map<std::string, std::string> config_echo(const RunConfig& cfg) {
    std::map<std::string, std::string> m;
    auto num = [](double v) {
        std::ostringstream ss;
        ss.precision(17);
        ss << v;
        return ss.str();
    };
    m["stations"] = cfg.stations_path.string();
    m["panel"] = cfg.panel_path.string();
    m["out"] = cfg.out_dir.string();
    m["sigma_tilde_sq"] = num(cfg.sigma_tilde_sq);
    m["eps_sparsity"] = num(cfg.eps_sparsity);
    m["gcn.input_window"] = std::to_string(cfg.gcn.input_window);
    m["gcn.hidden_dim"] = std::to_string(cfg.gcn.hidden_dim);
    m["gcn.embed_dim"] = std::to_string(cfg.gcn.embed_dim);
    m["gcn.dropout"] = num(cfg.gcn.dropout_rate);
    m["gcn.epochs"] = std::to_string(cfg.gcn.epochs);
    m["gcn.lr"] = num(cfg.gcn.lr);
    m["gcn.weight_decay"] = num(cfg.gcn.weight_decay);
    m["gcn.weighted_mean"] = cfg.gcn.weighted_mean ? "true" : "false";
    m["svr.C"] = num(cfg.svr.C);
    m["svr.epsilon"] = num(cfg.svr.epsilon);
    m["svr.kernel"] = cfg.svr.kernel == KernelKind::rbf ? "rbf" : "linear";
    m["svr.gamma"] = cfg.svr.gamma_scale ? "scale" : num(cfg.svr.gamma_fixed);
    m["svr.tol"] = num(cfg.svr.tol);
    m["svr.max_passes"] = std::to_string(cfg.svr.max_passes);
    m["horizon"] = std::to_string(cfg.horizon);
    m["conformal.rho"] = num(cfg.conformal.rho);
    m["conformal.upsilon"] = std::to_string(cfg.conformal.upsilon);
    m["conformal.scaler"] =
        cfg.conformal.scaler == ConformalConfig::Scaler::constant ? "constant" : "rolling-mae";
    m["conformal.finite_sample"] = cfg.conformal.finite_sample ? "true" : "false";
    m["seed"] = std::to_string(cfg.seed);
    // jobs is an execution detail: outputs are identical at any degree, so it
    // stays out of the provenance echo
    if (cfg.test_start) m["test_start"] = format_iso_date(to_day_number(*cfg.test_start));
    m["zero_embeddings"] = cfg.zero_embeddings ? "true" : "false";
    m["refit_per_window"] = cfg.refit_per_window ? "true" : "false";
    return m;
}

}  // namespace gcsvr
