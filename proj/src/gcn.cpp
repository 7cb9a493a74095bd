#include "gcsvr/gcn.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "gcsvr/errors.hpp"
#include "gcsvr/optim.hpp"

namespace gcsvr {

std::vector<double> first_order_filter(std::span<const double> x, const StationNetwork& network,
                                       double w0, double w1) {
    const std::size_t n = network.size();
    if (x.size() != n) throw std::invalid_argument("first_order_filter: signal length != N");
    if (!(network.zeta_max() > 0.0)) {
        throw DegenerateGraphError("first_order_filter: zeta_max is 0 (edgeless graph)");
    }
    const Matrix& lap = network.laplacian();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double lx = 0.0;
        for (std::size_t j = 0; j < n; ++j) lx += lap(i, j) * x[j];
        out[i] = w0 * x[i] + w1 * (2.0 * lx / network.zeta_max() - x[i]);
    }
    return out;
}

namespace {

// Neighbor aggregation operator: row i averages the members of N(i); the
// weighted variant normalizes adjacency rows instead. Isolated nodes get an
// all-zero row (empty mean convention).
Matrix aggregation_operator(const StationNetwork& network, bool weighted) {
    const std::size_t n = network.size();
    Matrix p(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& nb = network.neighbors(i);
        if (nb.empty()) continue;
        if (weighted) {
            double wsum = 0.0;
            for (std::size_t j : nb) wsum += network.adjacency()(i, j);
            for (std::size_t j : nb) p(i, j) = network.adjacency()(i, j) / wsum;
        } else {
            const double w = 1.0 / static_cast<double>(nb.size());
            for (std::size_t j : nb) p(i, j) = w;
        }
    }
    return p;
}

struct ForwardTrace {
    Matrix x;   // scaled input, N x p
    Matrix m0;  // P x
    Matrix a1;  // pre-activation, N x h
    Matrix d1;  // post relu (+ dropout), N x h
    Matrix m1;  // P d1
    Matrix z;   // N x r
    std::vector<double> pred;
};

ForwardTrace forward_core(const GcnModel& model, const Matrix& x_scaled, const Matrix& agg,
                          const Matrix* mask) {
    ForwardTrace tr;
    tr.x = x_scaled;
    tr.m0 = matmul(agg, tr.x);
    Matrix a1 = matmul(tr.m0, model.w1);
    const Matrix self1 = matmul(tr.x, model.b1);
    for (std::size_t k = 0; k < a1.size(); ++k) a1.values()[k] += self1.values()[k];
    tr.a1 = a1;
    tr.d1 = std::move(a1);
    for (double& v : tr.d1.values()) v = v > 0.0 ? v : 0.0;
    if (mask != nullptr) {
        for (std::size_t k = 0; k < tr.d1.size(); ++k) tr.d1.values()[k] *= mask->values()[k];
    }
    tr.m1 = matmul(agg, tr.d1);
    Matrix a2 = matmul(tr.m1, model.w2);
    const Matrix self2 = matmul(tr.d1, model.b2);
    for (std::size_t k = 0; k < a2.size(); ++k) a2.values()[k] += self2.values()[k];
    tr.z = std::move(a2);
    tr.pred.resize(tr.z.rows());
    for (std::size_t i = 0; i < tr.z.rows(); ++i) {
        double s = model.head_bias;
        for (std::size_t k = 0; k < tr.z.cols(); ++k) s += tr.z(i, k) * model.head(k, 0);
        tr.pred[i] = s;
    }
    return tr;
}

void check_window_shape(const GcnModel& model, const Matrix& windows,
                        const StationNetwork& network) {
    if (windows.rows() != network.size() || windows.cols() != model.config.input_window) {
        throw std::invalid_argument("gcn: window matrix must be N x p");
    }
    if (model.w1.rows() != model.config.input_window || model.w1.cols() != model.config.hidden_dim ||
        model.w2.rows() != model.config.hidden_dim || model.w2.cols() != model.config.embed_dim ||
        !model.b1.same_shape(model.w1) || !model.b2.same_shape(model.w2) ||
        model.head.rows() != model.config.embed_dim || model.head.cols() != 1) {
        throw std::invalid_argument("gcn: parameter shapes inconsistent with config");
    }
}

Matrix draw_dropout_mask(std::size_t rows, std::size_t cols, double rate, SeededRng& rng) {
    Matrix mask(rows, cols);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (double& v : mask.values()) v = (rng.next_double() >= rate) ? keep_scale : 0.0;
    return mask;
}

}  // namespace

Matrix gcn_scale_windows(const GcnModel& model, const Matrix& windows) {
    if (model.station_mean.empty()) return windows;
    if (model.station_mean.size() != windows.rows()) {
        throw std::invalid_argument("gcn_scale_windows: scaler/station count mismatch");
    }
    Matrix out = windows;
    for (std::size_t i = 0; i < out.rows(); ++i) {
        const double mu = model.station_mean[i];
        const double sd = model.station_std[i];
        for (std::size_t c = 0; c < out.cols(); ++c) out(i, c) = (out(i, c) - mu) / sd;
    }
    return out;
}

GcnForwardResult gcn_forward(const GcnModel& model, const Matrix& windows,
                             const StationNetwork& network, bool training, SeededRng* rng) {
    check_window_shape(model, windows, network);
    const Matrix agg = aggregation_operator(network, model.config.weighted_mean);
    const Matrix x = gcn_scale_windows(model, windows);
    Matrix mask;
    const Matrix* mask_ptr = nullptr;
    if (training && model.config.dropout_rate > 0.0) {
        if (rng == nullptr) throw std::invalid_argument("gcn_forward: training needs an rng");
        mask = draw_dropout_mask(network.size(), model.config.hidden_dim,
                                 model.config.dropout_rate, *rng);
        mask_ptr = &mask;
    }
    ForwardTrace tr = forward_core(model, x, agg, mask_ptr);
    return {std::move(tr.z), std::move(tr.pred)};
}

EmbeddingSet gcn_embed(const GcnModel& model, const Matrix& windows,
                       const StationNetwork& network) {
    GcnForwardResult r = gcn_forward(model, windows, network, false, nullptr);
    return {std::move(r.embeddings), -1};
}

double gcn_loss_and_gradients(const GcnModel& model, const std::vector<Matrix>& windows,
                              const Matrix& targets, const StationNetwork& network,
                              const std::vector<Matrix>* dropout_masks, GcnGradients* grads) {
    const std::size_t s_count = windows.size();
    const std::size_t n = network.size();
    if (s_count == 0) throw std::invalid_argument("gcn_loss_and_gradients: no samples");
    if (targets.rows() != s_count || targets.cols() != n) {
        throw std::invalid_argument("gcn_loss_and_gradients: target shape mismatch");
    }
    if (dropout_masks != nullptr && dropout_masks->size() != s_count) {
        throw std::invalid_argument("gcn_loss_and_gradients: mask count mismatch");
    }

    const Matrix agg = aggregation_operator(network, model.config.weighted_mean);
    const Matrix agg_t = transpose(agg);
    const std::size_t h = model.config.hidden_dim;
    const std::size_t r = model.config.embed_dim;
    const std::size_t p = model.config.input_window;

    GcnGradients acc;
    if (grads != nullptr) {
        acc.w1 = Matrix(p, h);
        acc.b1 = Matrix(p, h);
        acc.w2 = Matrix(h, r);
        acc.b2 = Matrix(h, r);
        acc.head = Matrix(r, 1);
        acc.head_bias = 0.0;
    }

    const double denom = static_cast<double>(s_count * n);
    double loss = 0.0;
    for (std::size_t s = 0; s < s_count; ++s) {
        check_window_shape(model, windows[s], network);
        const Matrix x = gcn_scale_windows(model, windows[s]);
        const Matrix* mask = dropout_masks != nullptr ? &(*dropout_masks)[s] : nullptr;
        const ForwardTrace tr = forward_core(model, x, agg, mask);

        std::vector<double> dpred(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double err = tr.pred[i] - targets(s, i);
            loss += err * err / denom;
            dpred[i] = 2.0 * err / denom;
        }
        if (grads == nullptr) continue;

        Matrix dz(n, r);
        for (std::size_t i = 0; i < n; ++i) {
            acc.head_bias += dpred[i];
            for (std::size_t k = 0; k < r; ++k) {
                acc.head(k, 0) += tr.z(i, k) * dpred[i];
                dz(i, k) = dpred[i] * model.head(k, 0);
            }
        }

        const Matrix dw2 = matmul(transpose(tr.m1), dz);
        const Matrix db2 = matmul(transpose(tr.d1), dz);
        Matrix dd1 = matmul(matmul(agg_t, dz), transpose(model.w2));
        const Matrix dd1_self = matmul(dz, transpose(model.b2));
        for (std::size_t k = 0; k < dd1.size(); ++k) dd1.values()[k] += dd1_self.values()[k];

        if (mask != nullptr) {
            for (std::size_t k = 0; k < dd1.size(); ++k) dd1.values()[k] *= mask->values()[k];
        }
        for (std::size_t k = 0; k < dd1.size(); ++k) {
            if (!(tr.a1.values()[k] > 0.0)) dd1.values()[k] = 0.0;
        }

        const Matrix dw1 = matmul(transpose(tr.m0), dd1);
        const Matrix db1 = matmul(transpose(tr.x), dd1);
        for (std::size_t k = 0; k < acc.w1.size(); ++k) {
            acc.w1.values()[k] += dw1.values()[k];
            acc.b1.values()[k] += db1.values()[k];
        }
        for (std::size_t k = 0; k < acc.w2.size(); ++k) {
            acc.w2.values()[k] += dw2.values()[k];
            acc.b2.values()[k] += db2.values()[k];
        }
    }
    if (grads != nullptr) *grads = std::move(acc);
    return loss;
}

GcnModel gcn_train(const PanelSeries& panel, const StationNetwork& network,
                   const GcnConfig& config) {
    const std::size_t p = config.input_window;
    const std::size_t n = network.size();
    const std::size_t t_len = panel.days();
    if (panel.stations() != n) throw std::invalid_argument("gcn_train: panel/network mismatch");
    if (t_len < p + 1) {
        throw std::invalid_argument("gcn_train: need at least input_window + 1 days of history");
    }
    if (!panel.values().all_finite()) {
        throw std::invalid_argument("gcn_train: panel has unfilled gaps; impute first");
    }
    if (!(config.dropout_rate >= 0.0 && config.dropout_rate < 1.0) || p < 1 ||
        config.hidden_dim < 1 || config.embed_dim < 1) {
        throw std::invalid_argument("gcn_train: invalid config");
    }

    GcnModel model;
    model.config = config;

    // Per-station scaling: stations differ by an order of magnitude in level.
    model.station_mean.assign(n, 0.0);
    model.station_std.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double mu = 0.0;
        for (std::size_t t = 0; t < t_len; ++t) mu += panel.value(t, i);
        mu /= static_cast<double>(t_len);
        double var = 0.0;
        for (std::size_t t = 0; t < t_len; ++t) {
            const double d = panel.value(t, i) - mu;
            var += d * d;
        }
        var /= static_cast<double>(t_len);
        model.station_mean[i] = mu;
        model.station_std[i] = std::max(std::sqrt(var), 1e-8);
    }

    SeededRng rng(config.seed);
    SeededRng rng_init = rng.split(0);
    SeededRng rng_drop = rng.split(1);

    const std::size_t h = config.hidden_dim, r = config.embed_dim;
    auto glorot = [&rng_init](std::size_t rows, std::size_t cols) {
        Matrix m(rows, cols);
        const double lim = std::sqrt(6.0 / static_cast<double>(rows + cols));
        for (double& v : m.values()) v = rng_init.next_uniform(-lim, lim);
        return m;
    };
    model.w1 = glorot(p, h);
    model.b1 = glorot(p, h);
    model.w2 = glorot(h, r);
    model.b2 = glorot(h, r);
    model.head = glorot(r, 1);
    model.head_bias = 0.0;

    // Pre-scaled sample windows and standardized targets.
    const std::size_t s_count = t_len - p;
    std::vector<Matrix> windows(s_count, Matrix(n, p));
    Matrix targets(s_count, n);
    for (std::size_t s = 0; s < s_count; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < p; ++c) {
                windows[s](i, c) =
                    (panel.value(s + c, i) - model.station_mean[i]) / model.station_std[i];
            }
            targets(s, i) = (panel.value(s + p, i) - model.station_mean[i]) / model.station_std[i];
        }
    }

    // Loss core runs in scaled space; detach the scalers while training on the
    // pre-scaled windows and restore them on the frozen model.
    GcnModel work = model;
    work.station_mean.clear();
    work.station_std.clear();

    AdamConfig adam_cfg{config.lr, 0.9, 0.999, 1e-8, config.weight_decay};
    AdamState st_w1(p, h, adam_cfg), st_b1(p, h, adam_cfg);
    AdamState st_w2(h, r, adam_cfg), st_b2(h, r, adam_cfg);
    AdamState st_head(r, 1, adam_cfg), st_bias(1, 1, adam_cfg);

    std::vector<Matrix> masks;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const std::vector<Matrix>* mask_ptr = nullptr;
        if (config.dropout_rate > 0.0) {
            masks.clear();
            masks.reserve(s_count);
            for (std::size_t s = 0; s < s_count; ++s) {
                masks.push_back(draw_dropout_mask(n, h, config.dropout_rate, rng_drop));
            }
            mask_ptr = &masks;
        }
        GcnGradients g;
        gcn_loss_and_gradients(work, windows, targets, network, mask_ptr, &g);
        work.w1 = adam_step(st_w1, work.w1, g.w1);
        work.b1 = adam_step(st_b1, work.b1, g.b1);
        work.w2 = adam_step(st_w2, work.w2, g.w2);
        work.b2 = adam_step(st_b2, work.b2, g.b2);
        work.head = adam_step(st_head, work.head, g.head);
        Matrix bias_m(1, 1);
        bias_m(0, 0) = work.head_bias;
        Matrix bias_g(1, 1);
        bias_g(0, 0) = g.head_bias;
        work.head_bias = adam_step(st_bias, bias_m, bias_g)(0, 0);
    }

    work.station_mean = model.station_mean;
    work.station_std = model.station_std;
    return work;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.values()}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.values() = j.at("data").get<std::vector<double>>();
    if (m.values().size() != m.rows() * m.cols()) {
        throw std::invalid_argument("gcn model: tensor data length mismatch");
    }
    return m;
}

}  // namespace

void write_gcn_model(const GcnModel& model, const std::filesystem::path& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["config"] = {{"input_window", model.config.input_window},
                   {"hidden_dim", model.config.hidden_dim},
                   {"embed_dim", model.config.embed_dim},
                   {"dropout_rate", model.config.dropout_rate},
                   {"epochs", model.config.epochs},
                   {"lr", model.config.lr},
                   {"weight_decay", model.config.weight_decay},
                   {"seed", model.config.seed},
                   {"weighted_mean", model.config.weighted_mean}};
    j["w1"] = matrix_to_json(model.w1);
    j["b1"] = matrix_to_json(model.b1);
    j["w2"] = matrix_to_json(model.w2);
    j["b2"] = matrix_to_json(model.b2);
    j["head"] = matrix_to_json(model.head);
    j["head_bias"] = model.head_bias;
    j["station_mean"] = model.station_mean;
    j["station_std"] = model.station_std;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

GcnModel read_gcn_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    GcnModel m;
    const auto& c = j.at("config");
    m.config.input_window = c.at("input_window").get<std::size_t>();
    m.config.hidden_dim = c.at("hidden_dim").get<std::size_t>();
    m.config.embed_dim = c.at("embed_dim").get<std::size_t>();
    m.config.dropout_rate = c.at("dropout_rate").get<double>();
    m.config.epochs = c.at("epochs").get<std::size_t>();
    m.config.lr = c.at("lr").get<double>();
    m.config.weight_decay = c.at("weight_decay").get<double>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.config.weighted_mean = c.at("weighted_mean").get<bool>();
    m.w1 = matrix_from_json(j.at("w1"));
    m.b1 = matrix_from_json(j.at("b1"));
    m.w2 = matrix_from_json(j.at("w2"));
    m.b2 = matrix_from_json(j.at("b2"));
    m.head = matrix_from_json(j.at("head"));
    m.head_bias = j.at("head_bias").get<double>();
    m.station_mean = j.at("station_mean").get<std::vector<double>>();
    m.station_std = j.at("station_std").get<std::vector<double>>();
    return m;
}

}  // namespace gcsvr
