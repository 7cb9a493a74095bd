#include "gcsvr/svr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <list>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

#include "gcsvr/logging.hpp"

namespace gcsvr {

double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma) {
    if (u.size() != v.size()) throw std::invalid_argument("rbf_kernel: length mismatch");
    double sq = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double d = u[k] - v[k];
        sq += d * d;
    }
    return std::exp(-gamma * sq);
}

double kernel_eval(const KernelParams& k, std::span<const double> u, std::span<const double> v) {
    if (k.kind == KernelKind::rbf) return rbf_kernel(u, v, k.gamma);
    if (u.size() != v.size()) throw std::invalid_argument("kernel_eval: length mismatch");
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
    return dot;
}

double gamma_scale(const Matrix& inputs) {
    if (inputs.cols() == 0 || inputs.rows() == 0) {
        throw std::invalid_argument("gamma_scale: empty input");
    }
    const auto& v = inputs.values();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());  // population convention
    const double d = static_cast<double>(inputs.cols());
    if (var <= 0.0) {
        log::warn("gamma_scale: zero pooled variance, falling back to 1/n_features");
        return 1.0 / d;
    }
    return 1.0 / (d * var);
}

double epsilon_loss(double y, double yhat, double epsilon) {
    if (epsilon < 0.0) throw std::invalid_argument("epsilon_loss: epsilon must be >= 0");
    return std::max(0.0, std::abs(y - yhat) - epsilon);
}

namespace {

// Full kernel matrix below the size cutoff, LRU row cache above it.
class KernelCache {
public:
    KernelCache(const Matrix& x, const KernelParams& kernel)
        : x_(x), kernel_(kernel), n_(x.rows()) {
        diag_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            diag_[i] = kernel_.kind == KernelKind::rbf
                           ? 1.0
                           : kernel_eval(kernel_, x_.row(i), x_.row(i));
        }
        if (n_ <= kFullCacheLimit) {
            full_.assign(n_ * n_, 0.0);
            row_done_.assign(n_, false);
        } else {
            lru_capacity_ = std::max<std::size_t>(2, (256ull << 20) / (n_ * sizeof(double)));
        }
    }

    const double* row(std::size_t i) {
        if (!full_.empty()) {
            if (!row_done_[i]) {
                fill_row(i, full_.data() + i * n_);
                row_done_[i] = true;
            }
            return full_.data() + i * n_;
        }
        if (auto it = lru_index_.find(i); it != lru_index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return lru_.front().second.data();
        }
        if (lru_.size() >= lru_capacity_) {
            lru_index_.erase(lru_.back().first);
            lru_.pop_back();
        }
        lru_.emplace_front(i, std::vector<double>(n_));
        fill_row(i, lru_.front().second.data());
        lru_index_[i] = lru_.begin();
        return lru_.front().second.data();
    }

    double diag(std::size_t i) const { return diag_[i]; }

private:
    static constexpr std::size_t kFullCacheLimit = 20000;

    void fill_row(std::size_t i, double* out) const {
        const auto xi = x_.row(i);
        for (std::size_t j = 0; j < n_; ++j) out[j] = kernel_eval(kernel_, xi, x_.row(j));
    }

    const Matrix& x_;
    KernelParams kernel_;
    std::size_t n_;
    std::vector<double> diag_;
    std::vector<double> full_;
    std::vector<bool> row_done_;
    std::size_t lru_capacity_ = 0;
    std::list<std::pair<std::size_t, std::vector<double>>> lru_;
    std::unordered_map<std::size_t, std::list<std::pair<std::size_t, std::vector<double>>>::iterator>
        lru_index_;
};

// Directional derivative of the minimization objective along +e_l.
inline double d_plus(double g, double beta, double eps) {
    return g + (beta >= 0.0 ? eps : -eps);
}

// Directional derivative along -e_l.
inline double d_minus(double g, double beta, double eps) {
    return -g + (beta > 0.0 ? -eps : eps);
}

struct BiasInterval {
    double low = -std::numeric_limits<double>::infinity();
    double high = std::numeric_limits<double>::infinity();
};

BiasInterval bias_interval(std::span<const double> g, std::span<const double> beta, double C,
                           double eps) {
    BiasInterval b;
    b.low = -std::numeric_limits<double>::infinity();
    b.high = std::numeric_limits<double>::infinity();
    const double bound = C - 1e-9 * std::max(1.0, C);
    for (std::size_t l = 0; l < beta.size(); ++l) {
        if (beta[l] < bound) b.low = std::max(b.low, -d_plus(g[l], beta[l], eps));
        if (beta[l] > -bound) b.high = std::min(b.high, d_minus(g[l], beta[l], eps));
    }
    return b;
}

double solve_bias(std::span<const double> g, std::span<const double> beta, double C, double eps) {
    const double bound_eps = 1e-9 * std::max(1.0, C);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t l = 0; l < beta.size(); ++l) {
        const double ab = std::abs(beta[l]);
        if (ab > bound_eps && ab < C - bound_eps) {
            sum += -g[l] - eps * (beta[l] > 0.0 ? 1.0 : -1.0);
            ++count;
        }
    }
    if (count > 0) return sum / static_cast<double>(count);
    const BiasInterval bi = bias_interval(g, beta, C, eps);
    if (std::isinf(bi.low) && std::isinf(bi.high)) return 0.0;
    if (std::isinf(bi.low)) return bi.high;
    if (std::isinf(bi.high)) return bi.low;
    return 0.5 * (bi.low + bi.high);
}

KktReport kkt_check_core(std::span<const double> g, std::span<const double> beta, double bias,
                         double C, double eps) {
    KktReport rep;
    const double bound_eps = 1e-9 * std::max(1.0, C);
    for (std::size_t l = 0; l < beta.size(); ++l) {
        const double e = g[l] + bias;  // f(x_l) - y_l, standardized
        const double b = beta[l];
        double viol = 0.0;
        if (std::abs(b) <= bound_eps) {
            viol = std::max(0.0, std::abs(e) - eps);
        } else if (b >= C - bound_eps) {
            viol = std::max(0.0, e + eps);
        } else if (b <= -C + bound_eps) {
            viol = std::max(0.0, eps - e);
        } else if (b > 0.0) {
            viol = std::abs(e + eps);
        } else {
            viol = std::abs(e - eps);
        }
        rep.max_violation = std::max(rep.max_violation, viol);
        rep.beta_sum += b;
        rep.max_abs_beta = std::max(rep.max_abs_beta, std::abs(b));
    }
    return rep;
}

}  // namespace

SmoSolution smo_solve(const Matrix& inputs, std::span<const double> targets,
                      const KernelParams& kernel, double C, double epsilon, double tol,
                      std::size_t max_passes,
                      const std::function<void(double)>& objective_observer) {
    const std::size_t n = inputs.rows();
    if (n < 2) throw std::invalid_argument("smo_solve: need at least 2 samples");
    if (targets.size() != n) throw std::invalid_argument("smo_solve: target count mismatch");
    if (!(C > 0.0)) throw std::invalid_argument("smo_solve: C must be positive");
    if (epsilon < 0.0) throw std::invalid_argument("smo_solve: epsilon must be >= 0");

    KernelCache cache(inputs, kernel);
    std::vector<double> beta(n, 0.0);
    std::vector<double> g(n);  // g_l = (K beta)_l - y_l
    for (std::size_t l = 0; l < n; ++l) {
        if (!std::isfinite(targets[l])) throw std::invalid_argument("smo_solve: non-finite target");
        g[l] = -targets[l];
    }

    const double bound = C - 1e-9 * std::max(1.0, C);
    const std::size_t max_iter = max_passes * std::max<std::size_t>(n, 16);
    double dual = 0.0;  // maximization form, exact at beta = 0
    std::size_t iter = 0;
    std::size_t stalls = 0;
    double violation = 0.0;

    for (; iter < max_iter; ++iter) {
        // Maximal-violating pair; ties broken by lowest index.
        std::size_t i = n, j = n;
        double best_up = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < n; ++l) {
            if (beta[l] < bound) {
                const double d = d_plus(g[l], beta[l], epsilon);
                if (d < best_up) {
                    best_up = d;
                    i = l;
                }
            }
        }
        double best_dn = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < n; ++l) {
            if (l != i && beta[l] > -bound) {
                const double d = d_minus(g[l], beta[l], epsilon);
                if (d < best_dn) {
                    best_dn = d;
                    j = l;
                }
            }
        }
        if (i == n || j == n) {
            violation = 0.0;
            break;
        }
        violation = -(best_up + best_dn);
        if (violation <= tol) break;

        const double* ki = cache.row(i);
        const double* kj = cache.row(j);
        const double eta = cache.diag(i) + cache.diag(j) - 2.0 * ki[j];
        const double t_max = std::min(C - beta[i], beta[j] + C);

        // Exact minimization of the piecewise quadratic along e_i - e_j.
        std::vector<double> breaks;
        if (beta[i] < 0.0 && -beta[i] < t_max) breaks.push_back(-beta[i]);
        if (beta[j] > 0.0 && beta[j] < t_max) breaks.push_back(beta[j]);
        std::sort(breaks.begin(), breaks.end());
        breaks.push_back(t_max);

        const double g_diff = g[i] - g[j];
        double t_star = t_max;
        double seg_start = 0.0;
        for (double seg_end : breaks) {
            const double si = (beta[i] + seg_start >= 0.0) ? 1.0 : -1.0;
            const double sj = (beta[j] - seg_start > 0.0) ? 1.0 : -1.0;
            const double phip = g_diff + seg_start * eta + epsilon * (si - sj);
            if (phip >= 0.0) {
                t_star = seg_start;
                break;
            }
            if (eta > 0.0) {
                const double t0 = seg_start - phip / eta;
                if (t0 <= seg_end) {
                    t_star = t0;
                    break;
                }
            }
            seg_start = seg_end;
        }

        if (!(t_star > 0.0)) {
            if (++stalls >= n) break;  // no movable direction improves: numerically done
            continue;
        }
        stalls = 0;

        // Objective bookkeeping before mutating state.
        const double delta_min = t_star * g_diff + 0.5 * t_star * t_star * eta +
                                 epsilon * (std::abs(beta[i] + t_star) - std::abs(beta[i])) +
                                 epsilon * (std::abs(beta[j] - t_star) - std::abs(beta[j]));
        dual -= delta_min;

        beta[i] += t_star;
        beta[j] -= t_star;
        for (std::size_t m = 0; m < n; ++m) g[m] += t_star * (ki[m] - kj[m]);

        if (objective_observer) objective_observer(dual);
    }

    if (violation > tol) {
        throw std::runtime_error("smo_solve: no convergence after " + std::to_string(iter) +
                                 " iterations (violation " + std::to_string(violation) + ")");
    }

    SmoSolution sol;
    sol.beta = std::move(beta);
    sol.gradient = std::move(g);
    sol.bias = solve_bias(sol.gradient, sol.beta, C, epsilon);
    sol.iterations = iter;
    sol.kkt_violation =
        kkt_check_core(sol.gradient, sol.beta, sol.bias, C, epsilon).max_violation;
    // Exact objective from the final gradient: with K b = g + y,
    // -1/2 b'Kb - eps|b|_1 + y'b = -1/2 b'g + 1/2 y'b - eps|b|_1.
    double obj = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        obj += -0.5 * sol.beta[l] * sol.gradient[l] + 0.5 * targets[l] * sol.beta[l] -
               epsilon * std::abs(sol.beta[l]);
    }
    sol.dual_objective = obj;
    return sol;
}

SvrModel train_svr(const Matrix& inputs, std::span<const double> targets, const SvrConfig& config,
                   SmoSolution* info) {
    const std::size_t n = inputs.rows();
    if (n < 2) throw std::invalid_argument("train_svr: need at least 2 samples");
    if (targets.size() != n) throw std::invalid_argument("train_svr: target count mismatch");
    for (double y : targets) {
        if (!std::isfinite(y)) throw std::invalid_argument("train_svr: non-finite target");
    }
    if (!inputs.all_finite()) throw std::invalid_argument("train_svr: non-finite input");

    SvrModel model;
    model.config = config;
    model.feature_scaler = Standardizer::fit(inputs);
    const Matrix x = model.feature_scaler.apply_rows(inputs);

    Matrix ymat(n, 1);
    for (std::size_t l = 0; l < n; ++l) ymat(l, 0) = targets[l];
    const Standardizer yscale = Standardizer::fit(ymat);
    model.target_mean = yscale.means()[0];
    model.target_std = yscale.stddevs()[0];
    std::vector<double> y(n);
    for (std::size_t l = 0; l < n; ++l) y[l] = (targets[l] - model.target_mean) / model.target_std;

    model.kernel.kind = config.kernel;
    model.kernel.gamma = config.gamma_scale ? gamma_scale(x) : config.gamma_fixed;
    if (config.kernel == KernelKind::rbf && !(model.kernel.gamma > 0.0)) {
        throw std::invalid_argument("train_svr: gamma must be positive");
    }

    SmoSolution sol = smo_solve(x, y, model.kernel, config.C, config.epsilon, config.tol,
                                config.max_passes);

    // Certificate: the solution must satisfy the epsilon-KKT system at tol.
    const KktReport rep =
        kkt_check_core(sol.gradient, sol.beta, sol.bias, config.C, config.epsilon);
    if (!rep.pass(config.tol)) {
        throw std::runtime_error("train_svr: KKT certificate failed (violation " +
                                 std::to_string(rep.max_violation) + ")");
    }

    std::size_t n_sv = 0;
    for (double b : sol.beta) {
        if (std::abs(b) > 1e-12) ++n_sv;
    }
    model.support_vectors = Matrix(n_sv, x.cols());
    model.beta.reserve(n_sv);
    std::size_t r = 0;
    for (std::size_t l = 0; l < n; ++l) {
        if (std::abs(sol.beta[l]) > 1e-12) {
            for (std::size_t c = 0; c < x.cols(); ++c) model.support_vectors(r, c) = x(l, c);
            model.beta.push_back(sol.beta[l]);
            ++r;
        }
    }
    model.bias = sol.bias;
    if (info != nullptr) *info = std::move(sol);
    return model;
}

double svr_predict(const SvrModel& model, std::span<const double> input) {
    if (input.size() != model.feature_scaler.dims()) {
        throw std::invalid_argument("svr_predict: feature length mismatch");
    }
    const std::vector<double> x = model.feature_scaler.apply(input);
    double f = model.bias;
    for (std::size_t m = 0; m < model.beta.size(); ++m) {
        f += model.beta[m] * kernel_eval(model.kernel, model.support_vectors.row(m), x);
    }
    return f * model.target_std + model.target_mean;
}

KktReport svr_kkt_report(const SvrModel& model, const Matrix& raw_inputs,
                         std::span<const double> raw_targets) {
    const std::size_t n = raw_inputs.rows();
    if (raw_targets.size() != n) throw std::invalid_argument("svr_kkt_report: size mismatch");
    const Matrix x = model.feature_scaler.apply_rows(raw_inputs);

    // Reassemble the per-point coefficients by matching standardized rows to the
    // stored support vectors (bit-exact by construction). Duplicate inputs are
    // matched in index order.
    std::unordered_map<std::size_t, std::vector<std::size_t>> sv_by_hash;
    auto row_hash = [](std::span<const double> r) {
        std::size_t h = 1469598103934665603ull;
        for (double v : r) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof(bits));
            h = (h ^ bits) * 1099511628211ull;
        }
        return h;
    };
    for (std::size_t m = 0; m < model.beta.size(); ++m) {
        sv_by_hash[row_hash(model.support_vectors.row(m))].push_back(m);
    }
    auto rows_equal = [](std::span<const double> a, std::span<const double> b) {
        return std::equal(a.begin(), a.end(), b.begin(), b.end());
    };

    std::vector<double> beta(n, 0.0);
    std::vector<bool> used(model.beta.size(), false);
    for (std::size_t l = 0; l < n; ++l) {
        auto it = sv_by_hash.find(row_hash(x.row(l)));
        if (it == sv_by_hash.end()) continue;
        for (std::size_t m : it->second) {
            if (!used[m] && rows_equal(model.support_vectors.row(m), x.row(l))) {
                beta[l] = model.beta[m];
                used[m] = true;
                break;
            }
        }
    }

    std::vector<double> g(n);
    for (std::size_t l = 0; l < n; ++l) {
        double f = 0.0;
        for (std::size_t m = 0; m < model.beta.size(); ++m) {
            f += model.beta[m] * kernel_eval(model.kernel, model.support_vectors.row(m), x.row(l));
        }
        g[l] = f - (raw_targets[l] - model.target_mean) / model.target_std;
    }
    return kkt_check_core(g, beta, model.bias, model.config.C, model.config.epsilon);
}

namespace {

nlohmann::json scaler_to_json(const Standardizer& s) {
    return {{"means", s.means()}, {"stddevs", s.stddevs()}};
}

Standardizer scaler_from_json(const nlohmann::json& j) {
    return Standardizer::from_moments(j.at("means").get<std::vector<double>>(),
                                      j.at("stddevs").get<std::vector<double>>());
}

}  // namespace

void write_svr_model(const SvrModel& model, const std::filesystem::path& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["config"] = {{"C", model.config.C},
                   {"epsilon", model.config.epsilon},
                   {"kernel", model.config.kernel == KernelKind::rbf ? "rbf" : "linear"},
                   {"gamma_scale", model.config.gamma_scale},
                   {"gamma_fixed", model.config.gamma_fixed},
                   {"tol", model.config.tol},
                   {"max_passes", model.config.max_passes}};
    j["kernel"] = {{"kind", model.kernel.kind == KernelKind::rbf ? "rbf" : "linear"},
                   {"gamma", model.kernel.gamma}};
    j["feature_scaler"] = scaler_to_json(model.feature_scaler);
    j["target_mean"] = model.target_mean;
    j["target_std"] = model.target_std;
    j["support_vectors"] = {{"rows", model.support_vectors.rows()},
                            {"cols", model.support_vectors.cols()},
                            {"data", model.support_vectors.values()}};
    j["beta"] = model.beta;
    j["bias"] = model.bias;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

SvrModel read_svr_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    SvrModel m;
    const auto& c = j.at("config");
    m.config.C = c.at("C").get<double>();
    m.config.epsilon = c.at("epsilon").get<double>();
    m.config.kernel = c.at("kernel").get<std::string>() == "rbf" ? KernelKind::rbf : KernelKind::linear;
    m.config.gamma_scale = c.at("gamma_scale").get<bool>();
    m.config.gamma_fixed = c.at("gamma_fixed").get<double>();
    m.config.tol = c.at("tol").get<double>();
    m.config.max_passes = c.at("max_passes").get<std::size_t>();
    m.kernel.kind = j.at("kernel").at("kind").get<std::string>() == "rbf" ? KernelKind::rbf
                                                                          : KernelKind::linear;
    m.kernel.gamma = j.at("kernel").at("gamma").get<double>();
    m.feature_scaler = scaler_from_json(j.at("feature_scaler"));
    m.target_mean = j.at("target_mean").get<double>();
    m.target_std = j.at("target_std").get<double>();
    const auto& sv = j.at("support_vectors");
    Matrix x(sv.at("rows").get<std::size_t>(), sv.at("cols").get<std::size_t>());
    x.values() = sv.at("data").get<std::vector<double>>();
    if (x.values().size() != x.rows() * x.cols()) {
        throw std::invalid_argument(path.string() + ": support vector data length mismatch");
    }
    m.support_vectors = std::move(x);
    m.beta = j.at("beta").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    return m;
}

}  // namespace gcsvr
