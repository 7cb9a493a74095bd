#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <vector>

#include "gcsvr/rng.hpp"
#include "gcsvr/svr.hpp"
#include "oracles.hpp"

using namespace gcsvr;

namespace {

struct RawProblem {
    Matrix inputs;
    std::vector<double> targets;
};

RawProblem random_problem(std::size_t n, std::size_t d, SeededRng& rng) {
    RawProblem p;
    p.inputs = Matrix(n, d);
    for (double& v : p.inputs.values()) v = rng.next_uniform(-2.0, 2.0);
    p.targets.resize(n);
    for (double& y : p.targets) y = rng.next_uniform(-3.0, 3.0);
    return p;
}

// Re-standardize exactly as training does, but with test-local arithmetic, so
// the oracle sees the same QP without touching the implementation's scalers.
struct StandardizedView {
    Matrix x;
    std::vector<double> y;
    std::vector<double> fmean, fstd;
    double ymean = 0.0, ystd = 1.0;
};

StandardizedView standardize_view(const RawProblem& p) {
    StandardizedView v;
    const std::size_t n = p.inputs.rows(), d = p.inputs.cols();
    v.fmean.assign(d, 0.0);
    v.fstd.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) v.fmean[j] += p.inputs(i, j);
        v.fmean[j] /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double e = p.inputs(i, j) - v.fmean[j];
            v.fstd[j] += e * e;
        }
        v.fstd[j] = std::max(std::sqrt(v.fstd[j] / static_cast<double>(n)), 1e-8);
    }
    v.x = Matrix(n, d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) v.x(i, j) = (p.inputs(i, j) - v.fmean[j]) / v.fstd[j];
    for (double t : p.targets) v.ymean += t;
    v.ymean /= static_cast<double>(n);
    double var = 0.0;
    for (double t : p.targets) var += (t - v.ymean) * (t - v.ymean);
    v.ystd = std::max(std::sqrt(var / static_cast<double>(n)), 1e-8);
    v.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) v.y[i] = (p.targets[i] - v.ymean) / v.ystd;
    return v;
}

std::vector<std::vector<double>> kernel_matrix(const Matrix& x, double gamma) {
    const std::size_t n = x.rows();
    std::vector<std::vector<double>> k(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) k[i][j] = rbf_kernel(x.row(i), x.row(j), gamma);
    return k;
}

}  // namespace

TEST_SUITE("svr_temporal") {

TEST_CASE("rbf kernel basics") {
    std::vector<double> u = {1.0, 2.0, -0.5};
    CHECK(rbf_kernel(u, u, 2.0) == 1.0);

    // ||u - v||^2 = 1/gamma forces exp(-1)
    const double gamma = 0.25;
    std::vector<double> v = {1.0 + std::sqrt(1.0 / gamma), 2.0, -0.5};
    CHECK(rbf_kernel(u, v, gamma) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));

    SeededRng rng(1);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> a(4), b(4);
        for (auto& x : a) x = rng.next_uniform(-1, 1);
        for (auto& x : b) x = rng.next_uniform(-1, 1);
        double sq = 0.0;
        for (int j = 0; j < 4; ++j) sq += (a[j] - b[j]) * (a[j] - b[j]);
        CHECK(rbf_kernel(a, b, 0.7) == doctest::Approx(std::exp(-0.7 * sq)).epsilon(1e-15));
    }
    CHECK_THROWS_AS(rbf_kernel(u, std::vector<double>{1.0}, 1.0), std::invalid_argument);
}

TEST_CASE("gamma_scale: hand arithmetic and the two-pass oracle") {
    // 2 features, pooled variance 0.5 -> gamma = 1/(2 * 0.5) = 1
    Matrix m2(2, 2);
    m2(0, 0) = 0.0; m2(0, 1) = std::sqrt(2.0); m2(1, 0) = std::sqrt(2.0); m2(1, 1) = 0.0;
    CHECK(gamma_scale(m2) == doctest::Approx(1.0).epsilon(1e-12));

    SeededRng rng(5);
    Matrix r(13, 7);
    for (double& v : r.values()) v = rng.next_uniform(-4.0, 4.0);
    double mean = 0.0;
    for (double v : r.values()) mean += v;
    mean /= static_cast<double>(r.size());
    double var = 0.0;
    for (double v : r.values()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(r.size());
    CHECK(gamma_scale(r) == doctest::Approx(1.0 / (7.0 * var)).epsilon(1e-12));

    CHECK(gamma_scale(Matrix(3, 5, 2.0)) == doctest::Approx(1.0 / 5.0));  // zero-variance fallback
}

TEST_CASE("gamma_scale: standardized 56-feature inputs give ~1/56") {
    SeededRng rng(6);
    Matrix raw(40, 56);
    for (double& v : raw.values()) v = rng.next_uniform(-3.0, 9.0);
    const Standardizer s = Standardizer::fit(raw);
    const Matrix z = s.apply_rows(raw);
    CHECK(gamma_scale(z) == doctest::Approx(1.0 / 56.0).epsilon(1e-6));
}

TEST_CASE("epsilon loss") {
    CHECK(epsilon_loss(1.0, 1.3, 0.5) == 0.0);
    CHECK(epsilon_loss(5.0, 3.0, 0.5) == doctest::Approx(1.5));
    SeededRng rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        const double y = rng.next_uniform(-5, 5), yh = rng.next_uniform(-5, 5);
        CHECK(epsilon_loss(y, yh, 0.0) == doctest::Approx(std::abs(y - yh)));
    }
    CHECK_THROWS_AS(epsilon_loss(0.0, 0.0, -0.1), std::invalid_argument);
}

TEST_CASE("train_svr: constant targets collapse to the bias") {
    SeededRng rng(3);
    RawProblem p = random_problem(8, 3, rng);
    const double c = 7.25;
    for (double& y : p.targets) y = c;
    SvrConfig cfg;
    cfg.epsilon = 0.1;
    const SvrModel model = train_svr(p.inputs, p.targets, cfg);
    CHECK(model.beta.empty());  // every coefficient zero, pruned away
    for (std::size_t i = 0; i < p.inputs.rows(); ++i) {
        CHECK(svr_predict(model, p.inputs.row(i)) == doctest::Approx(c).epsilon(1e-12));
    }
}

TEST_CASE("train_svr: validation errors") {
    SeededRng rng(4);
    RawProblem p = random_problem(4, 2, rng);
    CHECK_THROWS_AS(train_svr(Matrix(1, 2), std::vector<double>{1.0}, SvrConfig{}),
                    std::invalid_argument);
    p.targets[2] = std::nan("");
    CHECK_THROWS_AS(train_svr(p.inputs, p.targets, SvrConfig{}), std::invalid_argument);
}

TEST_CASE("train_svr: n=6 dual objective matches the projected-gradient QP oracle") {
    SeededRng rng(8);
    for (int rep = 0; rep < 5; ++rep) {
        const RawProblem p = random_problem(6, 3, rng);
        SvrConfig cfg;
        cfg.C = 10.0;
        cfg.epsilon = 0.05;
        cfg.gamma_scale = false;
        cfg.gamma_fixed = 0.8;
        cfg.tol = 1e-6;  // drive both routes to agreement
        SmoSolution info;
        const SvrModel model = train_svr(p.inputs, p.targets, cfg, &info);

        const StandardizedView v = standardize_view(p);
        const auto k = kernel_matrix(v.x, cfg.gamma_fixed);
        const oracle::QpSolution qp = oracle::solve_svr_qp(k, v.y, cfg.C, cfg.epsilon);
        const double scale = std::max(1.0, std::abs(qp.objective));
        CHECK(std::abs(info.dual_objective - qp.objective) / scale < 1e-6);
        for (std::size_t i = 0; i < p.inputs.rows(); ++i) {
            double f_oracle = qp.bias;
            for (std::size_t m = 0; m < 6; ++m) f_oracle += qp.beta[m] * k[m][i];
            const double pred_oracle = f_oracle * v.ystd + v.ymean;
            CHECK(svr_predict(model, p.inputs.row(i)) ==
                  doctest::Approx(pred_oracle).epsilon(1e-4));
        }
    }
}

TEST_CASE("train_svr: y = 2x recovered inside the tube") {
    Matrix x(5, 1);
    std::vector<double> y(5);
    for (int i = 0; i < 5; ++i) {
        x(i, 0) = static_cast<double>(i);
        y[i] = 2.0 * static_cast<double>(i);
    }
    SvrConfig cfg;
    cfg.C = 100.0;
    cfg.epsilon = 0.01;
    cfg.gamma_scale = false;
    cfg.gamma_fixed = 0.5;
    const SvrModel model = train_svr(x, y, cfg);

    // oracle on the identically standardized problem
    RawProblem p{x, y};
    const StandardizedView v = standardize_view(p);
    const auto k = kernel_matrix(v.x, cfg.gamma_fixed);
    const oracle::QpSolution qp = oracle::solve_svr_qp(k, v.y, cfg.C, cfg.epsilon);
    std::vector<double> probe = {2.0};
    double f_oracle = qp.bias;
    for (std::size_t m = 0; m < 5; ++m) {
        f_oracle += qp.beta[m] * rbf_kernel(v.x.row(m),
                                            std::vector<double>{(2.0 - v.fmean[0]) / v.fstd[0]},
                                            cfg.gamma_fixed);
    }
    const double oracle_pred = f_oracle * v.ystd + v.ymean;
    const double got = svr_predict(model, probe);
    CHECK(got == doctest::Approx(oracle_pred).epsilon(1e-4));
    CHECK(std::abs(got - 4.0) <= cfg.epsilon + 1e-3);
}

TEST_CASE("train_svr: KKT certificate, equality constraint and complementarity") {
    SeededRng rng(9);
    for (int rep = 0; rep < 4; ++rep) {
        const RawProblem p = random_problem(12, 4, rng);
        SvrConfig cfg;
        cfg.C = rep % 2 == 0 ? 1.0 : 100.0;
        cfg.epsilon = 0.1;
        SmoSolution info;
        const SvrModel model = train_svr(p.inputs, p.targets, cfg, &info);

        const KktReport rep_full = svr_kkt_report(model, p.inputs, p.targets);
        CHECK(rep_full.pass(cfg.tol));
        CHECK(std::abs(rep_full.beta_sum) <= 1e-9);
        CHECK(rep_full.max_abs_beta <= cfg.C + 1e-12);
        for (double b : info.beta) {
            const double alpha = std::max(b, 0.0), alpha_star = std::max(-b, 0.0);
            CHECK(std::min(alpha, alpha_star) == 0.0);
        }
    }
}

TEST_CASE("smo: dual objective never decreases across accepted steps") {
    SeededRng rng(10);
    const RawProblem p = random_problem(20, 3, rng);
    const StandardizedView v = standardize_view(p);
    double prev = -1e300;
    bool monotone = true;
    smo_solve(v.x, v.y, KernelParams{KernelKind::rbf, 0.5}, 10.0, 0.05, 1e-4, 1000,
              [&](double obj) {
                  if (obj < prev - 1e-9) monotone = false;
                  prev = obj;
              });
    CHECK(monotone);
}

TEST_CASE("smo: brute-force equivalence on every instance with n <= 8") {
    SeededRng rng(12);
    for (std::size_t n = 3; n <= 8; ++n) {
        const RawProblem p = random_problem(n, 2, rng);
        const StandardizedView v = standardize_view(p);
        const double gamma = 1.0;
        const auto k = kernel_matrix(v.x, gamma);
        const SmoSolution sol =
            smo_solve(v.x, v.y, KernelParams{KernelKind::rbf, gamma}, 5.0, 0.1, 1e-7, 2000);
        const oracle::QpSolution qp = oracle::solve_svr_qp(k, v.y, 5.0, 0.1);
        CHECK(std::abs(sol.dual_objective - qp.objective) /
                  std::max(1.0, std::abs(qp.objective)) <
              1e-6);
    }
}

TEST_CASE("predict: term-by-term extended-precision oracle") {
    SeededRng rng(13);
    const RawProblem p = random_problem(15, 4, rng);
    SvrConfig cfg;
    cfg.C = 10.0;
    cfg.epsilon = 0.02;
    const SvrModel model = train_svr(p.inputs, p.targets, cfg);
    std::vector<double> probe(4);
    for (double& x : probe) x = rng.next_uniform(-2.0, 2.0);

    const std::vector<double> z = model.feature_scaler.apply(probe);
    long double acc = model.bias;
    for (std::size_t m = 0; m < model.beta.size(); ++m) {
        long double sq = 0.0;
        for (std::size_t j = 0; j < z.size(); ++j) {
            const long double d = static_cast<long double>(model.support_vectors(m, j)) - z[j];
            sq += d * d;
        }
        acc += static_cast<long double>(model.beta[m]) *
               std::exp(-static_cast<long double>(model.kernel.gamma) * sq);
    }
    const double want = static_cast<double>(acc) * model.target_std + model.target_mean;
    CHECK(svr_predict(model, probe) == doctest::Approx(want).epsilon(1e-10));
    CHECK_THROWS_AS(svr_predict(model, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("svr model file round trip is bit-exact") {
    namespace fs = std::filesystem;
    SeededRng rng(14);
    const RawProblem p = random_problem(10, 3, rng);
    SvrConfig cfg;
    cfg.C = 3.0;
    const SvrModel model = train_svr(p.inputs, p.targets, cfg);
    const fs::path path = fs::temp_directory_path() / "gcsvr_svr_roundtrip.model";
    write_svr_model(model, path);
    const SvrModel loaded = read_svr_model(path);
    CHECK(loaded == model);
    fs::remove(path);
}

}  // TEST_SUITE
