#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "gcsvr/geo_graph.hpp"
#include "gcsvr/rng.hpp"
#include "oracles.hpp"

using namespace gcsvr;

namespace {

Station at(double lat, double lon, const std::string& id = "x") { return {id, id, lat, lon}; }

std::vector<Station> random_stations(std::size_t n, SeededRng& rng) {
    std::vector<Station> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({"s" + std::to_string(i), "station " + std::to_string(i),
                       rng.next_uniform(18.0, 29.0), rng.next_uniform(72.0, 78.0)});
    }
    return out;
}

}  // namespace

TEST_SUITE("geo_graph") {

TEST_CASE("haversine: identical points give zero") {
    const Station p = at(28.6139, 77.2090);
    CHECK(haversine_km(p, p) == 0.0);
}

TEST_CASE("haversine: antipodal points give pi * R") {
    // equatorial antipodes hit the formula's a == 1 branch exactly
    CHECK(haversine_km(at(0.0, 0.0), at(0.0, 180.0)) ==
          std::acos(-1.0) * kEarthRadiusKm);
    // a generic antipodal pair: asin loses ~half the digits near a == 1
    CHECK(haversine_km(at(10.0, 20.0), at(-10.0, -160.0)) ==
          doctest::Approx(std::acos(-1.0) * kEarthRadiusKm).epsilon(1e-8));
}

TEST_CASE("haversine: Delhi-Mumbai matches the independent great-circle oracle") {
    const Station delhi = at(28.6139, 77.2090, "delhi");
    const Station mumbai = at(19.0760, 72.8777, "mumbai");
    const double want =
        oracle::great_circle_atan2_km(28.6139, 77.2090, 19.0760, 72.8777, kEarthRadiusKm);
    const double got = haversine_km(delhi, mumbai);
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
    CHECK(std::abs(got - 1148.10) < 2.0);  // frozen from the oracle
}

TEST_CASE("haversine: symmetry and triangle inequality on random triples") {
    SeededRng rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        const auto s = random_stations(3, rng);
        CHECK(haversine_km(s[0], s[1]) == haversine_km(s[1], s[0]));
        const double ab = haversine_km(s[0], s[1]);
        const double bc = haversine_km(s[1], s[2]);
        const double ac = haversine_km(s[0], s[2]);
        CHECK(ac <= ab + bc + 1e-9);
    }
}

TEST_CASE("haversine: out-of-range coordinates are rejected") {
    CHECK_THROWS_AS(haversine_km(at(91.0, 0.0), at(0.0, 0.0)), std::invalid_argument);
    CHECK_THROWS_AS(haversine_km(at(0.0, 0.0), at(0.0, 181.0)), std::invalid_argument);
}

TEST_CASE("adjacency: d == sigma gives exp(-1)") {
    // two stations on the same meridian, one degree of latitude apart
    std::vector<Station> s = {at(28.0, 77.0, "a"), at(29.0, 77.0, "b")};
    const double d = haversine_km(s[0], s[1]);
    const StationNetwork net = build_adjacency(s, d * d, 0.1);
    CHECK(net.adjacency()(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(net.adjacency()(0, 0) == 0.0);
    CHECK(net.adjacency()(1, 0) == net.adjacency()(0, 1));
}

TEST_CASE("adjacency: below-threshold weight is zeroed and warned") {
    std::vector<Station> s = {at(28.0, 77.0, "a"), at(29.0, 77.0, "b")};
    const double d = haversine_km(s[0], s[1]);
    // choose sigma so that exp(-d^2/sigma^2) == eps/2 < eps
    const double eps = 0.1;
    const double sigma_sq = d * d / std::log(2.0 / eps);
    const StationNetwork net = build_adjacency(s, sigma_sq, eps);
    CHECK(net.adjacency()(0, 1) == 0.0);
    CHECK(net.neighbors(0).empty());
    CHECK(net.warnings().size() == 2);  // both nodes end up isolated
}

TEST_CASE("adjacency: line graph Laplacian row sums and zeta vs dense oracle") {
    std::vector<Station> s = {at(28.0, 77.0, "a"), at(28.3, 77.0, "b"), at(28.6, 77.0, "c")};
    const double d01 = haversine_km(s[0], s[1]);
    // neighbors at ~d01 connected, the far pair (2*d01) cut by the threshold
    const double sigma_sq = d01 * d01;
    const StationNetwork net = build_adjacency(s, sigma_sq, 0.1);
    CHECK(net.adjacency()(0, 1) > 0.0);
    CHECK(net.adjacency()(1, 2) > 0.0);
    CHECK(net.adjacency()(0, 2) == 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < 3; ++j) row += net.laplacian()(i, j);
        CHECK(std::abs(row) < 1e-9);
    }
    CHECK(net.zeta_max() == doctest::Approx(oracle::max_eigenvalue(net.laplacian())).epsilon(1e-6));
}

TEST_CASE("adjacency: validation errors") {
    std::vector<Station> dup = {at(28.0, 77.0, "a"), at(29.0, 77.0, "a")};
    CHECK_THROWS_AS(build_adjacency(dup, 1.0, 0.1), std::invalid_argument);
    std::vector<Station> one = {at(28.0, 77.0, "a")};
    CHECK_THROWS_AS(build_adjacency(one, 1.0, 0.1), std::invalid_argument);
    std::vector<Station> two = {at(28.0, 77.0, "a"), at(29.0, 77.0, "b")};
    CHECK_THROWS_AS(build_adjacency(two, 0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(build_adjacency(two, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("adjacency: sparsity cutoff consistency") {
    SeededRng rng(17);
    for (int rep = 0; rep < 5; ++rep) {
        const auto s = random_stations(6, rng);
        const double mean_d = mean_pairwise_distance_km(s);
        const double sigma_sq = mean_d * mean_d;
        const double eps = 0.1;
        const StationNetwork net = build_adjacency(s, sigma_sq, eps);
        const double cutoff = std::sqrt(-sigma_sq * std::log(eps));
        for (std::size_t i = 0; i < 6; ++i) {
            for (std::size_t j = 0; j < 6; ++j) {
                const double d = haversine_km(s[i], s[j]);
                const bool zero = net.adjacency()(i, j) == 0.0;
                const bool should_be_zero = (i == j) || d > cutoff;
                CHECK(zero == should_be_zero);
            }
        }
    }
}

TEST_CASE("adjacency: eps = 0 keeps the graph dense") {
    SeededRng rng(19);
    const auto s = random_stations(5, rng);
    const StationNetwork net = build_adjacency(s, 1e4, 0.0);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) CHECK((net.adjacency()(i, j) > 0.0) == (i != j));
}

TEST_CASE("adjacency: weights nondecreasing in sigma") {
    SeededRng rng(23);
    const auto s = random_stations(5, rng);
    const double mean_d = mean_pairwise_distance_km(s);
    const StationNetwork small = build_adjacency(s, mean_d * mean_d, 0.05);
    const StationNetwork large = build_adjacency(s, 4.0 * mean_d * mean_d, 0.05);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            if (small.adjacency()(i, j) > 0.0) {
                CHECK(large.adjacency()(i, j) >= small.adjacency()(i, j));
            }
        }
    }
}

TEST_CASE("laplacian is positive semidefinite") {
    SeededRng rng(29);
    const auto s = random_stations(7, rng);
    const double mean_d = mean_pairwise_distance_km(s);
    const StationNetwork net = build_adjacency(s, mean_d * mean_d, 0.1);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> x(7);
        for (double& v : x) v = rng.next_uniform(-1.0, 1.0);
        double quad = 0.0;
        for (std::size_t i = 0; i < 7; ++i)
            for (std::size_t j = 0; j < 7; ++j) quad += x[i] * net.laplacian()(i, j) * x[j];
        CHECK(quad >= -1e-9);
    }
}

TEST_CASE("estimate_zeta_max: zero matrix and K2") {
    CHECK(estimate_zeta_max(Matrix(3, 3)) == 0.0);
    Matrix k2(2, 2);
    k2(0, 0) = 1; k2(0, 1) = -1; k2(1, 0) = -1; k2(1, 1) = 1;
    CHECK(estimate_zeta_max(k2) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("estimate_zeta_max: random Laplacians match the dense eigensolver oracle") {
    SeededRng rng(37);
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 6;
        Matrix a(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double w = rng.next_double() < 0.5 ? 0.0 : rng.next_uniform(0.1, 1.0);
                a(i, j) = w;
                a(j, i) = w;
            }
        }
        Matrix lap(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            double deg = 0.0;
            for (std::size_t j = 0; j < n; ++j) deg += a(i, j);
            for (std::size_t j = 0; j < n; ++j) lap(i, j) = (i == j ? deg : 0.0) - a(i, j);
        }
        CHECK(estimate_zeta_max(lap) ==
              doctest::Approx(oracle::max_eigenvalue(lap)).epsilon(1e-6));
    }
}

TEST_CASE("estimate_zeta_max: rejects non-symmetric input") {
    Matrix m(2, 2);
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(estimate_zeta_max(m), std::invalid_argument);
    CHECK_THROWS_AS(estimate_zeta_max(Matrix(2, 3)), std::invalid_argument);
}

TEST_CASE("stations.csv and graph.json round trips") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "gcsvr_geo_test";
    fs::create_directories(dir);

    std::vector<Station> s = {{"d1", "Lodhi Road, IMD", 28.5918, 77.2273},
                              {"d2", "Nehru Nagar", 28.5678, 77.2506},
                              {"d3", "Quoted \"name\"", 28.7, 77.1}};
    write_stations_csv(s, dir / "stations.csv");
    const auto back = read_stations_csv(dir / "stations.csv");
    REQUIRE(back.size() == 3);
    CHECK(back[0].name == "Lodhi Road, IMD");
    CHECK(back[2].name == "Quoted \"name\"");
    CHECK(back[1].lat == doctest::Approx(28.5678).epsilon(1e-15));

    const double mean_d = mean_pairwise_distance_km(s);
    const StationNetwork net = build_adjacency(s, mean_d * mean_d, 0.1);
    write_graph_json(net, dir / "graph.json");
    const StationNetwork loaded = read_graph_json(dir / "graph.json");
    CHECK(loaded.adjacency() == net.adjacency());
    CHECK(loaded.sigma_tilde_sq() == net.sigma_tilde_sq());
    CHECK(loaded.zeta_max() == doctest::Approx(net.zeta_max()).epsilon(1e-12));
    fs::remove_all(dir);
}

}  // TEST_SUITE
