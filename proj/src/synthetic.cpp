#include "gcsvr/synthetic.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "gcsvr/rng.hpp"

namespace gcsvr {

std::string topology_name(SyntheticSpec::Topology t) {
    switch (t) {
        case SyntheticSpec::Topology::ring: return "ring";
        case SyntheticSpec::Topology::grid: return "grid";
        case SyntheticSpec::Topology::two_cluster: return "two-cluster";
    }
    return "ring";
}

SyntheticSpec::Topology topology_from_name(const std::string& name) {
    if (name == "ring") return SyntheticSpec::Topology::ring;
    if (name == "grid") return SyntheticSpec::Topology::grid;
    if (name == "two-cluster" || name == "two_cluster") {
        return SyntheticSpec::Topology::two_cluster;
    }
    throw std::invalid_argument("unknown topology '" + name + "'");
}

namespace {

// Coordinates near Delhi; offsets in degrees are small enough that the
// haversine metric is effectively planar.
constexpr double kBaseLat = 28.6139;
constexpr double kBaseLon = 77.2090;

void lay_out(const SyntheticSpec& spec, std::vector<Station>& stations, Matrix& adj) {
    const std::size_t n = spec.nodes;
    stations.clear();
    adj = Matrix(n, n);
    auto station = [](std::size_t i, double lat, double lon) {
        return Station{"s" + std::to_string(i), "synthetic node " + std::to_string(i), lat, lon};
    };
    switch (spec.topology) {
        case SyntheticSpec::Topology::ring: {
            const double radius = 0.15;
            for (std::size_t i = 0; i < n; ++i) {
                const double ang = 2.0 * std::numbers::pi * static_cast<double>(i) /
                                   static_cast<double>(n);
                stations.push_back(station(i, kBaseLat + radius * std::cos(ang),
                                           kBaseLon + radius * std::sin(ang)));
            }
            for (std::size_t i = 0; i < n; ++i) {
                adj(i, (i + 1) % n) = 1.0;
                adj((i + 1) % n, i) = 1.0;
            }
            break;
        }
        case SyntheticSpec::Topology::grid: {
            const std::size_t side =
                static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
            const double spacing = 0.1;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t row = i / side, col = i % side;
                stations.push_back(station(i, kBaseLat + spacing * static_cast<double>(row),
                                           kBaseLon + spacing * static_cast<double>(col)));
            }
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t col = i % side;
                if (col + 1 < side && i + 1 < n) {
                    adj(i, i + 1) = 1.0;
                    adj(i + 1, i) = 1.0;
                }
                if (i + side < n) {
                    adj(i, i + side) = 1.0;
                    adj(i + side, i) = 1.0;
                }
            }
            break;
        }
        case SyntheticSpec::Topology::two_cluster: {
            const double sep = 1.0;     // cluster centers ~111 km apart
            const double radius = 0.05;
            const std::size_t half = n / 2;
            for (std::size_t i = 0; i < n; ++i) {
                const bool second = i >= half;
                const std::size_t k = second ? i - half : i;
                const std::size_t csize = second ? n - half : half;
                const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) /
                                   static_cast<double>(std::max<std::size_t>(csize, 1));
                stations.push_back(station(i,
                                           kBaseLat + radius * std::cos(ang),
                                           kBaseLon + (second ? sep : 0.0) +
                                               radius * std::sin(ang)));
            }
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    if ((i < half) == (j < half)) {
                        adj(i, j) = 1.0;
                        adj(j, i) = 1.0;
                    }
                }
            }
            break;
        }
    }
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    if (spec.nodes < 2) throw std::invalid_argument("generate_synthetic: need >= 2 nodes");
    if (!(std::abs(spec.ar_coeff) < 1.0)) {
        throw std::invalid_argument("generate_synthetic: |ar_coeff| must be < 1");
    }
    if (spec.coupling < 0.0) throw std::invalid_argument("generate_synthetic: coupling must be >= 0");
    if (!(std::abs(spec.ar_coeff) + spec.coupling < 1.0)) {
        throw std::invalid_argument("generate_synthetic: |ar_coeff| + coupling must be < 1");
    }
    if (spec.days < 1) throw std::invalid_argument("generate_synthetic: days must be >= 1");

    SyntheticData data;
    data.spec = spec;
    lay_out(spec, data.stations, data.generator_adjacency);
    const std::size_t n = spec.nodes;

    // Kernel parameters that reproduce the generator topology: put the cutoff
    // midway between the largest neighbor distance and the smallest
    // non-neighbor distance.
    double max_nb = 0.0;
    double min_non = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = haversine_km(data.stations[i], data.stations[j]);
            if (data.generator_adjacency(i, j) > 0.0) max_nb = std::max(max_nb, d);
            else min_non = std::min(min_non, d);
        }
    }
    const double cutoff = std::isinf(min_non) ? 2.0 * max_nb : 0.5 * (max_nb + min_non);
    data.suggested_eps = 0.1;
    data.suggested_sigma_sq = cutoff * cutoff / std::log(1.0 / data.suggested_eps);

    std::vector<std::vector<std::size_t>> nbs(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (data.generator_adjacency(i, j) > 0.0) nbs[i].push_back(j);
        }
    }

    SeededRng rng = SeededRng(spec.seed).split(0);
    constexpr std::size_t burn_in = 200;
    std::vector<double> y(n, 0.0), next(n, 0.0);
    Matrix values(spec.days, n);
    for (std::size_t t = 0; t < burn_in + spec.days; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            double nb_mean = 0.0;
            if (!nbs[i].empty()) {
                for (std::size_t j : nbs[i]) nb_mean += y[j];
                nb_mean /= static_cast<double>(nbs[i].size());
            }
            next[i] = spec.ar_coeff * y[i] + spec.coupling * nb_mean +
                      spec.noise_sigma * rng.next_gaussian();
        }
        y = next;
        if (t >= burn_in) {
            for (std::size_t i = 0; i < n; ++i) {
                values(t - burn_in, i) = spec.base_level + y[i];
            }
        }
    }

    std::vector<std::string> ids;
    for (const auto& s : data.stations) ids.push_back(s.id);
    std::vector<std::uint8_t> missing(values.size(), 0);
    data.panel = PanelSeries(to_day_number(spec.start_date), std::move(ids), std::move(values),
                             std::move(missing));
    return data;
}

}  // namespace gcsvr
