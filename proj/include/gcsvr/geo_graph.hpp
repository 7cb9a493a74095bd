#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "gcsvr/matrix.hpp"

namespace gcsvr {

/// IUGG mean Earth radius in km.
inline constexpr double kEarthRadiusKm = 6371.0088;

struct Station {
    std::string id;
    std::string name;
    double lat = 0.0;  // degrees, [-90, 90]
    double lon = 0.0;  // degrees, [-180, 180]
};

/// Great-circle distance in km (haversine formula). Throws
/// std::invalid_argument for out-of-range coordinates.
double haversine_km(const Station& p, const Station& q);

/// Mean over unordered station pairs; the default kernel bandwidth is its square.
double mean_pairwise_distance_km(const std::vector<Station>& stations);

/// Largest eigenvalue of a symmetric matrix by power iteration from a fixed
/// start vector, run until the relative change drops below 1e-10 (or 1e4
/// iterations). Returns the Rayleigh quotient; 0 for the zero matrix.
double estimate_zeta_max(const Matrix& symmetric);

/// The weighted station graph: Gaussian-kernel adjacency sparsified at eps,
/// degree vector, combinatorial Laplacian and its largest eigenvalue.
/// Immutable after construction.
class StationNetwork {
public:
    StationNetwork() = default;

    std::size_t size() const noexcept { return stations_.size(); }
    const std::vector<Station>& stations() const noexcept { return stations_; }
    const Matrix& adjacency() const noexcept { return adjacency_; }
    const std::vector<double>& degree() const noexcept { return degree_; }
    const Matrix& laplacian() const noexcept { return laplacian_; }
    double zeta_max() const noexcept { return zeta_max_; }
    double sigma_tilde_sq() const noexcept { return sigma_tilde_sq_; }
    double eps_sparsity() const noexcept { return eps_sparsity_; }

    /// Neighbor set N(i) = { j : a_ij > 0 }.
    const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_[i]; }

    /// Stations that ended up with no edges (recorded, not an error).
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    std::size_t station_index(const std::string& id) const;  // throws if unknown

    friend StationNetwork build_adjacency(std::vector<Station> stations, double sigma_tilde_sq,
                                          double eps_sparsity);
    friend StationNetwork network_from_adjacency(std::vector<Station> stations, Matrix adjacency,
                                                 double sigma_tilde_sq, double eps_sparsity);

private:
    std::vector<Station> stations_;
    Matrix adjacency_;
    std::vector<double> degree_;
    Matrix laplacian_;
    double zeta_max_ = 0.0;
    double sigma_tilde_sq_ = 0.0;
    double eps_sparsity_ = 0.0;
    std::vector<std::vector<std::size_t>> neighbors_;
    std::vector<std::string> warnings_;
};

/// a_ij = exp(-d_ij^2 / sigma_tilde_sq) when i != j and the value clears
/// eps_sparsity, else 0. Requires >= 2 stations with unique ids, a positive
/// bandwidth and eps in [0, 1).
StationNetwork build_adjacency(std::vector<Station> stations, double sigma_tilde_sq,
                               double eps_sparsity);

/// Rebuild a network from a stored adjacency (degree/Laplacian/zeta recomputed).
StationNetwork network_from_adjacency(std::vector<Station> stations, Matrix adjacency,
                                      double sigma_tilde_sq, double eps_sparsity);

/// stations.csv: header station_id,name,lat,lon; RFC4180-style quoting for names.
std::vector<Station> read_stations_csv(const std::filesystem::path& path);
void write_stations_csv(const std::vector<Station>& stations, const std::filesystem::path& path);

/// graph.json: station list, kernel parameters and the dense row-major adjacency.
void write_graph_json(const StationNetwork& network, const std::filesystem::path& path);
StationNetwork read_graph_json(const std::filesystem::path& path);

}  // namespace gcsvr
