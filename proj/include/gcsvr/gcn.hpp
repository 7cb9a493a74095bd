#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "gcsvr/geo_graph.hpp"
#include "gcsvr/matrix.hpp"
#include "gcsvr/panel.hpp"
#include "gcsvr/rng.hpp"

namespace gcsvr {

struct GcnConfig {
    std::size_t input_window = 24;  // p
    std::size_t hidden_dim = 64;
    std::size_t embed_dim = 32;     // r
    double dropout_rate = 0.2;
    std::size_t epochs = 100;
    double lr = 0.001;
    double weight_decay = 5e-4;
    std::uint64_t seed = 0;
    bool weighted_mean = false;  // adjacency-weighted neighbor mean instead of plain mean

    bool operator==(const GcnConfig&) const = default;
};

/// Two graph-convolution layers plus a scalar readout head used only during
/// training. Station scalers (when set) map raw windows and targets to the
/// standardized space the parameters were trained in. Frozen after training.
struct GcnModel {
    GcnConfig config;
    Matrix w1, b1;  // p x hidden: neighbor transform / self transform
    Matrix w2, b2;  // hidden x embed
    Matrix head;    // embed x 1
    double head_bias = 0.0;
    std::vector<double> station_mean;  // empty => identity scaling
    std::vector<double> station_std;

    bool operator==(const GcnModel&) const = default;
};

struct EmbeddingSet {
    Matrix embeddings;               // N x embed, station order matches the network
    std::ptrdiff_t window_end = -1;  // panel index of the window's last day, -1 if detached
};

/// Eq.-style spectral reference: w0*x + w1*((2L/zeta_max - I)*x). Not on the
/// training path; kept as a tested reference operation. Throws
/// DegenerateGraphError when zeta_max == 0.
std::vector<double> first_order_filter(std::span<const double> x, const StationNetwork& network,
                                       double w0, double w1);

struct GcnForwardResult {
    Matrix embeddings;            // N x embed
    std::vector<double> readout;  // per-station head output (standardized units)
};

/// Message-passing forward pass over an N x p window matrix (row i = station
/// i's most recent p values, oldest first). Dropout applies to the layer-1
/// activations only when `training` is set; `rng` must be non-null then.
GcnForwardResult gcn_forward(const GcnModel& model, const Matrix& windows,
                             const StationNetwork& network, bool training, SeededRng* rng);

/// Inference path: no dropout, readout unused.
EmbeddingSet gcn_embed(const GcnModel& model, const Matrix& windows,
                       const StationNetwork& network);

struct GcnGradients {
    Matrix w1, b1, w2, b2, head;
    double head_bias = 0.0;
};

/// Mean squared error of the readout over all (window, target) samples and
/// its analytic gradient. Targets are in standardized units. `dropout_masks`,
/// when provided, holds one N x hidden mask per sample (entries 0 or
/// 1/(1-rate)); pass nullptr for the no-dropout loss.
double gcn_loss_and_gradients(const GcnModel& model, const std::vector<Matrix>& windows,
                              const Matrix& targets, const StationNetwork& network,
                              const std::vector<Matrix>* dropout_masks, GcnGradients* grads);

/// Full-batch Adam on next-day prediction over every (window, next day) pair
/// in the panel. The returned model is frozen; same seed, same bits.
GcnModel gcn_train(const PanelSeries& panel, const StationNetwork& network,
                   const GcnConfig& config);

/// gcn.model checkpoint: config echo, every tensor, the training seed.
/// Write-then-read is bit-exact.
void write_gcn_model(const GcnModel& model, const std::filesystem::path& path);
GcnModel read_gcn_model(const std::filesystem::path& path);

/// Standardize a raw window matrix with the model's station scalers (identity
/// when the model has none).
Matrix gcn_scale_windows(const GcnModel& model, const Matrix& windows);

}  // namespace gcsvr
