#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "gcsvr/conformal.hpp"
#include "gcsvr/gcn.hpp"
#include "gcsvr/panel.hpp"
#include "gcsvr/svr.hpp"

namespace gcsvr {

/// Effective run configuration: defaults here, overridden by a flat key=value
/// config file, overridden again by CLI --set flags.
struct RunConfig {
    std::filesystem::path stations_path;
    std::filesystem::path panel_path;
    std::filesystem::path out_dir = ".";
    double sigma_tilde_sq = 0.0;  // 0 => (mean pairwise distance)^2
    double eps_sparsity = 0.1;
    GcnConfig gcn;
    SvrConfig svr;
    int horizon = 30;
    ConformalConfig conformal;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::optional<CivilDate> test_start;
    bool zero_embeddings = false;
    bool refit_per_window = true;
};

/// Parse `key = value` lines ('#' starts a comment). Unknown keys are errors.
RunConfig load_run_config(const std::filesystem::path& path);

/// Apply a single override; shared between the config file parser and the CLI.
void apply_config_kv(RunConfig& cfg, std::string_view key, std::string_view value);

/// Flat echo of every effective setting, embedded in output artifacts.
std::map<std::string, std::string> config_echo(const RunConfig& cfg);

}  // namespace gcsvr
