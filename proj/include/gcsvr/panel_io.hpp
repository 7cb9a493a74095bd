#pragma once

#include <filesystem>
#include <vector>

#include "gcsvr/panel.hpp"

namespace gcsvr {

/// panel.csv: header date,station_id,value, long format, ISO dates. Missing
/// rows become masked cells over the full daily calendar [min date, max date].
/// Duplicate (date, station) pairs are rejected with the offending line
/// number. When `known_station_ids` is given, unknown ids are rejected and the
/// panel columns follow that order; otherwise first-appearance order.
PanelSeries load_panel(const std::filesystem::path& path,
                       const std::vector<std::string>* known_station_ids = nullptr);

void write_panel_csv(const PanelSeries& panel, const std::filesystem::path& path);

/// scores.csv for the mcb subcommand: header task,model,score, long format.
/// Returns the D x F matrix (tasks x models) plus the label orders; every
/// (task, model) cell must be present exactly once.
struct ScoreTable {
    std::vector<std::string> tasks;
    std::vector<std::string> models;
    Matrix scores;  // D x F
};
ScoreTable load_scores_csv(const std::filesystem::path& path);

}  // namespace gcsvr
