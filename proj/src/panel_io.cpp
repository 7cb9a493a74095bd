#include "gcsvr/panel_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "csv_util.hpp"

namespace gcsvr {

PanelSeries load_panel(const std::filesystem::path& path,
                       const std::vector<std::string>* known_station_ids) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path.string());

    struct Cell {
        DayNumber day;
        std::size_t station;
        double value;
        std::size_t line;
    };
    std::vector<Cell> cells;
    std::unordered_map<std::string, std::size_t> station_index;
    std::vector<std::string> station_ids;
    if (known_station_ids != nullptr) {
        station_ids = *known_station_ids;
        for (std::size_t i = 0; i < station_ids.size(); ++i) station_index[station_ids[i]] = i;
    }

    DayNumber min_day = std::numeric_limits<DayNumber>::max();
    DayNumber max_day = std::numeric_limits<DayNumber>::min();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = csv::split_line(line, line_no);
        if (line_no == 1) {
            if (fields != std::vector<std::string>{"date", "station_id", "value"}) {
                throw std::invalid_argument(path.string() + ": expected header date,station_id,value");
            }
            continue;
        }
        if (fields.size() != 3) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                        ": expected 3 fields");
        }
        DayNumber day;
        try {
            day = to_day_number(parse_iso_date(fields[0]));
        } catch (const std::exception& e) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": " +
                                        e.what());
        }
        auto it = station_index.find(fields[1]);
        if (it == station_index.end()) {
            if (known_station_ids != nullptr) {
                throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                            ": unknown station id '" + fields[1] + "'");
            }
            it = station_index.emplace(fields[1], station_ids.size()).first;
            station_ids.push_back(fields[1]);
        }
        double value;
        try {
            value = std::stod(fields[2]);
        } catch (const std::exception&) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                        ": bad value '" + fields[2] + "'");
        }
        if (!std::isfinite(value)) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                        ": non-finite value");
        }
        min_day = std::min(min_day, day);
        max_day = std::max(max_day, day);
        cells.push_back({day, it->second, value, line_no});
    }
    if (cells.empty()) throw std::invalid_argument(path.string() + ": no data rows");

    const std::size_t t_len = static_cast<std::size_t>(max_day - min_day + 1);
    const std::size_t n = station_ids.size();
    // missing cells carry NaN so un-imputed panels cannot silently train on zeros
    Matrix values(t_len, n, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::uint8_t> missing(t_len * n, 1);
    std::unordered_set<std::uint64_t> filled;
    for (const Cell& c : cells) {
        const std::size_t t = static_cast<std::size_t>(c.day - min_day);
        const std::uint64_t key = static_cast<std::uint64_t>(t) * n + c.station;
        if (!filled.insert(key).second) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(c.line) +
                                        ": duplicate (date, station) pair");
        }
        values(t, c.station) = c.value;
        missing[t * n + c.station] = 0;
    }
    return PanelSeries(min_day, std::move(station_ids), std::move(values), std::move(missing));
}

void write_panel_csv(const PanelSeries& panel, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(17);
    out << "date,station_id,value\n";
    for (std::size_t t = 0; t < panel.days(); ++t) {
        for (std::size_t i = 0; i < panel.stations(); ++i) {
            if (panel.missing(t, i)) continue;
            out << format_iso_date(panel.day(t)) << ','
                << csv::quote_field(panel.station_ids()[i]) << ',' << panel.value(t, i) << '\n';
        }
    }
}

ScoreTable load_scores_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    ScoreTable table;
    std::map<std::pair<std::size_t, std::size_t>, double> entries;
    std::unordered_map<std::string, std::size_t> task_idx, model_idx;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = csv::split_line(line, line_no);
        if (line_no == 1) {
            if (fields != std::vector<std::string>{"task", "model", "score"}) {
                throw std::invalid_argument(path.string() + ": expected header task,model,score");
            }
            continue;
        }
        if (fields.size() != 3) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                        ": expected 3 fields");
        }
        auto ti = task_idx.find(fields[0]);
        if (ti == task_idx.end()) {
            ti = task_idx.emplace(fields[0], table.tasks.size()).first;
            table.tasks.push_back(fields[0]);
        }
        auto mi = model_idx.find(fields[1]);
        if (mi == model_idx.end()) {
            mi = model_idx.emplace(fields[1], table.models.size()).first;
            table.models.push_back(fields[1]);
        }
        double score;
        try {
            score = std::stod(fields[2]);
        } catch (const std::exception&) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                        ": bad score");
        }
        if (!entries.emplace(std::make_pair(ti->second, mi->second), score).second) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                        ": duplicate (task, model) pair");
        }
    }
    table.scores = Matrix(table.tasks.size(), table.models.size());
    for (std::size_t t = 0; t < table.tasks.size(); ++t) {
        for (std::size_t m = 0; m < table.models.size(); ++m) {
            auto it = entries.find({t, m});
            if (it == entries.end()) {
                throw std::invalid_argument(path.string() + ": missing score for task '" +
                                            table.tasks[t] + "', model '" + table.models[m] + "'");
            }
            table.scores(t, m) = it->second;
        }
    }
    return table;
}

}  // namespace gcsvr
