#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gcsvr/matrix.hpp"

namespace gcsvr {

/// Days since 1970-01-01. All internal date arithmetic happens on this;
/// calendar parsing lives at the I/O boundary.
using DayNumber = std::int64_t;

struct CivilDate {
    int year = 1970;
    unsigned month = 1;  // 1..12
    unsigned day = 1;    // 1..31

    bool operator==(const CivilDate&) const = default;
};

DayNumber to_day_number(const CivilDate& d);
CivilDate from_day_number(DayNumber z);
CivilDate parse_iso_date(std::string_view s);  // YYYY-MM-DD
std::string format_iso_date(DayNumber z);

/// First-of-interval month arithmetic: advance by `months`, clamping the day
/// of month to the target month's length.
CivilDate add_months(const CivilDate& d, int months);

/// Aligned daily concentrations for N stations over T consecutive days,
/// with a per-cell missing mask. Immutable after construction.
class PanelSeries {
public:
    PanelSeries() = default;
    PanelSeries(DayNumber start_day, std::vector<std::string> station_ids, Matrix values,
                std::vector<std::uint8_t> missing);

    std::size_t days() const noexcept { return values_.rows(); }      // T
    std::size_t stations() const noexcept { return values_.cols(); }  // N
    DayNumber start_day() const noexcept { return start_day_; }
    DayNumber day(std::size_t t) const noexcept { return start_day_ + static_cast<DayNumber>(t); }
    DayNumber last_day() const noexcept { return day(days() - 1); }

    double value(std::size_t t, std::size_t i) const { return values_(t, i); }
    bool missing(std::size_t t, std::size_t i) const {
        return missing_[t * stations() + i] != 0;
    }
    bool any_missing() const noexcept;
    std::size_t missing_count(std::size_t station) const;

    const Matrix& values() const noexcept { return values_; }
    const std::vector<std::uint8_t>& missing_mask() const noexcept { return missing_; }
    const std::vector<std::string>& station_ids() const noexcept { return station_ids_; }

    /// Day index for an absolute day number; throws if outside the panel.
    std::size_t index_of_day(DayNumber d) const;

    /// Copy of rows [t_begin, t_end).
    PanelSeries slice(std::size_t t_begin, std::size_t t_end) const;

private:
    DayNumber start_day_ = 0;
    std::vector<std::string> station_ids_;
    Matrix values_;                       // T x N
    std::vector<std::uint8_t> missing_;   // T * N
};

}  // namespace gcsvr
