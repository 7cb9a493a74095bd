#include "gcsvr/panel.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace gcsvr {

// Civil-date conversions after Howard Hinnant's algorithms.
DayNumber to_day_number(const CivilDate& d) {
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) {
        throw std::invalid_argument("to_day_number: invalid date");
    }
    int y = d.year;
    const unsigned m = d.month;
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d.day - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<DayNumber>(era) * 146097 + static_cast<DayNumber>(doe) - 719468;
}

CivilDate from_day_number(DayNumber z) {
    z += 719468;
    const DayNumber era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return {y + (m <= 2), m, d};
}

namespace {

unsigned days_in_month(int year, unsigned month) {
    static constexpr unsigned lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2) {
        const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        return leap ? 29 : 28;
    }
    return lengths[month - 1];
}

}  // namespace

CivilDate parse_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
        throw std::invalid_argument("parse_iso_date: expected YYYY-MM-DD, got '" +
                                    std::string(s) + "'");
    }
    CivilDate d;
    auto num = [&](std::string_view part, int& out) {
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        if (ec != std::errc() || p != part.data() + part.size()) {
            throw std::invalid_argument("parse_iso_date: bad component in '" + std::string(s) + "'");
        }
    };
    int m = 0, day = 0;
    num(s.substr(0, 4), d.year);
    num(s.substr(5, 2), m);
    num(s.substr(8, 2), day);
    if (m < 1 || m > 12 || day < 1 || day > static_cast<int>(days_in_month(d.year, m))) {
        throw std::invalid_argument("parse_iso_date: out-of-range date '" + std::string(s) + "'");
    }
    d.month = static_cast<unsigned>(m);
    d.day = static_cast<unsigned>(day);
    return d;
}

std::string format_iso_date(DayNumber z) {
    const CivilDate d = from_day_number(z);
    char buf[11];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", d.year, d.month, d.day);
    return buf;
}

CivilDate add_months(const CivilDate& d, int months) {
    int m0 = static_cast<int>(d.month) - 1 + months;
    int y = d.year + m0 / 12;
    m0 %= 12;
    if (m0 < 0) {
        m0 += 12;
        --y;
    }
    const unsigned month = static_cast<unsigned>(m0 + 1);
    const unsigned day = std::min(d.day, days_in_month(y, month));
    return {y, month, day};
}

PanelSeries::PanelSeries(DayNumber start_day, std::vector<std::string> station_ids, Matrix values,
                         std::vector<std::uint8_t> missing)
    : start_day_(start_day),
      station_ids_(std::move(station_ids)),
      values_(std::move(values)),
      missing_(std::move(missing)) {
    if (station_ids_.size() != values_.cols()) {
        throw std::invalid_argument("PanelSeries: station count mismatch");
    }
    if (missing_.size() != values_.size()) {
        throw std::invalid_argument("PanelSeries: mask size mismatch");
    }
    for (std::size_t t = 0; t < values_.rows(); ++t) {
        for (std::size_t i = 0; i < values_.cols(); ++i) {
            if (missing_[t * values_.cols() + i] == 0 && !std::isfinite(values_(t, i))) {
                throw std::invalid_argument("PanelSeries: non-finite value at (" +
                                            std::to_string(t) + "," + std::to_string(i) + ")");
            }
        }
    }
}

bool PanelSeries::any_missing() const noexcept {
    for (std::uint8_t m : missing_) {
        if (m != 0) return true;
    }
    return false;
}

std::size_t PanelSeries::missing_count(std::size_t station) const {
    std::size_t count = 0;
    for (std::size_t t = 0; t < days(); ++t) {
        if (missing(t, station)) ++count;
    }
    return count;
}

std::size_t PanelSeries::index_of_day(DayNumber d) const {
    if (d < start_day_ || d > last_day()) {
        throw std::invalid_argument("PanelSeries: day " + format_iso_date(d) + " outside panel");
    }
    return static_cast<std::size_t>(d - start_day_);
}

PanelSeries PanelSeries::slice(std::size_t t_begin, std::size_t t_end) const {
    if (t_begin >= t_end || t_end > days()) {
        throw std::invalid_argument("PanelSeries::slice: bad range");
    }
    const std::size_t n = stations();
    Matrix v(t_end - t_begin, n);
    std::vector<std::uint8_t> m((t_end - t_begin) * n);
    for (std::size_t t = t_begin; t < t_end; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            v(t - t_begin, i) = values_(t, i);
            m[(t - t_begin) * n + i] = missing_[t * n + i];
        }
    }
    return PanelSeries(day(t_begin), station_ids_, std::move(v), std::move(m));
}

}  // namespace gcsvr
