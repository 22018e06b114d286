#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace sentinel {

using Date = std::chrono::year_month_day;
using YearMonth = std::chrono::year_month;

// Second-resolution point in time, rendered in the CERT log convention
// "MM/DD/YYYY HH:MM:SS". Parsing is strict (fixed width, zero padded) so a
// parsed value always formats back to its source text.
class Timestamp {
public:
    Timestamp() = default;
    explicit Timestamp(std::chrono::sys_seconds t) : t_(t) {}
    Timestamp(Date d, int hour, int minute, int second);

    static std::optional<Timestamp> parse(std::string_view text);
    std::string format() const;

    std::chrono::sys_seconds time() const { return t_; }
    Date date() const;
    // Minutes since local midnight, fractional seconds included.
    double minutes_of_day() const;

    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;

private:
    std::chrono::sys_seconds t_{};
};

std::optional<Date> parse_iso_date(std::string_view text);     // YYYY-MM-DD
std::string format_iso_date(Date d);
std::optional<YearMonth> parse_year_month(std::string_view text);  // YYYY-MM
std::string format_year_month(YearMonth ym);

inline YearMonth year_month_of(Date d) { return d.year() / d.month(); }
inline YearMonth next_month(YearMonth ym) { return ym + std::chrono::months{1}; }
bool is_weekday(Date d);
Date add_days(Date d, int n);

}  // namespace sentinel
