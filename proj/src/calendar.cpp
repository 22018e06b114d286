#include "sentinel/calendar.hpp"

#include <cstdio>

namespace sentinel {

namespace {

// Reads exactly `width` ASCII digits starting at `pos`.
bool read_fixed(std::string_view s, std::size_t pos, std::size_t width, int& out) {
    if (pos + width > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + width; ++i) {
        const char c = s[i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

}  // namespace

Timestamp::Timestamp(Date d, int hour, int minute, int second)
    : t_(std::chrono::sys_days{d} + std::chrono::hours{hour} + std::chrono::minutes{minute} +
         std::chrono::seconds{second}) {}

std::optional<Timestamp> Timestamp::parse(std::string_view s) {
    // MM/DD/YYYY HH:MM:SS
    if (s.size() != 19 || s[2] != '/' || s[5] != '/' || s[10] != ' ' || s[13] != ':' || s[16] != ':') {
        return std::nullopt;
    }
    int mo, d, y, h, mi, se;
    if (!read_fixed(s, 0, 2, mo) || !read_fixed(s, 3, 2, d) || !read_fixed(s, 6, 4, y) ||
        !read_fixed(s, 11, 2, h) || !read_fixed(s, 14, 2, mi) || !read_fixed(s, 17, 2, se)) {
        return std::nullopt;
    }
    const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok() || h > 23 || mi > 59 || se > 59) return std::nullopt;
    return Timestamp{date, h, mi, se};
}

std::string Timestamp::format() const {
    const auto day = std::chrono::floor<std::chrono::days>(t_);
    const Date d{day};
    const std::chrono::hh_mm_ss hms{t_ - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%02u/%02u/%04d %02d:%02d:%02d", static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()), static_cast<int>(d.year()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

Date Timestamp::date() const { return Date{std::chrono::floor<std::chrono::days>(t_)}; }

double Timestamp::minutes_of_day() const {
    const auto since = t_ - std::chrono::floor<std::chrono::days>(t_);
    return static_cast<double>(since.count()) / 60.0;
}

std::optional<Date> parse_iso_date(std::string_view s) {
    int y, m, d;
    if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !read_fixed(s, 0, 4, y) || !read_fixed(s, 5, 2, m) ||
        !read_fixed(s, 8, 2, d)) {
        return std::nullopt;
    }
    const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok()) return std::nullopt;
    return date;
}

std::string format_iso_date(Date d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

std::optional<YearMonth> parse_year_month(std::string_view s) {
    int y, m;
    if (s.size() != 7 || s[4] != '-' || !read_fixed(s, 0, 4, y) || !read_fixed(s, 5, 2, m)) return std::nullopt;
    const YearMonth ym{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)}};
    if (!ym.ok()) return std::nullopt;
    return ym;
}

std::string format_year_month(YearMonth ym) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u", static_cast<int>(ym.year()), static_cast<unsigned>(ym.month()));
    return buf;
}

bool is_weekday(Date d) {
    const std::chrono::weekday wd{std::chrono::sys_days{d}};
    return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
}

Date add_days(Date d, int n) { return Date{std::chrono::sys_days{d} + std::chrono::days{n}}; }

}  // namespace sentinel
