#include "sentinel/datagen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "sentinel/error.hpp"
#include "sentinel/ingest.hpp"
#include "sentinel/random.hpp"

namespace sentinel {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 24> kFirstNames{
    "Aaron", "Beatrice", "Calvin", "Dora",  "Elliot", "Fiona",  "Gavin", "Hana",
    "Ivan",  "Jolene",   "Kirk",   "Leah",  "Marvin", "Nadia",  "Oscar", "Paula",
    "Quinn", "Rosa",     "Silas",  "Tamar", "Ulric",  "Vera",   "Wade",  "Yvette"};
constexpr std::array<std::string_view, 20> kLastNames{
    "Abbott", "Burke",  "Castro", "Dalton", "Ellison", "Fowler", "Garner", "Holt",  "Ingram", "Jarvis",
    "Keller", "Lowery", "Mercer", "Nolan",  "Ortega",  "Pruitt", "Reeves", "Salas", "Tate",   "Vance"};
constexpr std::array<std::string_view, 8> kRoles{
    "Salesman", "ITAdmin", "Engineer", "Technician", "Manager", "Secretary", "Scientist", "Accountant"};
constexpr std::array<std::string_view, 12> kDomains{
    "google.com",   "yahoo.com",    "cnn.com",      "bbc.co.uk",  "espn.com",    "linkedin.com",
    "facebook.com", "wikipedia.org", "weather.com", "amazon.com", "nytimes.com", "craigslist.org"};
constexpr std::string_view kUploadUrl = "wikileaks.org";

enum class LogFile { Logon = 0, Device, Http, File };

struct Employee {
    std::string id;
    std::string name;
    std::string email;
    std::string role;
    std::string pc;
    std::array<int, 5> psych{};
    double logon_mean = 0;  // minutes since midnight
    bool device_user = false;
    double device_rate = 0;  // daily probability of a device session
    bool insider = false;
    YearMonth last_month;   // last month on the roster
    Date last_active_day;   // no activity after this day
    Date attack_first{};
    Date attack_last{};
};

struct PendingEvent {
    std::int64_t seconds;  // since the day's midnight
    std::uint64_t seq;     // generation order, for a stable sort
    LogFile file;
    std::string user;
    std::string pc;
    std::string last_field;  // activity, url or filename
};

std::string make_user_id(Rng& rng, const std::string& first, const std::string& last,
                         std::unordered_set<std::string>& taken) {
    while (true) {
        std::string id;
        id += first[0];
        id += last[0];
        id += static_cast<char>('A' + rng.below(26));
        char digits[8];
        std::snprintf(digits, sizeof digits, "%04d", static_cast<int>(rng.below(10000)));
        id += digits;
        if (taken.insert(id).second) return id;
    }
}

std::vector<YearMonth> months_between(Date start, Date end) {
    std::vector<YearMonth> out;
    for (YearMonth m = year_month_of(start); m <= year_month_of(end); m = next_month(m)) out.push_back(m);
    return out;
}

Date last_day_of(YearMonth m) { return Date{m / std::chrono::last}; }

// Attack windows run over `len` consecutive weekdays inside both `month` and
// the generated range.
// Attack windows start after a week of benign history so every insider
// has a logon habit to deviate from.
constexpr int kBenignLeadDays = 7;

std::vector<Date> attack_starts(YearMonth month, Date range_start, Date range_end, int len) {
    std::vector<Date> starts;
    const Date first = std::max(Date{month / std::chrono::day{1}}, add_days(range_start, kBenignLeadDays));
    const Date last = std::min(last_day_of(month), range_end);
    for (Date d = first; std::chrono::sys_days{d} <= std::chrono::sys_days{last}; d = add_days(d, 1)) {
        bool ok = true;
        for (int i = 0; i < len && ok; ++i) {
            const Date x = add_days(d, i);
            ok = std::chrono::sys_days{x} <= std::chrono::sys_days{last} && is_weekday(x);
        }
        if (ok) starts.push_back(d);
    }
    return starts;
}

std::int64_t clamp_seconds(double minutes) {
    const auto s = static_cast<std::int64_t>(std::llround(minutes * 60.0));
    return std::clamp<std::int64_t>(s, 0, 86399);
}

class CorpusWriter {
public:
    explicit CorpusWriter(const fs::path& root) {
        const CorpusPaths paths{root};
        const std::array kinds{SourceKind::Logon, SourceKind::Device, SourceKind::Http, SourceKind::File};
        for (std::size_t i = 0; i < kinds.size(); ++i) {
            out_[i].open(paths.log(kinds[i]), std::ios::binary);
            if (!out_[i]) throw IoError("cannot write " + paths.log(kinds[i]).string());
            const auto& cols = header_columns(kinds[i]);
            for (std::size_t c = 0; c < cols.size(); ++c) out_[i] << (c ? "," : "") << cols[c];
            out_[i] << '\n';
        }
    }

    void flush_day(Date day, std::vector<PendingEvent>& events) {
        std::sort(events.begin(), events.end(), [](const PendingEvent& a, const PendingEvent& b) {
            return a.seconds != b.seconds ? a.seconds < b.seconds : a.seq < b.seq;
        });
        static constexpr char kPrefix[] = {'L', 'D', 'H', 'F'};
        for (const auto& e : events) {
            const auto idx = static_cast<std::size_t>(e.file);
            const Timestamp ts{day, static_cast<int>(e.seconds / 3600), static_cast<int>(e.seconds / 60 % 60),
                               static_cast<int>(e.seconds % 60)};
            char id[24];
            std::snprintf(id, sizeof id, "{%c%09zu}", kPrefix[idx], ++counts_[idx]);
            out_[idx] << id << ',' << ts.format() << ',' << e.user << ',' << e.pc << ','
                      << csv_escape(e.last_field) << '\n';
        }
        events.clear();
    }

    std::size_t count(LogFile f) const { return counts_[static_cast<std::size_t>(f)]; }

private:
    std::array<std::ofstream, 4> out_;
    std::array<std::size_t, 4> counts_{};
};

class DaySimulator {
public:
    DaySimulator(const GenConfig& cfg, Rng& rng) : cfg_(cfg), rng_(rng) {}

    void benign_day(const Employee& e, std::vector<PendingEvent>& out) {
        const double logon = rng_.normal(e.logon_mean, cfg_.logon_jitter_minutes);
        const std::int64_t on = clamp_seconds(logon);
        const std::int64_t off = std::min<std::int64_t>(on + rng_.between(7 * 3600, 9 * 3600 + 1800), 86399);
        push(out, on, LogFile::Logon, e, "Logon");
        push(out, off, LogFile::Logon, e, "Logoff");
        if (e.device_user && rng_.bernoulli(e.device_rate)) {
            const auto sessions = rng_.between(1, 3);
            for (std::int64_t i = 0; i < sessions; ++i) device_session(e, on, off, out);
        }
        const auto browsing = rng_.between(cfg_.http_min_per_day, cfg_.http_max_per_day);
        for (std::int64_t i = 0; i < browsing; ++i) {
            std::string url = std::string(kDomains[rng_.below(kDomains.size())]);
            url += "/page" + std::to_string(rng_.below(1000));
            push(out, rng_.between(on, off), LogFile::Http, e, std::move(url));
        }
        if (rng_.bernoulli(0.5)) file_access(e, on, off, rng_.between(1, 2), out);
    }

    // After-hours session with a removable drive and an upload. Returns the
    // session bounds so the answers file can record the window.
    std::pair<std::int64_t, std::int64_t> attack_day(const Employee& e, std::vector<PendingEvent>& out) {
        const double earliest = attack_earliest_minute(cfg_);
        const double latest = std::min(earliest + 120.0, 23.0 * 60.0);
        const std::int64_t on = clamp_seconds(rng_.uniform(earliest, latest));
        const std::int64_t off = std::min<std::int64_t>(on + rng_.between(30 * 60, 50 * 60), 86399);
        push(out, on, LogFile::Logon, e, "Logon");
        push(out, off, LogFile::Logon, e, "Logoff");
        device_session(e, on + 60, off, out);
        push(out, rng_.between(on + 60, off), LogFile::Http, e, std::string(kUploadUrl));
        file_access(e, on, off, rng_.between(1, 3), out);
        return {on, off};
    }

    static double attack_earliest_minute(const GenConfig& cfg) {
        return cfg.work_end_hour * 60.0 + std::max(60.0, 3.0 * cfg.logon_jitter_minutes + 1.0);
    }

private:
    void push(std::vector<PendingEvent>& out, std::int64_t sec, LogFile f, const Employee& e, std::string last) {
        out.push_back({sec, seq_++, f, e.id, e.pc, std::move(last)});
    }

    void device_session(const Employee& e, std::int64_t on, std::int64_t off, std::vector<PendingEvent>& out) {
        const std::int64_t connect = rng_.between(on, off);
        const std::int64_t disconnect = std::min<std::int64_t>(connect + rng_.between(300, 5400), 86399);
        push(out, connect, LogFile::Device, e, "Connect");
        push(out, disconnect, LogFile::Device, e, "Disconnect");
    }

    void file_access(const Employee& e, std::int64_t on, std::int64_t off, std::int64_t n,
                     std::vector<PendingEvent>& out) {
        static constexpr std::array<std::string_view, 4> kExt{".doc", ".pdf", ".txt", ".jpg"};
        for (std::int64_t i = 0; i < n; ++i) {
            char name[24];
            std::snprintf(name, sizeof name, "%c%c%c%04d", static_cast<char>('A' + rng_.below(26)),
                          static_cast<char>('A' + rng_.below(26)), static_cast<char>('A' + rng_.below(26)),
                          static_cast<int>(rng_.below(10000)));
            push(out, rng_.between(on, off), LogFile::File, e, std::string(name) + std::string(kExt[rng_.below(4)]));
        }
    }

    const GenConfig& cfg_;
    Rng& rng_;
    std::uint64_t seq_ = 0;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

}  // namespace

void GenConfig::validate() const {
    if (n_users < 1) throw ConfigError("n_users must be at least 1");
    if (n_insiders < 0 || n_insiders > n_users) throw ConfigError("n_insiders must lie in [0, n_users]");
    if (!(fraction_device_users > 0.0 && fraction_device_users <= 1.0)) {
        throw ConfigError("fraction_device_users must lie in (0, 1]");
    }
    if (!start_date.ok() || !end_date.ok() ||
        std::chrono::sys_days{start_date} >= std::chrono::sys_days{end_date}) {
        throw ConfigError("start_date must precede end_date");
    }
    if (work_start_hour < 0 || work_end_hour > 24 || work_start_hour >= work_end_hour) {
        throw ConfigError("work hours must satisfy 0 <= start < end <= 24");
    }
    if (!(logon_jitter_minutes > 0.0)) throw ConfigError("logon_jitter_minutes must be positive");
    if (DaySimulator::attack_earliest_minute(*this) > 23.0 * 60.0) {
        throw ConfigError("work_end_hour and logon_jitter_minutes leave no room for an after-hours logon");
    }
    if (!(attrition_rate >= 0.0 && attrition_rate < 1.0)) throw ConfigError("attrition_rate must lie in [0, 1)");
    if (attack_days < 1 || attack_days > 5) throw ConfigError("attack_days must lie in [1, 5]");
    if (http_min_per_day < 0 || http_max_per_day < http_min_per_day) {
        throw ConfigError("http per-day bounds must satisfy 0 <= min <= max");
    }
}

nlohmann::json GenConfig::to_json() const {
    return {{"seed", seed},
            {"n_users", n_users},
            {"start_date", format_iso_date(start_date)},
            {"end_date", format_iso_date(end_date)},
            {"n_insiders", n_insiders},
            {"fraction_device_users", fraction_device_users},
            {"work_hours", {work_start_hour, work_end_hour}},
            {"logon_jitter_minutes", logon_jitter_minutes},
            {"attrition_rate", attrition_rate},
            {"attack_days", attack_days},
            {"http_per_day", {http_min_per_day, http_max_per_day}}};
}

GenConfig GenConfig::from_json(const nlohmann::json& j) {
    GenConfig c;
    c.seed = j.value("seed", c.seed);
    c.n_users = j.value("n_users", c.n_users);
    if (j.contains("start_date")) {
        const auto d = parse_iso_date(j.at("start_date").get<std::string>());
        if (!d) throw ConfigError("bad start_date");
        c.start_date = *d;
    }
    if (j.contains("end_date")) {
        const auto d = parse_iso_date(j.at("end_date").get<std::string>());
        if (!d) throw ConfigError("bad end_date");
        c.end_date = *d;
    }
    c.n_insiders = j.value("n_insiders", c.n_insiders);
    c.fraction_device_users = j.value("fraction_device_users", c.fraction_device_users);
    if (j.contains("work_hours")) {
        c.work_start_hour = j.at("work_hours").at(0).get<int>();
        c.work_end_hour = j.at("work_hours").at(1).get<int>();
    }
    c.logon_jitter_minutes = j.value("logon_jitter_minutes", c.logon_jitter_minutes);
    c.attrition_rate = j.value("attrition_rate", c.attrition_rate);
    c.attack_days = j.value("attack_days", c.attack_days);
    if (j.contains("http_per_day")) {
        c.http_min_per_day = j.at("http_per_day").at(0).get<int>();
        c.http_max_per_day = j.at("http_per_day").at(1).get<int>();
    }
    return c;
}

nlohmann::json GenSummary::to_json() const {
    nlohmann::json windows_json = nlohmann::json::array();
    for (const auto& w : windows) {
        windows_json.push_back({{"user", w.user_id}, {"start", w.start.format()}, {"end", w.end.format()}});
    }
    return {{"rows", rows_per_file},
            {"insiders", insiders},
            {"device_users", device_users},
            {"attack_windows", windows_json}};
}

GenSummary generate(const GenConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir / "LDAP");
    Rng rng(cfg.seed);

    const std::vector<YearMonth> months = months_between(cfg.start_date, cfg.end_date);
    const std::size_t n = static_cast<std::size_t>(cfg.n_users);

    std::vector<Employee> staff(n);
    std::unordered_set<std::string> taken;
    for (auto& e : staff) {
        const std::string first{kFirstNames[rng.below(kFirstNames.size())]};
        const std::string last{kLastNames[rng.below(kLastNames.size())]};
        e.name = first + " " + last;
        e.id = make_user_id(rng, first, last, taken);
        e.email = first + "." + last + "." + e.id + "@dtaa.com";
        e.role = std::string(kRoles[rng.below(kRoles.size())]);
        char pc[16];
        std::snprintf(pc, sizeof pc, "PC-%04d", static_cast<int>(rng.below(10000)));
        e.pc = pc;
        for (auto& s : e.psych) s = static_cast<int>(std::clamp(std::lround(rng.normal(50.0, 15.0)), 1L, 100L));
        e.logon_mean = rng.uniform(cfg.work_start_hour * 60.0, cfg.work_end_hour * 60.0);
        e.device_rate = rng.uniform(0.2, 0.9);
        e.last_month = next_month(months.back());  // still employed after the range
        e.last_active_day = cfg.end_date;
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    const auto n_device = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::llround(cfg.fraction_device_users * static_cast<double>(n))));
    for (std::size_t i = 0; i < n_device; ++i) staff[order[i]].device_user = true;
    const std::size_t eligible = n - n_device;
    if (static_cast<std::size_t>(cfg.n_insiders) > eligible) {
        throw ConfigError("n_insiders (" + std::to_string(cfg.n_insiders) + ") exceeds the " +
                          std::to_string(eligible) + " users without device usage");
    }

    // Insiders come from the device-free users; the slice after the device
    // users in `order` is already a uniform random permutation of them.
    std::vector<std::size_t> insider_idx(order.begin() + static_cast<std::ptrdiff_t>(n_device),
                                         order.begin() + static_cast<std::ptrdiff_t>(n_device + cfg.n_insiders));
    std::sort(insider_idx.begin(), insider_idx.end());
    for (std::size_t idx : insider_idx) {
        Employee& e = staff[idx];
        std::vector<YearMonth> candidates;
        for (auto m : months) {
            if (!attack_starts(m, cfg.start_date, cfg.end_date, cfg.attack_days).empty()) candidates.push_back(m);
        }
        if (candidates.empty()) throw ConfigError("date range has no room for an attack window");
        const YearMonth m = candidates[rng.below(candidates.size())];
        const auto starts = attack_starts(m, cfg.start_date, cfg.end_date, cfg.attack_days);
        e.insider = true;
        e.attack_first = starts[rng.below(starts.size())];
        e.attack_last = add_days(e.attack_first, cfg.attack_days - 1);
        e.last_month = m;
        e.last_active_day = e.attack_last;
    }

    for (auto& e : staff) {
        if (e.insider) continue;
        for (auto m : months) {
            if (rng.bernoulli(cfg.attrition_rate)) {
                e.last_month = m;
                e.last_active_day = std::min(last_day_of(m), cfg.end_date);
                break;
            }
        }
    }

    GenSummary summary;
    summary.device_users = n_device;
    std::unordered_map<std::string, std::size_t> window_of;
    for (std::size_t idx : insider_idx) {
        const Employee& e = staff[idx];
        summary.insiders.push_back(e.id);
        window_of[e.id] = summary.windows.size();
        summary.windows.push_back({e.id, e.attack_first, e.attack_last, {}, {}});
    }

    CorpusWriter writer(out_dir);
    DaySimulator sim(cfg, rng);
    std::vector<PendingEvent> day_events;
    for (Date day = cfg.start_date; std::chrono::sys_days{day} <= std::chrono::sys_days{cfg.end_date};
         day = add_days(day, 1)) {
        if (!is_weekday(day)) continue;
        const auto today = std::chrono::sys_days{day};
        for (const auto& e : staff) {
            if (today > std::chrono::sys_days{e.last_active_day}) continue;
            if (e.insider && today >= std::chrono::sys_days{e.attack_first}) {
                const auto [on, off] = sim.attack_day(e, day_events);
                auto& w = summary.windows[window_of.at(e.id)];
                if (today == std::chrono::sys_days{e.attack_first}) {
                    w.start = Timestamp{std::chrono::sys_seconds{today} + std::chrono::seconds{on}};
                }
                w.end = Timestamp{std::chrono::sys_seconds{today} + std::chrono::seconds{off}};
            } else {
                sim.benign_day(e, day_events);
            }
        }
        writer.flush_day(day, day_events);
    }
    summary.rows_per_file["logon.csv"] = writer.count(LogFile::Logon);
    summary.rows_per_file["device.csv"] = writer.count(LogFile::Device);
    summary.rows_per_file["http.csv"] = writer.count(LogFile::Http);
    summary.rows_per_file["file.csv"] = writer.count(LogFile::File);

    // Rosters run one month past the log range so the last month's
    // "employed next month" flag is defined.
    std::vector<YearMonth> roster_months = months;
    roster_months.push_back(next_month(months.back()));
    for (auto m : roster_months) {
        std::string text{kEmployeeHeader};
        text += '\n';
        std::size_t rows = 0;
        for (const auto& e : staff) {
            if (m > e.last_month) continue;
            text += e.name + "," + e.id + "," + e.email + "," + e.role + "\n";
            ++rows;
        }
        const std::string name = format_year_month(m) + ".csv";
        write_text(out_dir / "LDAP" / name, text);
        summary.rows_per_file["LDAP/" + name] = rows;
    }

    {
        std::string text{kPsychometricHeader};
        text += '\n';
        for (const auto& e : staff) {
            text += e.name + "," + e.id;
            for (int s : e.psych) text += "," + std::to_string(s);
            text += '\n';
        }
        write_text(out_dir / "psychometric.csv", text);
        summary.rows_per_file["psychometric.csv"] = staff.size();
    }

    {
        std::string text{kAnswersHeader};
        text += '\n';
        for (const auto& w : summary.windows) {
            text += "1," + w.user_id + "," + w.start.format() + "," + w.end.format() + "\n";
        }
        write_text(out_dir / "answers.csv", text);
        summary.rows_per_file["answers.csv"] = summary.windows.size();
    }

    write_text(out_dir / "config.json", cfg.to_json().dump(2) + "\n");
    return summary;
}

std::string_view to_string(Violation::Kind kind) {
    switch (kind) {
        case Violation::Kind::MissingFile: return "missing_file";
        case Violation::Kind::Schema: return "schema";
        case Violation::Kind::Row: return "row";
        case Violation::Kind::Referential: return "referential";
        case Violation::Kind::NonMonotone: return "non_monotone";
        case Violation::Kind::Data: return "data";
    }
    return "?";
}

std::size_t ValidationReport::count(Violation::Kind kind) const {
    return static_cast<std::size_t>(
        std::count_if(violations.begin(), violations.end(), [kind](const Violation& v) { return v.kind == kind; }));
}

nlohmann::json ValidationReport::to_json() const {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& v : violations) {
        list.push_back({{"kind", to_string(v.kind)}, {"file", v.file}, {"line", v.line}, {"message", v.message}});
    }
    return {{"ok", ok()}, {"violations", list}};
}

ValidationReport validate_corpus(const fs::path& dir) {
    ValidationReport report;
    const CorpusPaths paths{dir};
    auto add = [&](Violation::Kind kind, const fs::path& file, std::size_t line, std::string msg) {
        report.violations.push_back({kind, fs::relative(file, dir).generic_string(), line, std::move(msg)});
    };

    std::unordered_set<std::string> known_users;
    bool have_rosters = false;
    if (!fs::is_directory(paths.employee_dir())) {
        add(Violation::Kind::MissingFile, paths.employee_dir(), 0, "monthly employee records directory missing");
    } else {
        try {
            const auto months = load_employee_months(paths.employee_dir());
            for (const auto& [m, roster] : months.months()) {
                for (const auto& [user, rec] : roster) known_users.insert(user);
            }
            have_rosters = !months.empty();
            if (!have_rosters) add(Violation::Kind::MissingFile, paths.employee_dir(), 0, "no YYYY-MM.csv files");
        } catch (const SchemaError& e) {
            add(Violation::Kind::Schema, paths.employee_dir(), 0, e.what());
        } catch (const Error& e) {
            add(Violation::Kind::Data, paths.employee_dir(), 0, e.what());
        }
    }

    for (auto kind : {SourceKind::Logon, SourceKind::Device, SourceKind::Http, SourceKind::File}) {
        const fs::path path = paths.log(kind);
        if (!fs::exists(path)) {
            add(Violation::Kind::MissingFile, path, 0, "log file missing");
            continue;
        }
        try {
            LogReader reader(path, kind);
            LogEvent event;
            std::optional<Timestamp> previous;
            std::unordered_set<std::string> orphans;
            while (reader.next(event)) {
                if (previous && event.timestamp < *previous) {
                    add(Violation::Kind::NonMonotone, path, 0,
                        "timestamp " + event.timestamp.format() + " of event " + event.event_id +
                            " precedes its predecessor " + previous->format());
                }
                previous = event.timestamp;
                if (have_rosters && !known_users.count(event.user_id) && orphans.insert(event.user_id).second) {
                    add(Violation::Kind::Referential, path, 0,
                        "user " + event.user_id + " (event " + event.event_id + ") is in no monthly record");
                }
            }
            for (const auto& err : reader.stats().sample_errors) add(Violation::Kind::Row, path, err.line, err.message);
            const auto unlisted = reader.stats().row_errors - reader.stats().sample_errors.size();
            if (unlisted > 0) {
                add(Violation::Kind::Row, path, 0, std::to_string(unlisted) + " further malformed rows");
            }
        } catch (const SchemaError& e) {
            add(Violation::Kind::Schema, path, 1, e.what());
        }
    }

    auto check_table = [&](const fs::path& path, auto loader) {
        if (!fs::exists(path)) {
            add(Violation::Kind::MissingFile, path, 0, "file missing");
            return;
        }
        try {
            loader(path);
        } catch (const SchemaError& e) {
            add(Violation::Kind::Schema, path, 1, e.what());
        } catch (const Error& e) {
            add(Violation::Kind::Data, path, 0, e.what());
        }
    };
    check_table(paths.psychometrics(), [](const fs::path& p) { load_psychometrics(p); });
    check_table(paths.answers(), [](const fs::path& p) { load_answers(p); });
    return report;
}

}  // namespace sentinel
