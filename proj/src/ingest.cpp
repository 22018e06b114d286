#include "sentinel/ingest.hpp"

#include <charconv>
#include <set>

#include "sentinel/error.hpp"

namespace sentinel {

namespace {

std::vector<std::string_view> split_header(std::string_view header) {
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
        const auto comma = header.find(',', start);
        cols.push_back(header.substr(start, comma - start));
        if (comma == std::string_view::npos) return cols;
        start = comma + 1;
    }
}

bool parse_int(std::string_view s, int& out) {
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

}  // namespace

std::string_view to_string(SourceKind kind) {
    switch (kind) {
        case SourceKind::Logon: return "logon";
        case SourceKind::Device: return "device";
        case SourceKind::Http: return "http";
        case SourceKind::File: return "file";
    }
    return "?";
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Logon: return "Logon";
        case EventKind::Logoff: return "Logoff";
        case EventKind::DeviceConnect: return "Connect";
        case EventKind::DeviceDisconnect: return "Disconnect";
        case EventKind::Http: return "Http";
        case EventKind::FileAccess: return "FileAccess";
    }
    return "?";
}

std::optional<SourceKind> source_kind_from_string(std::string_view name) {
    for (auto k : {SourceKind::Logon, SourceKind::Device, SourceKind::Http, SourceKind::File}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

std::string_view file_name(SourceKind kind) {
    switch (kind) {
        case SourceKind::Logon: return "logon.csv";
        case SourceKind::Device: return "device.csv";
        case SourceKind::Http: return "http.csv";
        case SourceKind::File: return "file.csv";
    }
    return "";
}

const std::vector<std::string_view>& header_columns(SourceKind kind) {
    static const std::vector<std::string_view> logon{"id", "date", "user", "pc", "activity"};
    static const std::vector<std::string_view> http{"id", "date", "user", "pc", "url"};
    static const std::vector<std::string_view> file{"id", "date", "user", "pc", "filename"};
    switch (kind) {
        case SourceKind::Logon:
        case SourceKind::Device: return logon;
        case SourceKind::Http: return http;
        case SourceKind::File: return file;
    }
    return logon;
}

std::string to_csv_row(const LogEvent& e) {
    std::string row;
    row.reserve(64);
    row += csv_escape(e.event_id);
    row += ',';
    row += e.timestamp.format();
    row += ',';
    row += csv_escape(e.user_id);
    row += ',';
    row += csv_escape(e.pc_id);
    row += ',';
    switch (e.kind) {
        case EventKind::Http:
        case EventKind::FileAccess: row += csv_escape(e.detail.value_or("")); break;
        default: row += to_string(e.kind); break;
    }
    return row;
}

LogReader::LogReader(const std::filesystem::path& path, SourceKind kind, bool strict)
    : csv_(path, header_columns(kind)), kind_(kind), strict_(strict) {}

bool LogReader::decode(LogEvent& out, std::string& error) const {
    const auto& f = csv_.fields();
    if (f.size() != 5) {
        error = "expected 5 fields, found " + std::to_string(f.size());
        return false;
    }
    const auto ts = Timestamp::parse(f[1]);
    if (!ts) {
        error = "unparseable timestamp '" + std::string(f[1]) + "'";
        return false;
    }
    switch (kind_) {
        case SourceKind::Logon:
            if (f[4] == "Logon") {
                out.kind = EventKind::Logon;
            } else if (f[4] == "Logoff") {
                out.kind = EventKind::Logoff;
            } else {
                error = "unknown logon activity '" + std::string(f[4]) + "'";
                return false;
            }
            out.detail.reset();
            break;
        case SourceKind::Device:
            if (f[4] == "Connect") {
                out.kind = EventKind::DeviceConnect;
            } else if (f[4] == "Disconnect") {
                out.kind = EventKind::DeviceDisconnect;
            } else {
                error = "unknown device activity '" + std::string(f[4]) + "'";
                return false;
            }
            out.detail.reset();
            break;
        case SourceKind::Http:
        case SourceKind::File:
            out.kind = kind_ == SourceKind::Http ? EventKind::Http : EventKind::FileAccess;
            if (!out.detail) out.detail.emplace();
            out.detail->assign(f[4]);
            break;
    }
    out.event_id.assign(f[0]);
    out.timestamp = *ts;
    out.user_id.assign(f[2]);
    out.pc_id.assign(f[3]);
    return true;
}

bool LogReader::next(LogEvent& out) {
    std::string error;
    while (csv_.next()) {
        ++stats_.rows;
        if (decode(out, error)) {
            ++stats_.events;
            return true;
        }
        ++stats_.row_errors;
        if (strict_) {
            throw DataError(csv_.path().string() + ":" + std::to_string(csv_.line_number()) + ": " + error);
        }
        if (stats_.sample_errors.size() < ParseStats::kMaxSampleErrors) {
            stats_.sample_errors.push_back({csv_.line_number(), error});
        }
    }
    return false;
}

bool EmployeeMonths::employed(std::string_view user, YearMonth month) const {
    return find(user, month) != nullptr;
}

const EmployeeRecord* EmployeeMonths::find(std::string_view user, YearMonth month) const {
    const auto it = months_.find(month);
    if (it == months_.end()) return nullptr;
    const auto rec = it->second.find(std::string(user));
    return rec == it->second.end() ? nullptr : &rec->second;
}

EmployeeMonths load_employee_months(const std::filesystem::path& dir) {
    EmployeeMonths result;
    if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    const auto header = split_header(kEmployeeHeader);
    std::set<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv") files.insert(entry.path());
    }
    for (const auto& path : files) {
        const auto month = parse_year_month(path.stem().string());
        if (!month) continue;
        EmployeeMonths::Roster roster;
        CsvReader csv(path, header);
        while (csv.next()) {
            const auto& f = csv.fields();
            if (f.size() != 4) {
                throw DataError(path.string() + ":" + std::to_string(csv.line_number()) + ": expected 4 fields");
            }
            EmployeeRecord rec{std::string(f[0]), std::string(f[1]), std::string(f[2]), std::string(f[3]), *month};
            const std::string key = rec.user_id;
            if (!roster.emplace(key, std::move(rec)).second) {
                throw DataError(path.string() + ":" + std::to_string(csv.line_number()) + ": duplicate user '" +
                                key + "' in month " + format_year_month(*month));
            }
        }
        result.add_month(*month, std::move(roster));
    }
    return result;
}

std::vector<PsychometricProfile> load_psychometrics(const std::filesystem::path& path) {
    std::vector<PsychometricProfile> out;
    CsvReader csv(path, split_header(kPsychometricHeader));
    std::set<std::string> seen;
    while (csv.next()) {
        const auto& f = csv.fields();
        const std::string where = path.string() + ":" + std::to_string(csv.line_number());
        if (f.size() != 7) throw DataError(where + ": expected 7 fields");
        PsychometricProfile p{std::string(f[0]), std::string(f[1]), {}};
        for (std::size_t i = 0; i < 5; ++i) {
            int v = 0;
            if (!parse_int(f[2 + i], v)) throw DataError(where + ": non-integer score for user " + p.user_id);
            if (v < 1 || v > 100) {
                throw DataError(where + ": score " + std::to_string(v) + " outside [1,100] for user " + p.user_id);
            }
            p.scores[i] = v;
        }
        if (!seen.insert(p.user_id).second) throw DataError(where + ": duplicate profile for user " + p.user_id);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<ThreatAnswer> load_answers(const std::filesystem::path& path) {
    std::vector<ThreatAnswer> out;
    CsvReader csv(path, split_header(kAnswersHeader));
    while (csv.next()) {
        const auto& f = csv.fields();
        const std::string where = path.string() + ":" + std::to_string(csv.line_number());
        if (f.size() != 4) throw DataError(where + ": expected 4 fields");
        ThreatAnswer a;
        if (!parse_int(f[0], a.scenario) || a.scenario < 1 || a.scenario > 3) {
            throw DataError(where + ": scenario must be 1, 2 or 3");
        }
        a.user_id.assign(f[1]);
        const auto start = Timestamp::parse(f[2]);
        const auto end = Timestamp::parse(f[3]);
        if (!start || !end) throw DataError(where + ": unparseable timestamp");
        if (*end < *start) throw DataError(where + ": window ends before it starts");
        a.start = *start;
        a.end = *end;
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace sentinel
