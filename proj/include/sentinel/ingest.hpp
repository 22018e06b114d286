#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sentinel/calendar.hpp"
#include "sentinel/csv.hpp"

namespace sentinel {

// Which log file a row came from. Together with the activity column it
// fixes the event kind.
enum class SourceKind { Logon, Device, Http, File };

enum class EventKind { Logon, Logoff, DeviceConnect, DeviceDisconnect, Http, FileAccess };

std::string_view to_string(SourceKind kind);
std::string_view to_string(EventKind kind);
std::optional<SourceKind> source_kind_from_string(std::string_view name);

// Canonical file name inside a corpus directory, e.g. "logon.csv".
std::string_view file_name(SourceKind kind);
const std::vector<std::string_view>& header_columns(SourceKind kind);

struct LogEvent {
    std::string event_id;
    Timestamp timestamp;
    std::string user_id;
    std::string pc_id;
    EventKind kind = EventKind::Logon;
    // URL for Http, filename for FileAccess; empty otherwise.
    std::optional<std::string> detail;
};

// Inverse of parsing: reproduces the source row for well-formed input.
std::string to_csv_row(const LogEvent& event);

struct RowError {
    std::size_t line = 0;
    std::string message;
};

struct ParseStats {
    std::size_t rows = 0;
    std::size_t events = 0;
    std::size_t row_errors = 0;
    // The first few row errors, kept for reporting. Capped so that a noisy
    // file cannot grow memory.
    std::vector<RowError> sample_errors;
    static constexpr std::size_t kMaxSampleErrors = 32;
};

// Streams LogEvents out of one CERT-style log file in file order.
// Malformed rows are skipped and counted unless `strict` is set, in which
// case the first one throws DataError with its line number.
class LogReader {
public:
    LogReader(const std::filesystem::path& path, SourceKind kind, bool strict = false);

    // Overwrites `out` with the next event, reusing its string buffers.
    bool next(LogEvent& out);

    const ParseStats& stats() const { return stats_; }
    SourceKind kind() const { return kind_; }

private:
    bool decode(LogEvent& out, std::string& error) const;

    CsvReader csv_;
    SourceKind kind_;
    bool strict_;
    ParseStats stats_;
};

// Convenience wrapper for callers that just want every event.
template <typename Fn>
ParseStats for_each_event(const std::filesystem::path& path, SourceKind kind, Fn&& fn, bool strict = false) {
    LogReader reader(path, kind, strict);
    LogEvent event;
    while (reader.next(event)) fn(static_cast<const LogEvent&>(event));
    return reader.stats();
}

struct EmployeeRecord {
    std::string employee_name;
    std::string user_id;
    std::string email;
    std::string role;
    YearMonth month;
};

// Monthly employee rosters keyed by month, one set of users per month.
class EmployeeMonths {
public:
    using Roster = std::unordered_map<std::string, EmployeeRecord>;

    void add_month(YearMonth month, Roster roster) { months_[month] = std::move(roster); }

    bool has_month(YearMonth month) const { return months_.count(month) != 0; }
    bool employed(std::string_view user, YearMonth month) const;
    const EmployeeRecord* find(std::string_view user, YearMonth month) const;
    const std::map<YearMonth, Roster>& months() const { return months_; }
    bool empty() const { return months_.empty(); }

private:
    std::map<YearMonth, Roster> months_;
};

inline constexpr std::string_view kEmployeeHeader = "employee_name,user_id,email,role";

// Loads every YYYY-MM.csv in `dir`. Other file names are ignored.
EmployeeMonths load_employee_months(const std::filesystem::path& dir);

struct PsychometricProfile {
    std::string employee_name;
    std::string user_id;
    std::array<int, 5> scores{};  // O, C, E, A, N; each in [1, 100]
};

inline constexpr std::string_view kPsychometricHeader = "employee_name,user_id,O,C,E,A,N";

std::vector<PsychometricProfile> load_psychometrics(const std::filesystem::path& path);

struct ThreatAnswer {
    int scenario = 1;
    std::string user_id;
    Timestamp start;
    Timestamp end;
};

inline constexpr std::string_view kAnswersHeader = "scenario,user_id,start,end";

std::vector<ThreatAnswer> load_answers(const std::filesystem::path& path);

// Corpus directory layout shared by the generator, validator and feature
// builder.
struct CorpusPaths {
    std::filesystem::path root;

    std::filesystem::path log(SourceKind kind) const { return root / file_name(kind); }
    std::filesystem::path employee_dir() const { return root / "LDAP"; }
    std::filesystem::path psychometrics() const { return root / "psychometric.csv"; }
    std::filesystem::path answers() const { return root / "answers.csv"; }
    std::filesystem::path config() const { return root / "config.json"; }
};

}  // namespace sentinel
