#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "sentinel/calendar.hpp"

namespace sentinel {

// Knobs of the synthetic organization. The defaults give a 1000-employee,
// one-month corpus with 30 insiders and roughly a quarter of staff using
// removable devices.
struct GenConfig {
    std::uint64_t seed = 1;
    int n_users = 1000;
    Date start_date{std::chrono::year{2010}, std::chrono::July, std::chrono::day{1}};
    Date end_date{std::chrono::year{2010}, std::chrono::July, std::chrono::day{31}};  // inclusive
    int n_insiders = 30;
    double fraction_device_users = 0.27;
    int work_start_hour = 8;
    int work_end_hour = 17;
    double logon_jitter_minutes = 20.0;
    // Per-month probability that a benign employee leaves at month end.
    double attrition_rate = 0.02;
    int attack_days = 3;
    int http_min_per_day = 5;
    int http_max_per_day = 25;

    // Throws ConfigError on inconsistent settings.
    void validate() const;

    nlohmann::json to_json() const;
    static GenConfig from_json(const nlohmann::json& j);
};

struct AttackWindow {
    std::string user_id;
    Date first_day;
    Date last_day;
    Timestamp start;
    Timestamp end;
};

struct GenSummary {
    std::map<std::string, std::size_t> rows_per_file;
    std::vector<std::string> insiders;
    std::vector<AttackWindow> windows;
    std::size_t device_users = 0;

    nlohmann::json to_json() const;
};

// Writes a complete corpus (logs, monthly rosters, psychometrics, answers,
// config.json) into `out_dir`. Output is a pure function of `config`.
GenSummary generate(const GenConfig& config, const std::filesystem::path& out_dir);

struct Violation {
    enum class Kind { MissingFile, Schema, Row, Referential, NonMonotone, Data };
    Kind kind;
    std::string file;
    std::size_t line = 0;
    std::string message;
};

std::string_view to_string(Violation::Kind kind);

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    std::size_t count(Violation::Kind kind) const;
    nlohmann::json to_json() const;
};

// Report-only check of a corpus directory: file presence, headers, row
// syntax, per-file timestamp order and that every log user appears in at
// least one monthly roster.
ValidationReport validate_corpus(const std::filesystem::path& dir);

}  // namespace sentinel
