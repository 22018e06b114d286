#include "sentinel/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "sentinel/error.hpp"
#include "sentinel/hash.hpp"
#include "sentinel/random.hpp"

namespace sentinel {

namespace fs = std::filesystem;

double device_probability(std::uint64_t user_connects, std::uint64_t total_connects) {
    if (total_connects == 0) throw DegenerateError("device probability undefined: no device connect events");
    if (user_connects > total_connects) throw DataError("user connects exceed total connects");
    return static_cast<double>(user_connects) / static_cast<double>(total_connects);
}

double logon_zscore(double logon_minutes, double mean, double stddev, std::uint64_t n) {
    if (n == 0) throw DegenerateError("logon z-score needs at least one logon");
    if (!(stddev > 0.0)) throw DegenerateError("logon z-score undefined for zero standard deviation");
    return (logon_minutes - mean) / (stddev / std::sqrt(static_cast<double>(n)));
}

double zscore_to_probability(double z) {
    // 2 * (1 - Phi(|z|)) == erfc(|z| / sqrt(2))
    return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

void LogonAccumulator::add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
}

void LogonAccumulator::merge(const LogonAccumulator& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double delta = o.mean_ - mean_;
    const double n = na + nb;
    mean_ += delta * nb / n;
    m2_ += o.m2_ + delta * delta * na * nb / n;
    n_ += o.n_;
}

double LogonAccumulator::stddev() const {
    if (n_ < 2) return 0.0;
    return std::sqrt(std::max(0.0, m2_ / static_cast<double>(n_)));
}

double logon_probability(double logon_minutes, const UserStats& s) {
    if (s.logon_stddev > 0.0) {
        return zscore_to_probability(logon_zscore(logon_minutes, s.logon_mean, s.logon_stddev, s.logon_count));
    }
    return logon_minutes == s.logon_mean ? 1.0 : 0.0;
}

ClusterResult cluster_psychometrics(const std::vector<PsychometricProfile>& profiles, int k, std::uint64_t seed,
                                    int max_iterations) {
    using Point = std::array<double, 5>;
    if (k < 1) throw ConfigError("k must be at least 1");
    std::vector<Point> points;
    points.reserve(profiles.size());
    for (const auto& p : profiles) {
        Point x;
        for (std::size_t d = 0; d < 5; ++d) x[d] = p.scores[d];
        points.push_back(x);
    }
    std::vector<Point> distinct;
    {
        std::set<Point> seen;
        for (const auto& x : points) {
            if (seen.insert(x).second) distinct.push_back(x);
        }
    }
    if (static_cast<std::size_t>(k) > distinct.size()) {
        throw ConfigError("k = " + std::to_string(k) + " exceeds the " + std::to_string(distinct.size()) +
                          " distinct psychometric profiles");
    }

    Rng rng(seed);
    rng.shuffle(distinct);
    ClusterResult result;
    result.centroids.assign(distinct.begin(), distinct.begin() + k);

    auto dist2 = [](const Point& a, const Point& b) {
        double s = 0.0;
        for (std::size_t d = 0; d < 5; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
        return s;
    };

    std::vector<int> assign(points.size(), -1);
    for (int iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < points.size(); ++i) {
            int best = 0;
            double best_d = dist2(points[i], result.centroids[0]);
            for (int c = 1; c < k; ++c) {
                const double d = dist2(points[i], result.centroids[static_cast<std::size_t>(c)]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        result.iterations = iter + 1;
        if (!changed) {
            result.converged = true;
            break;
        }

        std::vector<Point> sums(static_cast<std::size_t>(k), Point{});
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto c = static_cast<std::size_t>(assign[i]);
            for (std::size_t d = 0; d < 5; ++d) sums[c][d] += points[i][d];
            ++counts[c];
        }
        for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
            if (counts[c] > 0) {
                for (std::size_t d = 0; d < 5; ++d) result.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
                continue;
            }
            // Empty cluster: restart it on the point worst served by its centroid.
            std::size_t far = 0;
            double far_d = -1.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                const double d = dist2(points[i], result.centroids[static_cast<std::size_t>(assign[i])]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            result.centroids[c] = points[far];
        }
    }

    for (std::size_t i = 0; i < profiles.size(); ++i) result.cluster_of[profiles[i].user_id] = assign[i];
    return result;
}

std::size_t Dataset::positives() const {
    return static_cast<std::size_t>(
        std::count_if(instances.begin(), instances.end(), [](const DailyInstance& d) { return d.label; }));
}

namespace {

struct DayActivity {
    double earliest_logon = std::numeric_limits<double>::infinity();
    bool connected = false;
};

std::string corpus_id(const fs::path& corpus) {
    const CorpusPaths paths{corpus};
    if (fs::exists(paths.config())) return "sha256:" + sha256_file(paths.config());
    return fs::absolute(corpus).lexically_normal().filename().string();
}

bool in_month(const Timestamp& t, YearMonth month) { return year_month_of(t.date()) == month; }

}  // namespace

Dataset build_instances(const fs::path& corpus, const BuildOptions& opt) {
    const CorpusPaths paths{corpus};
    const YearMonth month = opt.month;

    const EmployeeMonths rosters = load_employee_months(paths.employee_dir());
    if (!rosters.has_month(month)) {
        throw RangeError("month " + format_year_month(month) + " has no employee record in the corpus");
    }
    if (!rosters.has_month(next_month(month))) {
        throw RangeError("month " + format_year_month(next_month(month)) +
                         " has no employee record, so employment next month is unknown");
    }
    const auto profiles = load_psychometrics(paths.psychometrics());
    const ClusterResult clusters = cluster_psychometrics(profiles, opt.k_clusters, opt.seed);
    const auto answers = load_answers(paths.answers());

    std::unordered_map<std::string, std::vector<std::pair<std::chrono::sys_days, std::chrono::sys_days>>> windows;
    for (const auto& a : answers) {
        if (a.scenario != 1) continue;
        windows[a.user_id].emplace_back(std::chrono::sys_days{a.start.date()}, std::chrono::sys_days{a.end.date()});
    }

    // Pass 1: whole-corpus statistics.
    std::unordered_map<std::string, UserStats> stats;
    std::uint64_t total_connects = 0;
    std::size_t row_errors = 0;
    row_errors += for_each_event(
                      paths.log(SourceKind::Device), SourceKind::Device,
                      [&](const LogEvent& e) {
                          if (e.kind != EventKind::DeviceConnect) return;
                          ++stats[e.user_id].device_connects;
                          ++total_connects;
                      },
                      opt.strict)
                      .row_errors;
    std::unordered_map<std::string, LogonAccumulator> logons;
    row_errors += for_each_event(
                      paths.log(SourceKind::Logon), SourceKind::Logon,
                      [&](const LogEvent& e) {
                          if (e.kind == EventKind::Logon) logons[e.user_id].add(e.timestamp.minutes_of_day());
                      },
                      opt.strict)
                      .row_errors;
    if (total_connects == 0) throw DegenerateError("corpus has no device connect events");

    std::unordered_map<std::string, std::map<std::chrono::sys_days, DayActivity>> activity;
    for (auto& [user, s] : stats) {
        if (s.device_connects == 0) continue;
        s.user_id = user;
        if (const auto it = logons.find(user); it != logons.end()) {
            s.logon_mean = it->second.mean();
            s.logon_stddev = it->second.stddev();
            s.logon_count = it->second.count();
        }
        const auto c = clusters.cluster_of.find(user);
        if (c == clusters.cluster_of.end()) throw DataError("no psychometric profile for device user " + user);
        s.psych_cluster = c->second;
        activity[user];
    }

    // Pass 2: per-day activity of retained users inside the month.
    for_each_event(
        paths.log(SourceKind::Logon), SourceKind::Logon,
        [&](const LogEvent& e) {
            if (e.kind != EventKind::Logon || !in_month(e.timestamp, month)) return;
            const auto it = activity.find(e.user_id);
            if (it == activity.end()) return;
            auto& day = it->second[std::chrono::sys_days{e.timestamp.date()}];
            day.earliest_logon = std::min(day.earliest_logon, e.timestamp.minutes_of_day());
        },
        opt.strict);
    for_each_event(
        paths.log(SourceKind::Device), SourceKind::Device,
        [&](const LogEvent& e) {
            if (e.kind != EventKind::DeviceConnect || !in_month(e.timestamp, month)) return;
            const auto it = activity.find(e.user_id);
            if (it == activity.end()) return;
            it->second[std::chrono::sys_days{e.timestamp.date()}].connected = true;
        },
        opt.strict);

    std::vector<std::string> users;
    users.reserve(activity.size());
    for (const auto& [user, days] : activity) users.push_back(user);
    std::sort(users.begin(), users.end());

    Dataset ds;
    ds.k_clusters = opt.k_clusters;
    for (const auto& user : users) {
        const UserStats& s = stats.at(user);
        const double p_device = device_probability(s.device_connects, total_connects);
        const auto wins = windows.find(user);
        auto covered = [&](std::chrono::sys_days d) {
            if (wins == windows.end()) return false;
            for (const auto& [a, b] : wins->second) {
                if (a <= d && d <= b) return true;
            }
            return false;
        };
        for (const auto& [day, act] : activity.at(user)) {
            if (!std::isfinite(act.earliest_logon)) continue;
            DailyInstance inst;
            inst.user_id = user;
            inst.date = Date{day};
            inst.p_logon = logon_probability(act.earliest_logon, s);
            inst.p_device = act.connected ? p_device : 0.0;
            inst.employed_this_month = rosters.employed(user, month);
            inst.employed_next_month = rosters.employed(user, next_month(month));
            inst.psych_cluster = s.psych_cluster;
            // A session that starts before 06:00 continues the previous
            // day's after-hours activity for labeling purposes.
            inst.label = covered(day) || (act.earliest_logon < 6 * 60.0 && covered(day - std::chrono::days{1}));
            ds.instances.push_back(std::move(inst));
        }
    }

    ds.provenance = {{"corpus", corpus_id(corpus)},
                     {"month", format_year_month(month)},
                     {"k", opt.k_clusters},
                     {"seed", opt.seed},
                     {"retained_users", users.size()},
                     {"total_connects", total_connects},
                     {"row_errors", row_errors},
                     {"instances", ds.instances.size()},
                     {"positives", ds.positives()}};
    return ds;
}

std::vector<std::size_t> spread_subsample_indices(const std::vector<int>& labels, double ratio, std::uint64_t seed) {
    if (!(ratio >= 1.0)) throw ConfigError("subsample ratio must be at least 1");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
    if (pos.empty()) throw DegenerateError("spread subsample needs at least one positive instance");
    const auto wanted = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(pos.size())));
    Rng rng(seed);
    rng.shuffle(neg);
    neg.resize(std::min(wanted, neg.size()));
    std::vector<std::size_t> keep = pos;
    keep.insert(keep.end(), neg.begin(), neg.end());
    std::sort(keep.begin(), keep.end());
    return keep;
}

Dataset spread_subsample(const Dataset& dataset, double ratio, std::uint64_t seed) {
    std::vector<int> labels;
    labels.reserve(dataset.instances.size());
    for (const auto& d : dataset.instances) labels.push_back(d.label ? 1 : 0);
    const auto keep = spread_subsample_indices(labels, ratio, seed);
    Dataset out;
    out.k_clusters = dataset.k_clusters;
    out.provenance = dataset.provenance;
    out.instances.reserve(keep.size());
    for (std::size_t i : keep) out.instances.push_back(dataset.instances[i]);
    out.provenance["subsample"] = {{"ratio", ratio}, {"seed", seed}, {"instances", out.instances.size()}};
    return out;
}

void write_instances_csv(const Dataset& ds, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << kInstancesHeader << '\n';
    char buf[64];
    for (const auto& d : ds.instances) {
        out << csv_escape(d.user_id) << ',' << format_iso_date(d.date);
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g", d.p_logon, d.p_device);
        out << buf << ',' << int(d.employed_this_month) << ',' << int(d.employed_next_month) << ','
            << d.psych_cluster << ',' << int(d.label) << '\n';
    }
}

namespace {

double parse_double(std::string_view s, const std::string& where) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw DataError(where + ": bad number '" + std::string(s) + "'");
    }
    return v;
}

int parse_flag(std::string_view s, const std::string& where, int max) {
    int v = -1;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v < 0 || v > max) {
        throw DataError(where + ": bad value '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

Dataset read_instances_csv(const fs::path& path, int k_clusters) {
    std::vector<std::string_view> header;
    {
        std::string_view h = kInstancesHeader;
        std::size_t start = 0;
        while (true) {
            const auto comma = h.find(',', start);
            header.push_back(h.substr(start, comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
    }
    CsvReader csv(path, header);
    Dataset ds;
    ds.k_clusters = k_clusters;
    while (csv.next()) {
        const auto& f = csv.fields();
        const std::string where = path.string() + ":" + std::to_string(csv.line_number());
        if (f.size() != 8) throw DataError(where + ": expected 8 fields");
        DailyInstance d;
        d.user_id.assign(f[0]);
        const auto date = parse_iso_date(f[1]);
        if (!date) throw DataError(where + ": bad date");
        d.date = *date;
        d.p_logon = parse_double(f[2], where);
        d.p_device = parse_double(f[3], where);
        if (d.p_logon < 0 || d.p_logon > 1 || d.p_device < 0 || d.p_device > 1) {
            throw DataError(where + ": probability outside [0,1]");
        }
        d.employed_this_month = parse_flag(f[4], where, 1) == 1;
        d.employed_next_month = parse_flag(f[5], where, 1) == 1;
        d.psych_cluster = parse_flag(f[6], where, k_clusters - 1);
        d.label = parse_flag(f[7], where, 1) == 1;
        ds.instances.push_back(std::move(d));
    }
    return ds;
}

Schema instance_schema(int k_clusters) {
    return {{"p_logon", 0},
            {"p_device", 0},
            {"employed_this_month", 2},
            {"employed_next_month", 2},
            {"psych_cluster", k_clusters}};
}

Table to_table(const Dataset& ds) {
    Table t(instance_schema(ds.k_clusters));
    for (const auto& d : ds.instances) {
        const double row[] = {d.p_logon, d.p_device, d.employed_this_month ? 1.0 : 0.0,
                              d.employed_next_month ? 1.0 : 0.0, static_cast<double>(d.psych_cluster)};
        t.add_row(row, d.label ? 1 : 0);
    }
    return t;
}

}  // namespace sentinel
