#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "sentinel/datagen.hpp"
#include "sentinel/error.hpp"
#include "sentinel/features.hpp"
#include "oracles.hpp"
#include "sentinel/random.hpp"
#include "support.hpp"

using namespace sentinel;
using namespace std::chrono;

namespace {

std::string logon_row(int id, const std::string& when, const std::string& user, const char* act = "Logon") {
    return "{L" + std::to_string(id) + "}," + when + "," + user + ",PC-1," + act + "\n";
}

// Three users (A, B, C) in July 2010; only A and C use a device.
void write_mini_corpus(const TempDir& dir, bool c_leaves) {
    write_file(dir / "LDAP/2010-07.csv",
               "employee_name,user_id,email,role\nAa,A,a@x,Dev\nBb,B,b@x,Dev\nCc,C,c@x,Dev\n");
    write_file(dir / "LDAP/2010-08.csv", std::string("employee_name,user_id,email,role\nAa,A,a@x,Dev\nBb,B,b@x,Dev\n") +
                                             (c_leaves ? "" : "Cc,C,c@x,Dev\n"));
    write_file(dir / "psychometric.csv",
               "employee_name,user_id,O,C,E,A,N\nAa,A,10,10,10,10,10\nBb,B,50,50,50,50,50\nCc,C,90,90,90,90,90\n");
    write_file(dir / "answers.csv", "scenario,user_id,start,end\n1,C,07/07/2010 22:00:00,07/08/2010 03:00:00\n");
    std::string logon = "id,date,user,pc,activity\n";
    int id = 0;
    for (int d = 1; d <= 6; ++d) {
        char day[32];
        std::snprintf(day, sizeof day, "07/%02d/2010", d);
        logon += logon_row(++id, std::string(day) + " 08:00:00", "A");
        logon += logon_row(++id, std::string(day) + " 09:00:00", "B");
        logon += logon_row(++id, std::string(day) + " 08:30:00", "C");
    }
    logon += logon_row(++id, "07/07/2010 07:50:00", "A");
    logon += logon_row(++id, "07/07/2010 12:00:00", "A");  // later logon the same day is ignored
    logon += logon_row(++id, "07/07/2010 22:00:00", "C");
    logon += logon_row(++id, "07/08/2010 02:30:00", "C");  // after-hours session spilling past midnight
    logon += logon_row(++id, "08/02/2010 08:00:00", "A");  // outside the month
    write_file(dir / "logon.csv", logon);
    write_file(dir / "device.csv",
               "id,date,user,pc,activity\n"
               "{D1},07/01/2010 10:00:00,A,PC-1,Connect\n{D2},07/01/2010 10:10:00,A,PC-1,Disconnect\n"
               "{D3},07/02/2010 10:00:00,A,PC-1,Connect\n{D4},07/02/2010 10:10:00,A,PC-1,Disconnect\n"
               "{D5},07/03/2010 10:00:00,A,PC-1,Connect\n{D6},07/03/2010 10:10:00,A,PC-1,Disconnect\n"
               "{D7},07/07/2010 22:10:00,C,PC-1,Connect\n{D8},07/07/2010 22:40:00,C,PC-1,Disconnect\n");
}

}  // namespace

TEST_CASE("device probability is U over T") {
    CHECK(device_probability(5, 100) == 0.05);
    CHECK(device_probability(0, 100) == 0.0);
    CHECK(device_probability(100, 100) == 1.0);
    CHECK_THROWS_AS(device_probability(0, 0), DegenerateError);
}

TEST_CASE("logon z-score uses the standard error") {
    CHECK(logon_zscore(540, 540, 30, 9) == 0.0);
    CHECK(logon_zscore(560, 540, 30, 9) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(logon_zscore(530, 540, 30, 9) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK_THROWS_AS(logon_zscore(530, 540, 0, 9), DegenerateError);
    CHECK_THROWS_AS(logon_zscore(530, 540, 1, 0), DegenerateError);
}

TEST_CASE("z to probability is the two-sided normal tail") {
    CHECK(zscore_to_probability(0.0) == 1.0);
    CHECK(std::abs(zscore_to_probability(2.0) - 0.0455) <= 1e-4);
    CHECK(zscore_to_probability(-2.0) == zscore_to_probability(2.0));
    for (double z : {0.1, 0.5, 1.0, 1.5, 1.96, 2.5, 3.0, 4.0, -0.7, -3.3}) {
        CAPTURE(z);
        CHECK(std::abs(zscore_to_probability(z) - 2.0 * (1.0 - oracle::normal_cdf(std::abs(z)))) <= 1e-6);
    }
}

TEST_CASE("degenerate logon spread maps to 0 or 1") {
    UserStats s;
    s.logon_mean = 480;
    s.logon_stddev = 0;
    s.logon_count = 5;
    CHECK(logon_probability(480, s) == 1.0);
    CHECK(logon_probability(481, s) == 0.0);
    s.logon_mean = 540;
    s.logon_stddev = 30;
    s.logon_count = 9;
    CHECK(logon_probability(560, s) == doctest::Approx(zscore_to_probability(2.0)));
}

TEST_CASE("logon accumulators merge associatively") {
    Rng rng(3);
    LogonAccumulator all, left, right;
    for (int i = 0; i < 500; ++i) {
        const double v = rng.normal(540, 25);
        all.add(v);
        (i < 200 ? left : right).add(v);
    }
    left.merge(right);
    CHECK(left.count() == all.count());
    CHECK(left.mean() == doctest::Approx(all.mean()).epsilon(1e-12));
    CHECK(left.stddev() == doctest::Approx(all.stddev()).epsilon(1e-12));
    LogonAccumulator one;
    one.add(10);
    CHECK(one.stddev() == 0.0);
}

TEST_CASE("k-means on trivial and separated profiles") {
    std::vector<PsychometricProfile> same(3);
    for (int i = 0; i < 3; ++i) same[i] = {"n", "U" + std::to_string(i), {40, 41, 42, 43, 44}};
    const auto one = cluster_psychometrics(same, 1, 1);
    for (const auto& p : same) CHECK(one.cluster_of.at(p.user_id) == 0);
    CHECK(one.centroids.at(0) == std::array<double, 5>{40, 41, 42, 43, 44});
    CHECK_THROWS_AS(cluster_psychometrics(same, 2, 1), ConfigError);

    Rng rng(9);
    std::vector<PsychometricProfile> blobs;
    for (int i = 0; i < 40; ++i) {
        PsychometricProfile p{"n", "B" + std::to_string(i), {}};
        const int base = i % 2 ? 90 : 10;
        for (auto& s : p.scores) s = base + static_cast<int>(rng.between(-3, 3));
        blobs.push_back(p);
    }
    const auto r = cluster_psychometrics(blobs, 2, 4);
    CHECK(r.converged);
    for (std::size_t i = 0; i < blobs.size(); ++i) {
        // Brute-force nearest centroid agrees with the returned assignment.
        double best = 1e300;
        int arg = -1;
        for (int c = 0; c < 2; ++c) {
            double d = 0;
            for (int j = 0; j < 5; ++j) d += std::pow(blobs[i].scores[j] - r.centroids[c][j], 2);
            if (d < best) best = d, arg = c;
        }
        CHECK(r.cluster_of.at(blobs[i].user_id) == arg);
        CHECK(r.cluster_of.at(blobs[i].user_id) == r.cluster_of.at(blobs[i % 2].user_id));
    }
    CHECK(r.cluster_of.at("B0") != r.cluster_of.at("B1"));
    const auto again = cluster_psychometrics(blobs, 2, 4);
    CHECK(again.cluster_of == r.cluster_of);
    CHECK(kDefaultClusters == 7);
}

TEST_CASE("instance building on a hand-made corpus") {
    TempDir dir("feat-mini");
    write_mini_corpus(dir, true);
    BuildOptions opt;
    opt.month = year{2010} / July;
    opt.k_clusters = 1;
    const Dataset ds = build_instances(dir.path(), opt);

    std::set<std::string> users;
    for (const auto& d : ds.instances) users.insert(d.user_id);
    CHECK(users == std::set<std::string>{"A", "C"});
    CHECK(ds.provenance.at("retained_users") == 2);
    CHECK(ds.provenance.at("total_connects") == 4);

    const auto find = [&](const std::string& u, int day_of_month) -> const DailyInstance& {
        const Date d{year{2010}, July, day{static_cast<unsigned>(day_of_month)}};
        const auto it = std::find_if(ds.instances.begin(), ds.instances.end(),
                                     [&](const DailyInstance& x) { return x.user_id == u && x.date == d; });
        REQUIRE(it != ds.instances.end());
        return *it;
    };
    // A: 7 days of activity in July, device use on the first three.
    CHECK(std::count_if(ds.instances.begin(), ds.instances.end(), [](auto& d) { return d.user_id == "A"; }) == 7);
    CHECK(find("A", 1).p_device == 0.75);
    CHECK(find("A", 4).p_device == 0.0);
    CHECK(find("A", 1).employed_next_month);
    CHECK_FALSE(find("A", 1).label);

    // A's earliest logon on the 7th is 07:50, not the noon one.
    {
        std::vector<double> v;
        for (int d = 0; d < 6; ++d) v.push_back(480);
        v.push_back(470);
        v.push_back(720);
        v.push_back(480);  // August logon still counts toward history
        double mean = 0, var = 0;
        for (double x : v) mean += x;
        mean /= v.size();
        for (double x : v) var += (x - mean) * (x - mean);
        const double sd = std::sqrt(var / v.size());
        const double z = (470 - mean) / (sd / std::sqrt(double(v.size())));
        CHECK(find("A", 7).p_logon == doctest::Approx(zscore_to_probability(z)).epsilon(1e-12));
    }

    // C leaves: no August roster entry. Labels cover the window day and the
    // early-morning spill-over on the 8th.
    CHECK_FALSE(find("C", 7).employed_next_month);
    CHECK(find("C", 7).employed_this_month);
    CHECK(find("C", 7).label);
    CHECK(find("C", 8).label);
    CHECK_FALSE(find("C", 6).label);
    CHECK(find("C", 7).p_device == 0.25);
    CHECK(ds.positives() == 2);

    for (const auto& d : ds.instances) {
        CHECK(d.p_logon >= 0.0);
        CHECK(d.p_logon <= 1.0);
        CHECK(d.psych_cluster == 0);
    }
    CHECK(std::is_sorted(ds.instances.begin(), ds.instances.end(), [](const auto& a, const auto& b) {
        return std::tie(a.user_id, a.date) < std::tie(b.user_id, b.date);
    }));
}

TEST_CASE("months without rosters are a range error") {
    TempDir dir("feat-range");
    write_mini_corpus(dir, false);
    BuildOptions opt;
    opt.k_clusters = 1;
    opt.month = year{2010} / August;
    CHECK_THROWS_AS(build_instances(dir.path(), opt), RangeError);
    opt.month = year{2011} / January;
    CHECK_THROWS_AS(build_instances(dir.path(), opt), RangeError);
    opt.month = year{2010} / July;
    const Dataset ds = build_instances(dir.path(), opt);
    for (const auto& d : ds.instances) CHECK(d.employed_next_month);
}

TEST_CASE("spread subsample keeps positives and samples negatives") {
    std::vector<int> labels(288 + 200, 0);
    for (int i = 0; i < 18; ++i) labels[i * 20] = 1;
    const auto keep = spread_subsample_indices(labels, 15, 3);
    CHECK(keep.size() == 288);
    CHECK(std::is_sorted(keep.begin(), keep.end()));
    CHECK(std::adjacent_find(keep.begin(), keep.end()) == keep.end());
    CHECK(std::count_if(keep.begin(), keep.end(), [&](std::size_t i) { return labels[i] == 1; }) == 18);
    CHECK(spread_subsample_indices(labels, 15, 3) == keep);
    CHECK(spread_subsample_indices(labels, 15, 4) != keep);

    std::vector<int> small(105, 0);
    for (int i = 0; i < 5; ++i) small[i] = 1;
    CHECK(spread_subsample_indices(small, 1, 1).size() == 10);
    CHECK(spread_subsample_indices(small, 1000, 1).size() == 105);
    CHECK_THROWS_AS(spread_subsample_indices(small, 0.5, 1), ConfigError);
    CHECK_THROWS_AS(spread_subsample_indices(std::vector<int>(10, 0), 2, 1), DegenerateError);
}

TEST_CASE("instances csv round-trips and labels match implanted windows") {
    TempDir corpus("feat-gen"), out("feat-out");
    GenConfig cfg;
    cfg.seed = 21;
    cfg.n_users = 150;
    cfg.n_insiders = 6;
    const GenSummary summary = generate(cfg, corpus.path());
    BuildOptions opt;
    opt.month = year{2010} / July;
    opt.seed = 2;
    const Dataset ds = build_instances(corpus.path(), opt);

    std::set<std::pair<std::string, Date>> positives, expected;
    for (const auto& d : ds.instances) {
        if (d.label) positives.insert({d.user_id, d.date});
        CHECK(d.psych_cluster >= 0);
        CHECK(d.psych_cluster < 7);
        CHECK(std::isfinite(d.p_logon));
        CHECK(d.p_device <= 1.0);
    }
    for (const auto& w : summary.windows) {
        for (Date d = w.first_day; sys_days{d} <= sys_days{w.last_day}; d = add_days(d, 1)) {
            if (is_weekday(d)) expected.insert({w.user_id, d});
        }
    }
    CHECK(positives == expected);
    CHECK(ds.positives() == 6u * 3u);

    write_instances_csv(ds, out / "instances.csv");
    const Dataset back = read_instances_csv(out / "instances.csv", 7);
    REQUIRE(back.instances.size() == ds.instances.size());
    for (std::size_t i = 0; i < ds.instances.size(); ++i) {
        const auto& a = ds.instances[i];
        const auto& b = back.instances[i];
        CHECK(a.user_id == b.user_id);
        CHECK(a.date == b.date);
        CHECK(a.p_logon == b.p_logon);
        CHECK(a.p_device == b.p_device);
        CHECK(a.employed_this_month == b.employed_this_month);
        CHECK(a.employed_next_month == b.employed_next_month);
        CHECK(a.psych_cluster == b.psych_cluster);
        CHECK(a.label == b.label);
    }
    CHECK(read_file(out / "instances.csv").rfind(std::string(kInstancesHeader) + "\n", 0) == 0);

    const Table t = to_table(ds);
    CHECK(t.rows() == ds.instances.size());
    CHECK(t.schema() == instance_schema(7));
    CHECK(t.positives() == ds.positives());
}

TEST_CASE("connect counts partition the log") {
    TempDir corpus("feat-sum");
    GenConfig cfg;
    cfg.n_users = 100;
    cfg.n_insiders = 4;
    generate(cfg, corpus.path());
    std::map<std::string, std::uint64_t> per_user;
    std::uint64_t total = 0;
    for_each_event(corpus / "device.csv", SourceKind::Device, [&](const LogEvent& e) {
        if (e.kind == EventKind::DeviceConnect) ++per_user[e.user_id], ++total;
    });
    BuildOptions opt;
    opt.month = year{2010} / July;
    const Dataset ds = build_instances(corpus.path(), opt);
    CHECK(ds.provenance.at("total_connects").get<std::uint64_t>() == total);
    CHECK(ds.provenance.at("retained_users").get<std::size_t>() == per_user.size());
    std::uint64_t sum = 0;
    for (const auto& [u, c] : per_user) sum += c;
    CHECK(sum == total);
    for (const auto& d : ds.instances) {
        if (d.p_device > 0) CHECK(d.p_device == static_cast<double>(per_user.at(d.user_id)) / total);
    }
}
