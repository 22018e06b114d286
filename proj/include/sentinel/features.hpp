#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "sentinel/calendar.hpp"
#include "sentinel/ingest.hpp"
#include "sentinel/table.hpp"

namespace sentinel {

inline constexpr int kDefaultClusters = 7;
inline constexpr double kDefaultSubsampleRatio = 15.0;

// P(D) = U / T: share of all device-connect events in the log that belong
// to one user. Throws DegenerateError when T == 0.
double device_probability(std::uint64_t user_connects, std::uint64_t total_connects);

// Z = (x - mean) / (stddev / sqrt(n)). Throws DegenerateError when
// stddev <= 0 or n == 0.
double logon_zscore(double logon_minutes, double mean, double stddev, std::uint64_t n);

// Two-sided tail 2 * (1 - Phi(|z|)): probability of a logon at least this
// far from the user's habit.
double zscore_to_probability(double z);

// Running mean / variance of logon times (Welford). Partial accumulators
// from separate shards merge associatively.
class LogonAccumulator {
public:
    void add(double minutes);
    void merge(const LogonAccumulator& other);

    std::uint64_t count() const { return n_; }
    double mean() const { return mean_; }
    // Population standard deviation; 0 for fewer than two samples.
    double stddev() const;

private:
    std::uint64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct UserStats {
    std::string user_id;
    std::uint64_t device_connects = 0;
    double logon_mean = 0.0;
    double logon_stddev = 0.0;
    std::uint64_t logon_count = 0;
    int psych_cluster = 0;
};

// p_logon for one day. Handles the degenerate sigma == 0 case: 1 when the
// logon matches the user's only ever logon minute, 0 otherwise.
double logon_probability(double logon_minutes, const UserStats& stats);

struct ClusterResult {
    std::unordered_map<std::string, int> cluster_of;
    std::vector<std::array<double, 5>> centroids;
    int iterations = 0;
    bool converged = false;
};

// Lloyd's k-means on the five personality scores. Initial centroids are k
// distinct profiles chosen by `seed`; stops when assignments stop changing
// or after `max_iterations`.
ClusterResult cluster_psychometrics(const std::vector<PsychometricProfile>& profiles, int k, std::uint64_t seed,
                                    int max_iterations = 100);

struct DailyInstance {
    std::string user_id;
    Date date;
    double p_logon = 0.0;
    double p_device = 0.0;
    bool employed_this_month = false;
    bool employed_next_month = false;
    int psych_cluster = 0;
    bool label = false;
};

struct Dataset {
    std::vector<DailyInstance> instances;
    int k_clusters = kDefaultClusters;
    nlohmann::json provenance = nlohmann::json::object();

    std::size_t positives() const;
    std::size_t negatives() const { return instances.size() - positives(); }
};

struct BuildOptions {
    YearMonth month;
    int k_clusters = kDefaultClusters;
    std::uint64_t seed = 1;
    bool strict = false;
};

// Two streaming passes over logon.csv and device.csv: the first collects
// per-user statistics over the whole corpus, the second emits one instance
// per (device-using user, day with a logon) inside `options.month`.
Dataset build_instances(const std::filesystem::path& corpus, const BuildOptions& options);

// Keeps every positive and a seeded uniform sample of
// floor(ratio * positives) negatives (all of them if fewer exist).
// Instances keep their original relative order.
Dataset spread_subsample(const Dataset& dataset, double ratio, std::uint64_t seed);

// Same rule over row indices of an arbitrary label vector; used for
// subsampling inside cross-validation folds.
std::vector<std::size_t> spread_subsample_indices(const std::vector<int>& labels, double ratio,
                                                  std::uint64_t seed);

inline constexpr std::string_view kInstancesHeader =
    "user,date,p_logon,p_device,employed_this_month,employed_next_month,psych_cluster,label";

void write_instances_csv(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_instances_csv(const std::filesystem::path& path, int k_clusters);

// Schema of the learning table built from DailyInstances: p_logon and
// p_device continuous, the two employment flags as 2-level categoricals and
// the personality cluster as a k-level categorical.
Schema instance_schema(int k_clusters);
Table to_table(const Dataset& dataset);

}  // namespace sentinel
