// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass --only N (repeatable) to run a subset.
#include <sys/resource.h>
#include <sys/wait.h>
#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sentinel/boosting.hpp"
#include "sentinel/datagen.hpp"
#include "sentinel/error.hpp"
#include "sentinel/eval.hpp"
#include "sentinel/features.hpp"
#include "sentinel/logistic.hpp"
#include "sentinel/mlp.hpp"
#include "sentinel/naive_bayes.hpp"
#include "sentinel/pipeline.hpp"
#include "sentinel/random.hpp"
#include "sentinel/tree.hpp"

namespace fs = std::filesystem;
using namespace sentinel;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail << "first failure: " << what << "; ";
        pass = pass && ok;
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

bool same_tree(const fs::path& a, const fs::path& b) {
    std::size_t files = 0, other = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        ++files;
        const auto twin = b / fs::relative(e.path(), a);
        if (!fs::exists(twin) || read_bytes(e.path()) != read_bytes(twin)) return false;
    }
    for (const auto& e : fs::recursive_directory_iterator(b)) other += e.is_regular_file();
    return files > 0 && files == other;
}

Table random_table(Rng& rng, std::size_t n) {
    Table t({{"a", 0}, {"b", 0}, {"g", 3}});
    for (std::size_t i = 0; i < n; ++i) {
        const int y = rng.bernoulli(0.4) ? 1 : 0;
        const std::vector<double> row{rng.normal(y ? 1.0 : 0.0, 1.0), rng.normal(0, 2),
                                      static_cast<double>(rng.below(3))};
        t.add_row(row, y);
    }
    return t;
}

std::vector<double> normalized_weights(Rng& rng, std::size_t n) {
    std::vector<double> w(n);
    double s = 0;
    for (auto& v : w) s += v = rng.uniform(0.2, 2.0);
    for (auto& v : w) v /= s;
    return w;
}

// ---- criterion 2 -----------------------------------------------------------

void metrics_oracles(Outcome& o) {
    const auto t0 = Clock::now();
    Rng rng(2);
    double worst = 0;
    for (int set = 0; set < 200; ++set) {
        const std::size_t n = 2 + rng.below(49);
        std::vector<double> s(n);
        std::vector<int> y(n);
        const std::uint64_t grid = 1 + rng.below(20);  // coarse grids force ties
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(rng.below(grid + 1)) / static_cast<double>(grid);
            y[i] = rng.bernoulli(0.5) ? 1 : 0;
        }
        y[0] = 1;
        y[1] = 0;
        worst = std::max(worst, std::abs(roc_auc(s, y).auc - oracle::pairwise_auc(s, y)));

        const double thr = rng.uniform();
        const auto m = confusion_at_threshold(s, y, thr);
        std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const bool pred = s[i] >= thr;
            (pred ? (y[i] ? tp : fp) : (y[i] ? fn : tn))++;
        }
        o.require(m == ConfusionMatrix{tp, fp, tn, fn}, "confusion counts");
        o.require(m.total() == n, "confusion total");
        o.require(m.accuracy() == static_cast<double>(tp + tn) / static_cast<double>(n), "accuracy identity");
    }
    const double secs = seconds_since(t0);
    o.require(worst <= 1e-12, "AUC vs pairwise");
    o.require(secs < 5.0, "runtime");
    o.detail << "200 sets, max |AUC - pairwise| = " << worst << ", " << secs << " s";
}

// ---- criterion 3 -----------------------------------------------------------

void learner_oracles(Outcome& o) {
    // Naive Bayes on the fixed four-instance set.
    Table four({{"x", 0}, {"c", 2}});
    const std::vector<std::vector<double>> rows{{1, 1}, {3, 1}, {0, 0}, {2, 1}};
    const std::vector<int> labels{1, 1, 0, 0};
    for (std::size_t i = 0; i < 4; ++i) four.add_row(rows[i], labels[i]);
    NaiveBayes nb;
    nb.fit(four);
    const double a = 2 * NaiveBayes::kSmoothing, den = 2 + 2 * a;
    const double lr_x = std::exp(0.5);
    const double want1 = 1.0 / (1.0 + ((1 + a) / den) / (lr_x * (2 + a) / den));
    const double want0 = 1.0 / (1.0 + ((1 + a) / den) / (lr_x * a / den));
    const std::vector<double> q1{2, 1}, q0{2, 0};
    const double nb_err = std::max(std::abs(nb.predict_proba(q1) - want1), std::abs(nb.predict_proba(q0) - want0));
    o.require(nb_err <= 1e-9, "naive Bayes posterior");

    Rng rng(3);
    // Logistic regression gradient.
    double lr_worst = 0;
    {
        const Table t = random_table(rng, 25);
        const OneHotEncoder enc(t.schema());
        const auto x = enc.encode(t);
        const auto w = normalized_weights(rng, t.rows());
        const LogisticObjective obj{x, enc.width(), t.labels(), w, 0.01};
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> theta(enc.width() + 1), grad(theta.size());
            for (auto& v : theta) v = rng.uniform(-1.5, 1.5);
            obj.gradient(theta, grad);
            for (std::size_t j = 0; j < theta.size(); ++j) {
                const double fd = oracle::partial([&](std::span<const double> th) { return obj.value(th); }, theta, j);
                lr_worst = std::max(lr_worst, oracle::relative_error(grad[j], fd));
            }
        }
    }
    o.require(lr_worst <= 1e-5, "logistic gradient");

    // Neural network gradient.
    double nn_worst = 0;
    {
        const Table t = random_table(rng, 12);
        const OneHotEncoder enc(t.schema());
        const auto x = enc.encode(t);
        const auto w = normalized_weights(rng, t.rows());
        const int hidden = 5;
        const MlpObjective obj{x, enc.width(), hidden, t.labels(), w};
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> theta(mlp_parameter_count(enc.width(), hidden)), grad(theta.size());
            for (auto& v : theta) v = rng.uniform(-1, 1);
            obj.gradient(theta, grad);
            for (std::size_t j = 0; j < theta.size(); ++j) {
                const double fd = oracle::partial([&](std::span<const double> th) { return obj.value(th); }, theta, j);
                nn_worst = std::max(nn_worst, oracle::relative_error(grad[j], fd));
            }
        }
    }
    o.require(nn_worst <= 1e-4, "network gradient");

    // Tree splits against exhaustive enumeration.
    int agree = 0;
    for (int set = 0; set < 100; ++set) {
        Table t({{"a", 0}, {"b", 0}, {"c", 3}});
        std::vector<double> w;
        for (int i = 0; i < 10; ++i) {
            const std::vector<double> row{static_cast<double>(rng.between(0, 5)), std::round(rng.normal(0, 2) * 4) / 4,
                                          static_cast<double>(rng.below(3))};
            t.add_row(row, rng.bernoulli(0.4) ? 1 : 0);
            w.push_back(rng.bernoulli(0.5) ? 1.0 : rng.uniform(0.1, 3.0));
        }
        double total = 0;
        for (double v : w) total += v;
        std::vector<std::size_t> idx(10);
        for (std::size_t i = 0; i < 10; ++i) idx[i] = i;
        const std::vector<int> features{0, 1, 2};
        const auto got = best_split(t, w, idx, features, 1);
        const auto want = oracle::best_split(t, w, 1e-12 * total);
        const bool ok = got.has_value() == want.has_value() &&
                        (!got || (got->feature == want->feature && got->threshold == want->threshold &&
                                  std::abs(got->impurity - want->impurity) <= 1e-12 * total));
        agree += ok;
    }
    o.require(agree == 100, "tree best split");
    o.detail << "NB err " << nb_err << ", LR grad rel err " << lr_worst << ", NN grad rel err " << nn_worst
             << ", tree splits " << agree << "/100";
}

// ---- criterion 4 -----------------------------------------------------------

void boosting_identities(Outcome& o) {
    const double alpha_err = std::abs(boost_alpha(0.25) - 0.5 * std::log(3.0));
    o.require(alpha_err <= 1e-12, "alpha(0.25)");
    Rng rng(4);
    double worst_half = 0, worst_sum = 0;
    std::size_t rounds = 0;
    for (const LearnerSpec& base : {LearnerSpec{"dt", {{"max_depth", 1}}}, LearnerSpec{"nbn"}, LearnerSpec{"svm"},
                                    LearnerSpec{"lr", {{"epochs", 300}}}}) {
        const Table t = random_table(rng, 200);
        BoostedClassifier b(base, 10, 9);
        b.fit(t);
        const auto& tr = b.trace();
        for (std::size_t r = 0; r < tr.errors.size(); ++r) {
            ++rounds;
            double sum = 0;
            for (double v : tr.weights[r]) sum += v;
            worst_sum = std::max(worst_sum, std::abs(sum - 1));
            if (tr.stopped_on_perfect && r + 1 == tr.errors.size()) continue;
            const auto& next = r + 1 < tr.weights.size() ? tr.weights[r + 1] : tr.final_weights;
            double err = 0, next_sum = 0;
            for (std::size_t i = 0; i < next.size(); ++i) {
                next_sum += next[i];
                if (tr.mistakes[r][i]) err += next[i];
            }
            worst_half = std::max(worst_half, std::abs(err - 0.5));
            worst_sum = std::max(worst_sum, std::abs(next_sum - 1));
        }
    }
    o.require(worst_half <= 1e-9, "reweighted error 0.5");
    o.require(worst_sum <= 1e-12, "weights sum to 1");
    o.detail << rounds << " rounds, max |err - 0.5| = " << worst_half << ", max |sum - 1| = " << worst_sum
             << ", |alpha - ln3/2| = " << alpha_err;
}

// ---- criterion 5 -----------------------------------------------------------

void feature_formulas(Outcome& o) {
    Rng rng(5);
    double dev_worst = 0, z_worst = 0, p_worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t total = 1 + rng.below(100000);
        const std::uint64_t user = rng.below(total + 1);
        dev_worst = std::max(dev_worst, std::abs(device_probability(user, total) -
                                                 static_cast<double>(user) / static_cast<double>(total)));

        const double mean = rng.uniform(400, 700), sd = rng.uniform(1, 90), x = rng.uniform(0, 1440);
        const std::uint64_t n = 1 + rng.below(60);
        const double want = (x - mean) * std::sqrt(static_cast<double>(n)) / sd;
        z_worst = std::max(z_worst, oracle::relative_error(logon_zscore(x, mean, sd, n), want));

        const double z = rng.uniform(-6, 6);
        p_worst = std::max(p_worst, std::abs(zscore_to_probability(z) - 2 * (1 - oracle::normal_cdf(std::abs(z)))));
    }
    const double at2 = zscore_to_probability(2.0);
    o.require(dev_worst <= 1e-15, "device probability");
    o.require(z_worst <= 1e-12, "logon z-score");
    o.require(p_worst <= 1e-6, "tail probability");
    o.require(std::abs(at2 - 0.0455) <= 1e-4, "z = 2");
    o.detail << "1000 inputs: device err " << dev_worst << ", z rel err " << z_worst << ", tail err " << p_worst
             << ", P(z=2) = " << at2;
}

// ---- criteria 6 and 7 ------------------------------------------------------

struct BenchRun {
    TrainEvalResult result;
    double seconds = 0;
};

GenConfig bench_config() {
    GenConfig g;
    g.seed = 2010;
    g.n_users = 500;
    g.n_insiders = 15;
    return g;
}

BenchRun run_benchmark(const fs::path& work, const std::string& tag) {
    const auto t0 = Clock::now();
    generate(bench_config(), work / ("corpus-" + tag));
    PreprocessConfig pre;
    pre.corpus = work / ("corpus-" + tag);
    pre.out = work / ("data-" + tag);
    run_preprocess(pre);
    TrainEvalConfig cfg;
    cfg.data = pre.out;
    cfg.out = work / ("run-" + tag);
    BenchRun r{run_train_eval(cfg), 0};
    r.seconds = seconds_since(t0);
    return r;
}

void benchmark(Outcome& o, const BenchRun& run) {
    const auto& res = run.result;
    std::map<std::string, double> auc;
    for (const auto& m : res.models) {
        o.require(m.ok, "model " + m.name + " ran");
        if (m.ok) auc[m.name] = m.report.roc.auc;
    }
    double worst_plain = 1;
    for (const auto& k : learner_kinds()) {
        o.require(auc.count(k) && auc[k] >= 0.90, "plain " + k + " AUC >= 0.90");
        worst_plain = std::min(worst_plain, auc.count(k) ? auc[k] : 0.0);
    }
    o.require(res.ensemble_index.has_value(), "ensemble evaluated");
    const double ens = auc.count("ensemble") ? auc["ensemble"] : 0.0;
    double mean = 0, best = 0;
    const std::vector<std::string> members = {"nn", "boosted-nbn", "boosted-svm", "rf", "lr"};
    for (const auto& m : members) {
        mean += auc[m] / static_cast<double>(members.size());
        best = std::max(best, auc[m]);
    }
    o.require(ens >= mean, "ensemble >= member mean");
    o.require(ens >= best - 0.01, "ensemble within 0.01 of best member");
    o.require(run.seconds < 600, "runtime");
    o.detail << "min plain AUC " << worst_plain << ", ensemble " << ens << " (member mean " << mean << ", best " << best
             << "), " << run.seconds << " s";
}

void determinism(Outcome& o, const fs::path& work, const BenchRun& first) {
    (void)first;
    run_benchmark(work, "b");
    const bool reports = read_bytes(work / "run-a" / "report.json") == read_bytes(work / "run-b" / "report.json");
    const bool corpora = same_tree(work / "corpus-a", work / "corpus-b");
    o.require(reports, "report.json identical");
    o.require(corpora, "corpora identical");
    o.detail << "report.json " << (reports ? "identical" : "differs") << ", corpus " << (corpora ? "identical" : "differs");
}

// ---- criterion 8 -----------------------------------------------------------

void labeling(Outcome& o, const fs::path& work) {
    Rng rng(8);
    int exact = 0, sized = 0;
    for (int c = 0; c < 20; ++c) {
        GenConfig g;
        g.seed = rng.next_u64();
        g.n_users = static_cast<int>(rng.between(120, 320));
        g.n_insiders = 6;
        g.fraction_device_users = rng.uniform(0.2, 0.5);
        g.logon_jitter_minutes = rng.uniform(5, 40);
        g.attrition_rate = rng.uniform(0, 0.05);
        const auto month = std::chrono::year{2010} / std::chrono::month{static_cast<unsigned>(rng.between(2, 11))};
        g.start_date = Date{month / std::chrono::day{1}};
        g.end_date = Date{month / std::chrono::last};
        const fs::path dir = work / ("label-" + std::to_string(c));
        const auto summary = generate(g, dir);

        BuildOptions opt;
        opt.month = month;
        opt.seed = g.seed;
        const Dataset ds = build_instances(dir, opt);
        std::set<std::pair<std::string, Date>> got, want;
        for (const auto& d : ds.instances) {
            if (d.label) got.insert({d.user_id, d.date});
        }
        for (const auto& w : summary.windows) {
            for (Date d = w.first_day; std::chrono::sys_days{d} <= std::chrono::sys_days{w.last_day}; d = add_days(d, 1)) {
                if (is_weekday(d)) want.insert({w.user_id, d});
            }
        }
        exact += got == want;
        o.require(got == want, "labels of config " + std::to_string(c));
        o.require(ds.positives() == 18, "18 positives in config " + std::to_string(c));
        if (ds.negatives() >= 270) {
            const Dataset sub = spread_subsample(ds, 15, mix_seed(g.seed, 1));
            sized += sub.instances.size() == 288 && sub.positives() == 18;
            o.require(sub.instances.size() == 288, "288 instances in config " + std::to_string(c));
        } else {
            o.require(false, "config " + std::to_string(c) + " has fewer than 270 negatives");
        }
        fs::remove_all(dir);
    }
    o.detail << exact << "/20 label sets exact, " << sized << "/20 subsamples of exactly 288";
}

// ---- criterion 9 -----------------------------------------------------------

void streaming(Outcome& o, const fs::path& work) {
    GenConfig g;
    g.seed = 99;
    g.n_users = 2600;
    g.n_insiders = 30;
    const auto summary = generate(g, work / "big");
    std::size_t events = 0;
    for (const char* f : {"logon.csv", "device.csv", "file.csv", "http.csv"}) events += summary.rows_per_file.at(f);
    o.require(events >= 1'000'000, "corpus holds 10^6 events");

    const std::string bin = SENTINEL_BIN;
    const std::string corpus = (work / "big").string(), out = (work / "big-data").string();
    const auto t0 = Clock::now();
    const pid_t pid = ::fork();
    if (pid == 0) {
        const int devnull = ::open("/dev/null", O_WRONLY);
        ::dup2(devnull, 1);
        ::execl(bin.c_str(), bin.c_str(), "preprocess", "--corpus", corpus.c_str(), "--out", out.c_str(),
                static_cast<char*>(nullptr));
        ::_exit(127);
    }
    int status = 0;
    struct rusage usage {};
    ::wait4(pid, &status, 0, &usage);
    const double secs = seconds_since(t0);
    const double mb = static_cast<double>(usage.ru_maxrss) / 1024.0;
    o.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, "preprocess exit status");
    o.require(mb <= 256.0, "peak RSS <= 256 MB");
    o.require(secs < 60.0, "runtime < 60 s");
    o.detail << events << " events, peak RSS " << mb << " MB, " << secs << " s";
    fs::remove_all(work / "big");
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--only") only.insert(std::stoi(argv[++i]));
    }
    auto wanted = [&](int c) { return only.empty() || only.count(c) != 0; };

    const fs::path work = fs::temp_directory_path() / ("sentinel-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(work);
    fs::create_directories(work);

    int failures = 0;
    auto report = [&](int criterion, const std::string& name, const std::function<void(Outcome&)>& body) {
        if (!wanted(criterion)) return;
        Outcome o;
        try {
            body(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "threw: " << e.what();
        }
        failures += !o.pass;
        std::cout << "criterion " << criterion << " [" << (o.pass ? "PASS" : "FAIL") << "] " << name << ": "
                  << o.detail.str() << std::endl;
    };

    report(2, "metric oracles", metrics_oracles);
    report(3, "learner oracles", learner_oracles);
    report(4, "boosting identities", boosting_identities);
    report(5, "feature formulas", feature_formulas);

    std::optional<BenchRun> bench;
    report(6, "synthetic benchmark", [&](Outcome& o) {
        bench = run_benchmark(work, "a");
        benchmark(o, *bench);
    });
    report(7, "determinism", [&](Outcome& o) {
        if (!bench) bench = run_benchmark(work, "a");
        determinism(o, work, *bench);
    });
    report(8, "labeling soundness", [&](Outcome& o) { labeling(o, work); });
    report(9, "streaming preprocess", [&](Outcome& o) { streaming(o, work); });

    std::error_code ec;
    fs::remove_all(work, ec);
    return failures == 0 ? 0 : 1;
}
