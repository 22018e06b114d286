#include <filesystem>

#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kBin = SENTINEL_BIN;

CommandResult sentinel(const std::string& args) { return run_command("'" + kBin + "' " + args); }

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::size_t data_lines(const fs::path& csv) {
    const std::string text = read_file(csv);
    std::size_t lines = 0;
    for (char c : text) lines += c == '\n';
    return lines - 1;
}

bool same_tree(const fs::path& a, const fs::path& b) {
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        ++files;
        const auto rel = fs::relative(e.path(), a);
        if (!fs::exists(b / rel) || read_file(e.path()) != read_file(b / rel)) return false;
    }
    std::size_t other = 0;
    for (const auto& e : fs::recursive_directory_iterator(b)) other += e.is_regular_file();
    return files == other && files > 0;
}

// One small corpus and preprocessed set shared by the slower cases.
struct Fixture {
    TempDir dir{"cli"};
    fs::path corpus = dir / "corpus";
    fs::path data = dir / "data";
    Fixture() {
        REQUIRE(sentinel("generate --seed 7 --users 200 --insiders 6 --out " + q(corpus)).exit_code == 0);
        REQUIRE(sentinel("preprocess --corpus " + q(corpus) + " --out " + q(data)).exit_code == 0);
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

}  // namespace

TEST_CASE("generate writes the corpus and a one-line JSON summary") {
    TempDir dir("gen");
    const auto r = sentinel("generate --seed 7 --users 200 --insiders 6 --out " + q(dir / "c"));
    REQUIRE(r.exit_code == 0);
    CHECK(std::count(r.output.begin(), r.output.end(), '\n') == 1);
    const auto summary = nlohmann::json::parse(r.output);
    CHECK(summary.at("insiders").size() == 6);
    CHECK(data_lines(dir / "c" / "answers.csv") == 6);

    CHECK(sentinel("generate --seed 7 --users 200 --insiders 6 --out " + q(dir / "d")).exit_code == 0);
    CHECK(same_tree(dir / "c", dir / "d"));
}

TEST_CASE("usage errors exit with 2") {
    CHECK(sentinel("generate --users 200").exit_code == 2);
    CHECK(sentinel("no-such-command").exit_code == 2);
    CHECK(sentinel("generate --users many --out x").exit_code == 2);
    CHECK(sentinel("").exit_code == 2);
    TempDir dir("usage");
    CHECK(sentinel("generate --users 10 --insiders 20 --out " + q(dir / "c")).exit_code == 2);
    CHECK(sentinel("train-eval --data " + q(dir.path()) + " --out " + q(dir / "o") + " --models knn").exit_code == 2);
    CHECK(sentinel("--help").exit_code == 0);
}

TEST_CASE("runtime failures exit with 1") {
    TempDir dir("rt");
    CHECK(sentinel("report --run " + q(dir / "missing")).exit_code == 1);
    CHECK(sentinel("train-eval --data " + q(dir / "missing") + " --out " + q(dir / "o")).exit_code == 1);
}

TEST_CASE("config files: flags win, bad lines are reported with their location") {
    TempDir dir("cfg");
    write_file(dir / "gen.conf", "# generator settings\nusers = 120\ninsiders = 4\nseed = 1\n\nout = " +
                                     (dir / "from-config").string() + "\n");
    auto r = sentinel("generate --config " + q(dir / "gen.conf") + " --insiders 5");
    REQUIRE(r.exit_code == 0);
    CHECK(nlohmann::json::parse(r.output).at("insiders").size() == 5);
    CHECK(fs::exists(dir / "from-config" / "logon.csv"));

    write_file(dir / "bad.conf", "users = 50\nthis line has no equals\n");
    r = sentinel("generate --config " + q(dir / "bad.conf") + " --out " + q(dir / "x"));
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("bad.conf:2") != std::string::npos);

    write_file(dir / "unknown.conf", "colour = blue\n");
    r = sentinel("generate --config " + q(dir / "unknown.conf") + " --out " + q(dir / "x"));
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("colour") != std::string::npos);
}

TEST_CASE("SENTINEL_SEED overrides the master seed") {
    TempDir dir("env");
    REQUIRE(run_command("SENTINEL_SEED=11 '" + kBin + "' generate --seed 3 --users 80 --insiders 2 --out " + q(dir / "a"))
                .exit_code == 0);
    REQUIRE(sentinel("generate --seed 11 --users 80 --insiders 2 --out " + q(dir / "b")).exit_code == 0);
    CHECK(same_tree(dir / "a", dir / "b"));
    CHECK(run_command("SENTINEL_SEED=abc '" + kBin + "' generate --users 80 --insiders 2 --out " + q(dir / "c"))
              .exit_code == 2);
}

TEST_CASE("validate and preprocess") {
    auto& f = fixture();
    CHECK(sentinel("validate --corpus " + q(f.corpus)).exit_code == 0);
    CHECK(fs::exists(f.data / "instances.csv"));
    CHECK(fs::exists(f.data / "meta.json"));

    TempDir dir("pre");
    auto r = sentinel("preprocess --corpus " + q(f.corpus) + " --out " + q(dir / "r1") + " --ratio 1");
    REQUIRE(r.exit_code == 0);
    const auto meta = nlohmann::json::parse(read_file(dir / "r1" / "meta.json"));
    const auto positives = meta.at("positives").get<std::size_t>();
    CHECK(positives > 0);
    CHECK(data_lines(dir / "r1" / "instances.csv") == 2 * positives);

    r = sentinel("preprocess --corpus " + q(f.corpus) + " --out " + q(dir / "all") + " --no-subsample");
    REQUIRE(r.exit_code == 0);
    const auto full = nlohmann::json::parse(read_file(dir / "all" / "meta.json"));
    CHECK(data_lines(dir / "all" / "instances.csv") == full.at("full_instances").get<std::size_t>());

    // A broken corpus only fails under --strict.
    fs::copy(f.corpus, dir / "broken", fs::copy_options::recursive);
    std::ofstream(dir / "broken" / "logon.csv", std::ios::app) << "garbage row\n";
    CHECK(sentinel("validate --corpus " + q(dir / "broken")).exit_code == 1);
    CHECK(sentinel("preprocess --corpus " + q(dir / "broken") + " --out " + q(dir / "b1")).exit_code == 0);
    CHECK(sentinel("preprocess --strict --corpus " + q(dir / "broken") + " --out " + q(dir / "b2")).exit_code != 0);
}

TEST_CASE("train-eval with --models rf evaluates only rf and its boosted variant") {
    auto& f = fixture();
    TempDir dir("train");
    const std::string common = "train-eval --data " + q(f.data) + " --models rf --cv-folds 3 --t-max 3 --hyper rf.n_trees=15";
    auto r = sentinel(common + " --out " + q(dir / "run"));
    REQUIRE(r.exit_code == 0);
    const auto report = nlohmann::json::parse(read_file(dir / "run" / "report.json"));
    std::vector<std::string> names;
    for (const auto& m : report.at("models")) names.push_back(m.at("name").get<std::string>());
    CHECK(names == std::vector<std::string>{"rf", "boosted-rf"});
    for (const char* file : {"table.txt", "roc.csv", "roc.svg", "manifest.json", "models/rf.json", "models/boosted-rf.json"}) {
        CAPTURE(file);
        CHECK(fs::exists(dir / "run" / file));
    }
    CHECK(read_file(dir / "run" / "roc.csv").rfind("threshold,fpr,tpr\n", 0) == 0);
    const auto manifest = nlohmann::json::parse(read_file(dir / "run" / "manifest.json"));
    CHECK(manifest.contains("config"));
    CHECK(manifest.contains("seeds"));
    CHECK(manifest.at("artifacts").contains("report.json"));

    // Same inputs, same report, thread count included.
    REQUIRE(sentinel(common + " --threads 3 --out " + q(dir / "again")).exit_code == 0);
    CHECK(read_file(dir / "run" / "report.json") == read_file(dir / "again" / "report.json"));

    r = sentinel("report --run " + q(dir / "run"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.output == read_file(dir / "run" / "table.txt"));
    CHECK(r.output.find("Accuracy") != std::string::npos);
    CHECK(r.output.find("Area under ROC") != std::string::npos);
    r = sentinel("report --json --run " + q(dir / "run"));
    REQUIRE(r.exit_code == 0);
    CHECK(nlohmann::json::parse(r.output).is_array());
}

TEST_CASE("train-eval builds the ensemble from chosen members") {
    auto& f = fixture();
    TempDir dir("ens");
    const auto r = sentinel("train-eval --data " + q(f.data) +
                            " --models nbn,dt --boost none --ensemble nbn,dt --weight-mode uniform --cv-folds 3 --out " +
                            q(dir / "run"));
    REQUIRE(r.exit_code == 0);
    const auto report = nlohmann::json::parse(read_file(dir / "run" / "report.json"));
    std::vector<std::string> names;
    for (const auto& m : report.at("models")) names.push_back(m.at("name").get<std::string>());
    CHECK(names == std::vector<std::string>{"nbn", "dt", "ensemble"});
    CHECK(fs::exists(dir / "run" / "models" / "ensemble.json"));
}
