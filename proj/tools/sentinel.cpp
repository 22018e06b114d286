#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sentinel/calendar.hpp"
#include "sentinel/datagen.hpp"
#include "sentinel/error.hpp"
#include "sentinel/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sentinel;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    for (char c : text + ",") {
        if (c == ',') {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
            item.clear();
        } else {
            item += c;
        }
    }
    return out;
}

// Reads a flat "key = value" file into command-line tokens for `sub`.
// Keys are long option names without dashes; "#" starts a comment.
// Flags take true/false. Repeating a key repeats the option.
std::vector<std::string> config_tokens(const fs::path& path, const CLI::App& sub) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::vector<std::string> tokens;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = path.string() + ":" + std::to_string(number);
        if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        const CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (key.empty() || opt == nullptr || key == "config") {
            throw ConfigError(where + ": unknown key '" + key + "' for " + sub.get_name());
        }
        if (opt->get_expected_min() == 0) {
            if (value == "true") {
                tokens.push_back("--" + key);
            } else if (value != "false") {
                throw ConfigError(where + ": '" + key + "' takes true or false");
            }
        } else {
            tokens.push_back("--" + key);
            tokens.push_back(value);
        }
    }
    return tokens;
}

Date date_option(const std::string& flag, const std::string& text) {
    const auto d = parse_iso_date(text);
    if (!d) throw ConfigError(flag + " must be YYYY-MM-DD, got '" + text + "'");
    return *d;
}

std::optional<std::uint64_t> env_seed() {
    const char* s = std::getenv("SENTINEL_SEED");
    if (s == nullptr || *s == '\0') return std::nullopt;
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != std::string(s).size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(std::string("SENTINEL_SEED must be an unsigned integer, got '") + s + "'");
    }
}

struct Options {
    std::string config;
    std::uint64_t seed = 1;
    std::string out;
    std::string corpus;

    // generate
    GenConfig gen;
    std::string start, end;

    // preprocess
    std::string month;
    int k_clusters = 7;
    double ratio = 15.0;
    bool no_subsample = false;
    bool strict = false;

    // train-eval
    std::string data;
    std::string models, boost = "all", ensemble, weight_mode = "accuracy";
    int auto_members = 0, t_max = 10, cv_folds = 10, ensemble_cv_folds = 10, threads = 1;
    std::optional<int> train_k;
    bool inside_folds = false;
    std::vector<std::string> hyper;

    // report
    std::string run;
    bool as_json = false;
};

void add_common(CLI::App* sub, Options& o, bool with_seed) {
    sub->add_option("--config", o.config, "flat key = value file; flags on the command line win");
    if (with_seed) sub->add_option("--seed", o.seed, "master seed (SENTINEL_SEED overrides)");
}

int cmd_generate(Options& o) {
    if (o.out.empty()) throw CLI::RequiredError("--out");
    o.gen.seed = o.seed;
    if (!o.start.empty()) o.gen.start_date = date_option("--start", o.start);
    if (!o.end.empty()) o.gen.end_date = date_option("--end", o.end);
    const GenSummary summary = generate(o.gen, o.out);
    std::cout << summary.to_json().dump() << '\n';
    return 0;
}

int cmd_validate(Options& o) {
    if (o.corpus.empty()) throw CLI::RequiredError("--corpus");
    const ValidationReport report = validate_corpus(o.corpus);
    std::cout << report.to_json().dump(2) << '\n';
    return report.ok() ? 0 : kRuntimeFailure;
}

int cmd_preprocess(Options& o) {
    if (o.corpus.empty()) throw CLI::RequiredError("--corpus");
    if (o.out.empty()) throw CLI::RequiredError("--out");
    PreprocessConfig cfg;
    cfg.corpus = o.corpus;
    if (!o.month.empty()) {
        cfg.month = parse_year_month(o.month);
        if (!cfg.month) throw ConfigError("--month must be YYYY-MM, got '" + o.month + "'");
    }
    cfg.k_clusters = o.k_clusters;
    cfg.ratio = o.ratio;
    cfg.subsample = !o.no_subsample;
    cfg.seed = o.seed;
    cfg.strict = o.strict;
    cfg.out = o.out;
    const PreprocessResult r = run_preprocess(cfg);
    for (const auto& msg : r.validation_messages) std::cerr << "validation: " << msg << '\n';
    std::cout << "instances " << r.dataset.instances.size() << '\n'
              << "positives " << r.dataset.positives() << '\n'
              << "retained_users " << r.retained_users << '\n';
    if (cfg.subsample) {
        std::cout << "before_subsample " << r.full_instances << " (" << r.full_positives << " positive)\n";
    }
    return 0;
}

int cmd_train_eval(Options& o, bool models_given, bool ensemble_given) {
    if (o.data.empty()) throw CLI::RequiredError("--data");
    if (o.out.empty()) throw CLI::RequiredError("--out");
    TrainEvalConfig cfg;
    cfg.data = o.data;
    cfg.out = o.out;
    cfg.k_clusters = o.train_k;
    if (models_given) cfg.models = split_list(o.models);
    for (const auto& m : cfg.models) spec_for_label(cfg, m);
    if (o.boost == "all") {
        cfg.boost = {cfg.models.begin(), cfg.models.end()};
    } else if (o.boost == "none") {
        cfg.boost.clear();
    } else {
        const auto list = split_list(o.boost);
        cfg.boost = {list.begin(), list.end()};
    }
    cfg.t_max = o.t_max;
    // An explicit model filter drops the default ensemble unless one is asked for.
    if (ensemble_given) {
        cfg.ensemble = o.ensemble == "none" ? std::vector<std::string>{} : split_list(o.ensemble);
    } else if (models_given) {
        cfg.ensemble.clear();
    }
    cfg.auto_members = o.auto_members;
    if (cfg.auto_members == 1) throw ConfigError("--auto-members needs at least 2");
    cfg.weight_mode = parse_weight_mode(o.weight_mode);
    cfg.ensemble_cv_folds = o.ensemble_cv_folds;
    cfg.cv_folds = o.cv_folds;
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    cfg.subsample_inside_folds = o.inside_folds;
    cfg.ratio = o.ratio;
    for (const auto& h : o.hyper) add_hyper_override(cfg, h);
    for (const auto& m : cfg.ensemble) spec_for_label(cfg, m);

    const TrainEvalResult r = run_train_eval(cfg);
    std::cout << r.table;
    for (const auto& m : r.models) {
        if (!m.ok) std::cerr << "model " << m.name << " failed: " << m.error << '\n';
    }
    return r.failures == r.models.size() ? kRuntimeFailure : 0;
}

int cmd_report(Options& o) {
    if (o.run.empty()) throw CLI::RequiredError("--run");
    const fs::path path = fs::path(o.run) / "report.json";
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    const auto report = nlohmann::json::parse(in);
    if (o.as_json) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& m : report.at("models")) {
            nlohmann::json row = {{"model", m.at("name")}, {"ok", m.at("ok")}};
            if (m.at("ok").get<bool>()) {
                row["accuracy"] = m.at("evaluation").at("pooled").at("accuracy");
                row["auc"] = m.at("evaluation").at("pooled").at("auc");
            }
            rows.push_back(row);
        }
        std::cout << rows.dump(2) << '\n';
    } else {
        std::cout << format_table(report);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Insider-threat detection pipeline: synthetic logs, daily features, classifiers and evaluation"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    Options o;

    auto* gen = app.add_subcommand("generate", "write a synthetic organization corpus");
    add_common(gen, o, true);
    gen->add_option("--out", o.out, "output corpus directory");
    gen->add_option("--users", o.gen.n_users, "number of employees");
    gen->add_option("--insiders", o.gen.n_insiders, "number of implanted insiders");
    gen->add_option("--start", o.start, "first day, YYYY-MM-DD");
    gen->add_option("--end", o.end, "last day (inclusive), YYYY-MM-DD");
    gen->add_option("--device-fraction", o.gen.fraction_device_users, "share of benign removable-device users");
    gen->add_option("--attrition", o.gen.attrition_rate, "monthly probability a benign employee leaves");
    gen->add_option("--attack-days", o.gen.attack_days, "length of each insider's attack window in weekdays");
    gen->add_option("--jitter", o.gen.logon_jitter_minutes, "spread of benign logon times in minutes");

    auto* val = app.add_subcommand("validate", "check a corpus and list every violation");
    add_common(val, o, false);
    val->add_option("--corpus", o.corpus, "corpus directory");

    auto* pre = app.add_subcommand("preprocess", "build daily instances from a corpus");
    add_common(pre, o, true);
    pre->add_option("--corpus", o.corpus, "corpus directory");
    pre->add_option("--out", o.out, "directory for instances.csv and meta.json");
    pre->add_option("--month", o.month, "month to extract, YYYY-MM (default: corpus start)");
    pre->add_option("--k", o.k_clusters, "personality clusters")->check(CLI::PositiveNumber);
    pre->add_option("--ratio", o.ratio, "negatives kept per positive");
    pre->add_flag("--no-subsample", o.no_subsample, "keep every instance");
    pre->add_flag("--strict", o.strict, "fail on any validation problem or malformed row");

    auto* train = app.add_subcommand("train-eval", "cross-validate learners, boosted variants and the ensemble");
    add_common(train, o, true);
    train->add_option("--data", o.data, "directory from preprocess");
    train->add_option("--out", o.out, "run output directory");
    auto* models_opt = train->add_option("--models", o.models, "comma list of learners (nn,nbn,svm,rf,dt,lr)");
    train->add_option("--boost", o.boost, "learners to also boost: all, none or a comma list");
    train->add_option("--t-max", o.t_max, "boosting rounds")->check(CLI::PositiveNumber);
    auto* ens_opt = train->add_option("--ensemble", o.ensemble, "ensemble members (e.g. nn,boosted-svm) or none");
    train->add_option("--auto-members", o.auto_members, "build the ensemble from the top-m models by AUC");
    train->add_option("--weight-mode", o.weight_mode, "accuracy or uniform");
    train->add_option("--ensemble-cv-folds", o.ensemble_cv_folds, "inner folds for ensemble weights");
    train->add_option("--cv-folds", o.cv_folds, "cross-validation folds");
    train->add_option("--k", o.train_k, "personality clusters (default: from meta.json)");
    train->add_option("--threads", o.threads, "parallel folds")->check(CLI::PositiveNumber);
    train->add_flag("--subsample-inside-folds", o.inside_folds, "subsample each training split instead");
    train->add_option("--ratio", o.ratio, "ratio used with --subsample-inside-folds");
    train->add_option("--hyper", o.hyper, "hyperparameter override kind.key=value (repeatable)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

    auto* rep = app.add_subcommand("report", "print the comparison table of a finished run");
    add_common(rep, o, false);
    rep->add_option("--run", o.run, "train-eval output directory");
    rep->add_flag("--json", o.as_json, "print JSON rows instead of a table");

    try {
        // Config tokens go first so explicit flags override them.
        std::vector<std::string> args(argv + 1, argv + argc);
        if (!args.empty()) {
            CLI::App* sub = app.get_subcommand_no_throw(args[0]);
            for (std::size_t i = 1; sub != nullptr && i < args.size(); ++i) {
                std::string path;
                if (args[i] == "--config" && i + 1 < args.size()) {
                    path = args[i + 1];
                } else if (args[i].starts_with("--config=")) {
                    path = args[i].substr(9);
                }
                if (!path.empty()) {
                    const auto tokens = config_tokens(path, *sub);
                    args.insert(args.begin() + 1, tokens.begin(), tokens.end());
                    break;
                }
            }
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kUsageError;
    } catch (const ConfigError& e) {
        std::cerr << "sentinel: " << e.what() << '\n';
        return kUsageError;
    }

    try {
        if (const auto s = env_seed()) o.seed = *s;
        if (*gen) return cmd_generate(o);
        if (*val) return cmd_validate(o);
        if (*pre) return cmd_preprocess(o);
        if (*train) return cmd_train_eval(o, models_opt->count() > 0, ens_opt->count() > 0);
        if (*rep) return cmd_report(o);
    } catch (const CLI::RequiredError& e) {
        std::cerr << "sentinel: missing required option " << e.what() << '\n';
        return kUsageError;
    } catch (const ConfigError& e) {
        std::cerr << "sentinel: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        std::cerr << "sentinel: " << e.what() << '\n';
        return kRuntimeFailure;
    }
    return kUsageError;
}
