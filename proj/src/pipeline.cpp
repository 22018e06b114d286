#include "sentinel/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sentinel/datagen.hpp"
#include "sentinel/error.hpp"
#include "sentinel/hash.hpp"
#include "sentinel/ingest.hpp"
#include "sentinel/random.hpp"

namespace fs = std::filesystem;

namespace sentinel {

const std::vector<std::string>& learner_kinds() {
    static const std::vector<std::string> kinds = {"nn", "nbn", "svm", "rf", "dt", "lr"};
    return kinds;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

YearMonth corpus_start_month(const fs::path& corpus) {
    const fs::path cfg = CorpusPaths{corpus}.config();
    if (!fs::exists(cfg)) throw ConfigError("no month given and " + cfg.string() + " is missing");
    return year_month_of(GenConfig::from_json(read_json(cfg)).start_date);
}

}  // namespace

nlohmann::json PreprocessConfig::to_json() const {
    nlohmann::json j = {{"k_clusters", k_clusters}, {"ratio", ratio}, {"subsample", subsample},
                        {"seed", seed},             {"strict", strict}};
    if (month) j["month"] = format_year_month(*month);
    return j;
}

PreprocessResult run_preprocess(const PreprocessConfig& config) {
    PreprocessResult result;
    const ValidationReport validation = validate_corpus(config.corpus);
    for (const auto& v : validation.violations) {
        std::ostringstream s;
        s << to_string(v.kind) << ' ' << v.file;
        if (v.line) s << ':' << v.line;
        s << ": " << v.message;
        result.validation_messages.push_back(s.str());
    }
    if (config.strict && !validation.ok()) {
        throw DataError("corpus failed validation with " + std::to_string(validation.violations.size()) +
                        " violation(s); first: " + result.validation_messages.front());
    }

    BuildOptions opts;
    opts.month = config.month ? *config.month : corpus_start_month(config.corpus);
    opts.k_clusters = config.k_clusters;
    opts.seed = config.seed;
    opts.strict = config.strict;
    Dataset full = build_instances(config.corpus, opts);
    result.full_instances = full.instances.size();
    result.full_positives = full.positives();
    result.retained_users = full.provenance.value("retained_users", std::size_t{0});

    result.dataset = config.subsample ? spread_subsample(full, config.ratio, mix_seed(config.seed, 1)) : std::move(full);
    result.meta = {{"k_clusters", config.k_clusters},
                   {"preprocess", config.to_json()},
                   {"provenance", result.dataset.provenance},
                   {"instances", result.dataset.instances.size()},
                   {"positives", result.dataset.positives()},
                   {"full_instances", result.full_instances},
                   {"full_positives", result.full_positives},
                   {"validation_violations", validation.violations.size()}};
    if (!config.out.empty()) {
        fs::create_directories(config.out);
        write_instances_csv(result.dataset, config.out / "instances.csv");
        write_json(config.out / "meta.json", result.meta);
    }
    return result;
}

nlohmann::json TrainEvalConfig::to_json() const {
    nlohmann::json h = nlohmann::json::object();
    for (const auto& [kind, values] : hyper) h[kind] = values;
    return {{"models", models},
            {"boost", std::vector<std::string>(boost.begin(), boost.end())},
            {"t_max", t_max},
            {"ensemble", ensemble},
            {"auto_members", auto_members},
            {"weight_mode", to_string(weight_mode)},
            {"ensemble_cv_folds", ensemble_cv_folds},
            {"cv_folds", cv_folds},
            {"seed", seed},
            {"subsample_inside_folds", subsample_inside_folds},
            {"ratio", ratio},
            {"hyper", h}};
}

void add_hyper_override(TrainEvalConfig& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq || dot == 0 || dot + 1 == eq) {
        throw ConfigError("hyperparameter override '" + assignment + "' must look like kind.key=value");
    }
    const std::string kind = assignment.substr(0, dot);
    const std::string key = assignment.substr(dot + 1, eq - dot - 1);
    const std::string text = assignment.substr(eq + 1);
    if (std::find(learner_kinds().begin(), learner_kinds().end(), kind) == learner_kinds().end()) {
        throw ConfigError("hyperparameter override names unknown learner '" + kind + "'");
    }
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        value = text;
    }
    config.hyper[kind][key] = value;
    make_learner(spec_for_label(config, kind), 0);  // reject unknown keys now
}

LearnerSpec spec_for_label(const TrainEvalConfig& config, const std::string& label) {
    auto plain = [&](const std::string& kind) {
        if (std::find(learner_kinds().begin(), learner_kinds().end(), kind) == learner_kinds().end()) {
            throw ConfigError("unknown model '" + label + "'");
        }
        auto it = config.hyper.find(kind);
        return LearnerSpec{kind, it == config.hyper.end() ? nlohmann::json::object() : it->second};
    };
    constexpr std::string_view prefix = "boosted-";
    if (label.starts_with(prefix)) {
        const LearnerSpec base = plain(label.substr(prefix.size()));
        return LearnerSpec{"boosted", {{"base", base.to_json()}, {"t_max", config.t_max}}};
    }
    return plain(label);
}

namespace {

nlohmann::json model_entry(const ModelResult& m) {
    nlohmann::json j = {{"name", m.name}, {"spec", m.spec.to_json()}, {"ok", m.ok}};
    if (m.ok) {
        j["evaluation"] = m.report.to_json();
    } else {
        j["error"] = m.error;
    }
    return j;
}

std::string format_percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * v);
    return buf;
}

std::string format_auc(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace

std::string format_table(const nlohmann::json& report) {
    std::vector<std::array<std::string, 3>> rows;
    rows.push_back({"Model", "Accuracy", "Area under ROC"});
    for (const auto& m : report.at("models")) {
        if (m.at("ok").get<bool>()) {
            const auto& pooled = m.at("evaluation").at("pooled");
            rows.push_back({m.at("name").get<std::string>(), format_percent(pooled.at("accuracy").get<double>()),
                            format_auc(pooled.at("auc").get<double>())});
        } else {
            rows.push_back({m.at("name").get<std::string>(), "failed", "failed"});
        }
    }
    std::array<std::size_t, 3> width{};
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < 3; ++c) width[c] = std::max(width[c], r[c].size());
    }
    std::ostringstream out;
    auto line = [&](const std::array<std::string, 3>& r) {
        out << r[0] << std::string(width[0] - r[0].size() + 2, ' ');
        out << std::string(width[1] - r[1].size(), ' ') << r[1] << "  ";
        out << std::string(width[2] - r[2].size(), ' ') << r[2] << '\n';
    };
    line(rows[0]);
    out << std::string(width[0] + width[1] + width[2] + 4, '-') << '\n';
    for (std::size_t i = 1; i < rows.size(); ++i) line(rows[i]);
    return out.str();
}

TrainEvalResult run_train_eval(const TrainEvalConfig& config) {
    if (config.out.empty()) throw ConfigError("train-eval needs an output directory");
    if (config.models.empty()) throw ConfigError("no models selected");
    const fs::path instances_path = config.data / "instances.csv";
    const fs::path meta_path = config.data / "meta.json";
    nlohmann::json meta = fs::exists(meta_path) ? read_json(meta_path) : nlohmann::json::object();
    int k = config.k_clusters.value_or(meta.value("k_clusters", 7));
    const Dataset dataset = read_instances_csv(instances_path, k);
    const Table table = to_table(dataset);

    CvOptions cv;
    cv.threads = config.threads;
    if (config.subsample_inside_folds) cv.subsample_ratio = config.ratio;

    TrainEvalResult result;
    std::vector<std::string> labels;
    for (const auto& kind : config.models) {
        labels.push_back(kind);
        if (config.boost.count(kind)) labels.push_back("boosted-" + kind);
    }
    for (const auto& label : labels) {
        ModelResult m;
        m.name = label;
        m.spec = spec_for_label(config, label);
        try {
            m.report = cross_validate(m.spec, table, config.cv_folds, config.seed, cv);
            m.report.model = label;
            m.ok = true;
        } catch (const std::exception& e) {
            m.error = e.what();
            ++result.failures;
        }
        result.models.push_back(std::move(m));
    }

    std::vector<std::string> members = config.ensemble;
    if (config.auto_members > 0) {
        std::vector<const ModelResult*> ranked;
        for (const auto& m : result.models) {
            if (m.ok) ranked.push_back(&m);
        }
        std::stable_sort(ranked.begin(), ranked.end(), [](const ModelResult* a, const ModelResult* b) {
            return a->report.roc.auc > b->report.roc.auc;
        });
        members.clear();
        for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(config.auto_members); ++i) {
            members.push_back(ranked[i]->name);
        }
    }
    if (!members.empty()) {
        std::vector<LearnerSpec> specs;
        nlohmann::json member_json = nlohmann::json::array();
        for (const auto& label : members) {
            specs.push_back(spec_for_label(config, label));
            member_json.push_back(specs.back().to_json());
        }
        ModelResult m;
        m.name = "ensemble";
        m.spec = LearnerSpec{"ensemble",
                             {{"members", member_json},
                              {"weight_mode", to_string(config.weight_mode)},
                              {"cv_folds", config.ensemble_cv_folds}}};
        try {
            m.report = cross_validate(m.spec, table, config.cv_folds, config.seed, cv);
            m.report.model = m.name;
            m.ok = true;
        } catch (const std::exception& e) {
            m.error = e.what();
            ++result.failures;
        }
        result.ensemble_index = result.models.size();
        result.models.push_back(std::move(m));
    }

    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : result.models) models.push_back(model_entry(m));
    result.report = {{"format", "sentinel-report"},
                     {"config", config.to_json()},
                     {"dataset",
                      {{"instances", table.rows()},
                       {"positives", table.positives()},
                       {"k_clusters", k},
                       {"provenance", meta.value("provenance", nlohmann::json::object())}}},
                     {"models", models}};
    result.table = format_table(result.report);

    fs::create_directories(config.out / "models");
    write_json(config.out / "report.json", result.report);
    write_text(config.out / "table.txt", result.table);

    // The ensemble curve is the headline ROC; without one, the best model's.
    const ModelResult* headline = nullptr;
    if (result.ensemble_index && result.models[*result.ensemble_index].ok) {
        headline = &result.models[*result.ensemble_index];
    } else {
        for (const auto& m : result.models) {
            if (m.ok && (!headline || m.report.roc.auc > headline->report.roc.auc)) headline = &m;
        }
    }
    if (headline) {
        write_roc_csv(headline->report.roc, config.out / "roc.csv");
        write_roc_svg(headline->report.roc, headline->name, config.out / "roc.svg");
    }

    nlohmann::json artifacts = nlohmann::json::object();
    for (const auto& m : result.models) {
        if (!m.ok) continue;
        const std::uint64_t model_seed = mix_seed(config.seed, 0x5eed);
        ClassifierPtr model = make_learner(m.spec, model_seed);
        model->fit(table);
        const nlohmann::json metadata = {{"name", m.name},
                                         {"seed", model_seed},
                                         {"hyperparameters", model->hyperparameters()},
                                         {"trained_on", meta.value("provenance", nlohmann::json::object())},
                                         {"instances", table.rows()}};
        const fs::path path = config.out / "models" / (m.name + ".json");
        write_text(path, to_artifact(*model, metadata).dump() + "\n");
    }

    for (const char* name : {"report.json", "table.txt", "roc.csv", "roc.svg"}) {
        if (fs::exists(config.out / name)) artifacts[name] = sha256_file(config.out / name);
    }
    for (const auto& entry : fs::directory_iterator(config.out / "models")) {
        artifacts["models/" + entry.path().filename().string()] = sha256_file(entry.path());
    }
    nlohmann::json manifest = {{"config", config.to_json()},
                               {"data", fs::absolute(config.data).string()},
                               {"out", fs::absolute(config.out).string()},
                               {"threads", config.threads},
                               {"seeds",
                                {{"master", config.seed},
                                 {"cv_folds", config.seed},
                                 {"final_models", mix_seed(config.seed, 0x5eed)}}},
                               {"inputs", {{"instances.csv", sha256_file(instances_path)}}},
                               {"artifacts", artifacts}};
    if (fs::exists(meta_path)) manifest["inputs"]["meta.json"] = sha256_file(meta_path);
    write_json(config.out / "manifest.json", manifest);
    return result;
}

}  // namespace sentinel
