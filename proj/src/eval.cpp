#include "sentinel/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "sentinel/error.hpp"
#include "sentinel/features.hpp"
#include "sentinel/random.hpp"

namespace sentinel {

double ConfusionMatrix::accuracy() const {
    const auto n = total();
    return n == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(n);
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
}

nlohmann::json ConfusionMatrix::to_json() const { return {{"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}}; }

ConfusionMatrix confusion_at_threshold(std::span<const double> scores, std::span<const int> labels, double threshold) {
    if (scores.size() != labels.size()) {
        throw DataError("confusion matrix: " + std::to_string(scores.size()) + " scores but " +
                        std::to_string(labels.size()) + " labels");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= threshold;
        if (labels[i]) {
            (predicted ? cm.tp : cm.fn) += 1;
        } else {
            (predicted ? cm.fp : cm.tn) += 1;
        }
    }
    return cm;
}

namespace {

nlohmann::json finite_or_string(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
}

}  // namespace

nlohmann::json RocCurve::to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : points) pts.push_back({{"fpr", p.fpr}, {"tpr", p.tpr}, {"threshold", finite_or_string(p.threshold)}});
    return {{"auc", auc}, {"points", pts}};
}

RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DataError("ROC: scores and labels differ in length");
    std::uint64_t pos = 0;
    for (int y : labels) pos += y ? 1 : 0;
    const std::uint64_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) throw DegenerateError("ROC: AUC is undefined when only one class is present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve roc;
    roc.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    // Integer trapezoid: area * 2PN = sum of dfp * (tp_prev + tp_cur).
    std::uint64_t tp = 0, fp = 0, twice_area = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        const std::uint64_t tp_prev = tp, fp_prev = fp;
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] ? tp : fp) += 1;
            ++i;
        }
        twice_area += (fp - fp_prev) * (tp_prev + tp);
        roc.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                              static_cast<double>(tp) / static_cast<double>(pos), s});
    }
    roc.auc = static_cast<double>(twice_area) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
    return roc;
}

void write_roc_csv(const RocCurve& roc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "threshold,fpr,tpr\n";
    char buf[128];
    for (const auto& p : roc.points) {
        if (std::isfinite(p.threshold)) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.threshold, p.fpr, p.tpr);
        } else {
            std::snprintf(buf, sizeof buf, "inf,%.17g,%.17g\n", p.fpr, p.tpr);
        }
        out << buf;
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void write_roc_svg(const RocCurve& roc, const std::string& title, const std::filesystem::path& path) {
    constexpr double kSize = 400.0, kPad = 50.0;
    auto px = [&](double fpr) { return kPad + fpr * kSize; };
    auto py = [&](double tpr) { return kPad + (1.0 - tpr) * kSize; };
    std::ostringstream svg;
    svg.setf(std::ios::fixed);
    svg.precision(2);
    const double full = kSize + 2 * kPad;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << full << "\" height=\"" << full
        << "\" viewBox=\"0 0 " << full << ' ' << full << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\"" << kSize << "\" height=\"" << kSize
        << "\" fill=\"none\" stroke=\"black\"/>\n"
        << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
        << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n"
        << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (const auto& p : roc.points) svg << px(p.fpr) << ',' << py(p.tpr) << ' ';
    svg << "\"/>\n";
    svg.precision(4);
    svg << "<text x=\"" << kPad << "\" y=\"30\" font-family=\"sans-serif\" font-size=\"14\">" << title
        << " (AUC " << roc.auc << ")</text>\n"
        << "<text x=\"" << kPad + kSize / 2 << "\" y=\"" << full - 15
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">false positive rate</text>\n"
        << "<text x=\"15\" y=\"" << kPad + kSize / 2 << "\" font-family=\"sans-serif\" font-size=\"12\" "
        << "text-anchor=\"middle\" transform=\"rotate(-90 15 " << kPad + kSize / 2
        << ")\">true positive rate</text>\n</svg>\n";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << svg.str();
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("cross-validation needs k >= 2");
    if (static_cast<std::size_t>(k) > labels.size()) {
        throw ConfigError("cross-validation k = " + std::to_string(k) + " exceeds the " +
                          std::to_string(labels.size()) + " instances");
    }
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
    Rng rng(seed);
    rng.shuffle(pos);
    rng.shuffle(neg);

    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    std::size_t next = 0;
    for (auto idx : pos) {
        folds[next].push_back(idx);
        next = (next + 1) % folds.size();
    }
    for (auto idx : neg) {
        folds[next].push_back(idx);
        next = (next + 1) % folds.size();
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

std::vector<std::size_t> training_indices(const std::vector<std::vector<std::size_t>>& folds, std::size_t f) {
    std::vector<std::size_t> out;
    for (std::size_t g = 0; g < folds.size(); ++g) {
        if (g != f) out.insert(out.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

nlohmann::json FoldResult::to_json() const {
    nlohmann::json j = {{"fold", index},
                        {"ok", ok},
                        {"train_size", train_size},
                        {"test_size", test_size},
                        {"test_positives", test_positives}};
    if (!ok) {
        j["error"] = error;
        return j;
    }
    j["confusion"] = confusion.to_json();
    j["accuracy"] = accuracy;
    j["auc"] = auc ? nlohmann::json(*auc) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json fj = nlohmann::json::array();
    for (const auto& f : folds) fj.push_back(f.to_json());
    return {{"model", model},
            {"spec", spec},
            {"k", k},
            {"seed", seed},
            {"folds", fj},
            {"failed_folds", failed_folds},
            {"folds_without_positives", folds_without_positives},
            {"pooled",
             {{"confusion", pooled.to_json()},
              {"accuracy", pooled_accuracy},
              {"auc", roc.auc}}},
            {"mean_fold_accuracy", mean_fold_accuracy},
            {"mean_fold_auc", mean_fold_auc ? nlohmann::json(*mean_fold_auc) : nlohmann::json(nullptr)}};
}

EvalReport cross_validate(const LearnerSpec& spec, const Table& data, int k, std::uint64_t seed,
                          const CvOptions& options) {
    EvalReport r = cross_validate(spec.kind, factory_for(spec), data, k, seed, options);
    r.spec = spec.to_json();
    return r;
}

EvalReport cross_validate(const std::string& name, const LearnerFactory& factory, const Table& data, int k,
                          std::uint64_t seed, const CvOptions& options) {
    const auto folds = stratified_folds(data.labels(), k, seed);
    EvalReport report;
    report.model = name;
    report.k = k;
    report.seed = seed;
    report.folds.resize(folds.size());
    report.scores.assign(data.rows(), std::numeric_limits<double>::quiet_NaN());

    auto run_fold = [&](std::size_t f) {
        FoldResult& res = report.folds[f];
        res.index = static_cast<int>(f);
        const auto& test = folds[f];
        auto train = training_indices(folds, f);
        const std::uint64_t fold_seed = mix_seed(seed, f);
        res.test_size = test.size();
        for (auto i : test) res.test_positives += data.label(i) ? 1 : 0;
        try {
            Table train_table = data.subset(train);
            if (options.subsample_ratio > 0) {
                const auto keep =
                    spread_subsample_indices(train_table.labels(), options.subsample_ratio, mix_seed(fold_seed, 1));
                train_table = train_table.subset(keep);
            }
            res.train_size = train_table.rows();
            ClassifierPtr model = factory(fold_seed);
            model->fit(train_table);
            std::vector<double> s(test.size());
            std::vector<int> y(test.size());
            for (std::size_t j = 0; j < test.size(); ++j) {
                s[j] = model->predict_proba(data.row(test[j]));
                y[j] = data.label(test[j]);
                if (!(s[j] >= 0.0 && s[j] <= 1.0)) throw Error("model emitted probability outside [0, 1]");
            }
            res.confusion = confusion_at_threshold(s, y);
            res.accuracy = res.confusion.accuracy();
            if (res.test_positives > 0 && res.test_positives < test.size()) res.auc = roc_auc(s, y).auc;
            for (std::size_t j = 0; j < test.size(); ++j) report.scores[test[j]] = s[j];
        } catch (const std::exception& e) {
            res.ok = false;
            res.error = e.what();
        }
    };

    const int threads = std::clamp(options.threads, 1, static_cast<int>(folds.size()));
    if (threads == 1) {
        for (std::size_t f = 0; f < folds.size(); ++f) run_fold(f);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t f = next++; f < folds.size(); f = next++) run_fold(f);
            });
        }
    }

    std::vector<double> pooled_scores;
    std::vector<int> pooled_labels;
    double acc_sum = 0.0, auc_sum = 0.0;
    std::size_t auc_count = 0;
    for (const auto& f : report.folds) {
        if (f.test_positives == 0) ++report.folds_without_positives;
        if (!f.ok) {
            ++report.failed_folds;
            continue;
        }
        report.pooled += f.confusion;
        acc_sum += f.accuracy;
        if (f.auc) {
            auc_sum += *f.auc;
            ++auc_count;
        }
    }
    if (report.failed_folds * 2 >= report.folds.size()) {
        std::string first;
        for (const auto& f : report.folds) {
            if (!f.ok) {
                first = f.error;
                break;
            }
        }
        throw Error("cross-validation of " + name + " failed in " + std::to_string(report.failed_folds) + " of " +
                    std::to_string(report.folds.size()) + " folds: " + first);
    }
    for (std::size_t i = 0; i < data.rows(); ++i) {
        if (!std::isnan(report.scores[i])) {
            pooled_scores.push_back(report.scores[i]);
            pooled_labels.push_back(data.label(i));
        }
    }
    const std::size_t ok_folds = report.folds.size() - report.failed_folds;
    report.pooled_accuracy = report.pooled.accuracy();
    report.mean_fold_accuracy = acc_sum / static_cast<double>(ok_folds);
    if (auc_count > 0) report.mean_fold_auc = auc_sum / static_cast<double>(auc_count);
    const bool both = std::count(pooled_labels.begin(), pooled_labels.end(), 1) > 0 &&
                      std::count(pooled_labels.begin(), pooled_labels.end(), 0) > 0;
    if (both) {
        report.roc = roc_auc(pooled_scores, pooled_labels);
    } else {
        report.roc = RocCurve{{{0, 0, std::numeric_limits<double>::infinity()}, {1, 1, 0}}, 0.5};
    }
    return report;
}

}  // namespace sentinel
