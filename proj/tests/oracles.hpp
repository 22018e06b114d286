#pragma once

// Independent reference computations, deliberately naive.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "sentinel/table.hpp"

namespace oracle {

// Mann-Whitney over all positive/negative pairs, half credit for ties.
inline double pairwise_auc(std::span<const double> s, std::span<const int> y) {
    double credit = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[i] != 1 || y[j] != 0) continue;
            pairs += 1;
            credit += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
        }
    }
    return credit / pairs;
}

// Standard normal CDF by composite Simpson integration of the density.
inline double normal_cdf(double z) {
    const double b = std::abs(z);
    const int n = 20000;
    const double h = b / n;
    auto pdf = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); };
    double s = pdf(0) + pdf(b);
    for (int i = 1; i < n; ++i) s += pdf(i * h) * (i % 2 ? 4 : 2);
    const double half = s * h / 3.0;
    return z >= 0 ? 0.5 + half : 0.5 - half;
}

inline double relative_error(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Central difference of f along coordinate j.
inline double partial(const std::function<double(std::span<const double>)>& f, std::vector<double> theta, std::size_t j,
                      double h = 1e-5) {
    theta[j] += h;
    const double up = f(theta);
    theta[j] -= 2 * h;
    const double down = f(theta);
    return (up - down) / (2 * h);
}

struct Split {
    int feature = -1;
    double threshold = 0;
    double impurity = 0;
};

// Best weighted-Gini split by scoring every candidate partition
// independently: midpoints for continuous columns, one-vs-rest for
// categorical ones. Earliest candidate within `tie` of the minimum wins.
inline std::optional<Split> best_split(const sentinel::Table& t, std::span<const double> w, double tie) {
    auto score = [&](const std::function<bool(std::size_t)>& left) {
        double lw = 0, lp = 0, rw = 0, rp = 0;
        for (std::size_t i = 0; i < t.rows(); ++i) {
            (left(i) ? lw : rw) += w[i];
            (left(i) ? lp : rp) += w[i] * t.label(i);
        }
        if (lw == 0 || rw == 0) return -1.0;
        auto gini = [](double ww, double p) {
            const double q = p / ww;
            return ww * (1 - q * q - (1 - q) * (1 - q));
        };
        return gini(lw, lp) + gini(rw, rp);
    };
    std::vector<Split> cands;
    for (std::size_t f = 0; f < t.cols(); ++f) {
        const int fi = static_cast<int>(f);
        if (t.schema()[f].categorical()) {
            for (int l = 0; l < t.schema()[f].levels; ++l) {
                const double imp = score([&](std::size_t i) { return t.at(i, f) == l; });
                if (imp >= 0) cands.push_back({fi, static_cast<double>(l), imp});
            }
            continue;
        }
        std::vector<double> vals;
        for (std::size_t i = 0; i < t.rows(); ++i) vals.push_back(t.at(i, f));
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
            const double thr = (vals[k] + vals[k + 1]) / 2;
            const double imp = score([&](std::size_t i) { return t.at(i, f) <= thr; });
            if (imp >= 0) cands.push_back({fi, thr, imp});
        }
    }
    if (cands.empty()) return std::nullopt;
    double best = cands[0].impurity;
    for (const auto& c : cands) best = std::min(best, c.impurity);
    for (const auto& c : cands) {
        if (c.impurity <= best + tie) return c;
    }
    return std::nullopt;
}

}  // namespace oracle
