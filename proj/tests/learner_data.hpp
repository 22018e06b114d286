#pragma once

#include <vector>

#include "sentinel/random.hpp"
#include "sentinel/table.hpp"

// Small shared datasets for learner tests.
inline sentinel::Table make_table(const sentinel::Schema& schema, const std::vector<std::vector<double>>& rows,
                                  const std::vector<int>& labels) {
    sentinel::Table t(schema);
    for (std::size_t i = 0; i < rows.size(); ++i) t.add_row(rows[i], labels[i]);
    return t;
}

// Two noisy continuous features, a 2-level and a 4-level categorical; the
// label depends on all of them so every learner has something to fit.
inline sentinel::Table mixed_table(std::size_t n, std::uint64_t seed) {
    sentinel::Rng rng(seed);
    sentinel::Table t({{"a", 0}, {"b", 0}, {"flag", 2}, {"group", 4}});
    for (std::size_t i = 0; i < n; ++i) {
        const int y = i % 3 == 0 ? 1 : 0;
        const double a = rng.normal(y ? 1.0 : -0.5, 1.0);
        const double b = rng.normal(y ? -0.5 : 0.5, 1.5);
        const double flag = rng.bernoulli(y ? 0.8 : 0.3) ? 1.0 : 0.0;
        const double group = static_cast<double>(rng.below(4));
        const std::vector<double> row{a, b, flag, group};
        t.add_row(row, y);
    }
    return t;
}
