#include "sentinel/table.hpp"

#include <cmath>

#include "sentinel/error.hpp"

namespace sentinel {

nlohmann::json schema_to_json(const Schema& schema) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& c : schema) j.push_back({{"name", c.name}, {"levels", c.levels}});
    return j;
}

Schema schema_from_json(const nlohmann::json& j) {
    Schema s;
    for (const auto& c : j) s.push_back({c.at("name").get<std::string>(), c.at("levels").get<int>()});
    return s;
}

void Table::add_row(std::span<const double> values, int label) {
    if (values.size() != cols()) throw DataError("row width does not match schema");
    if (label != 0 && label != 1) throw DataError("labels must be 0 or 1");
    values_.insert(values_.end(), values.begin(), values.end());
    labels_.push_back(label);
}

std::size_t Table::positives() const {
    std::size_t n = 0;
    for (int y : labels_) n += static_cast<std::size_t>(y);
    return n;
}

Table Table::subset(std::span<const std::size_t> indices) const {
    Table t(schema_);
    t.values_.reserve(indices.size() * cols());
    t.labels_.reserve(indices.size());
    for (std::size_t i : indices) {
        const auto r = row(i);
        t.values_.insert(t.values_.end(), r.begin(), r.end());
        t.labels_.push_back(labels_[i]);
    }
    return t;
}

OneHotEncoder::OneHotEncoder(const Schema& schema) : schema_(schema) {
    for (const auto& c : schema_) width_ += c.levels > 2 ? static_cast<std::size_t>(c.levels) : 1;
}

void OneHotEncoder::encode(std::span<const double> row, std::span<double> out) const {
    std::size_t k = 0;
    for (std::size_t j = 0; j < schema_.size(); ++j) {
        const int levels = schema_[j].levels;
        if (levels == 0) {
            out[k++] = row[j];
        } else if (levels <= 2) {
            out[k++] = row[j] != 0.0 ? 1.0 : 0.0;
        } else {
            for (int l = 0; l < levels; ++l) out[k++] = row[j] == static_cast<double>(l) ? 1.0 : 0.0;
        }
    }
}

std::vector<double> OneHotEncoder::encode(std::span<const double> row) const {
    std::vector<double> out(width_);
    encode(row, out);
    return out;
}

std::vector<double> OneHotEncoder::encode(const Table& table) const {
    std::vector<double> out(table.rows() * width_);
    for (std::size_t i = 0; i < table.rows(); ++i) {
        encode(table.row(i), std::span<double>(out.data() + i * width_, width_));
    }
    return out;
}

Standardizer Standardizer::fit(std::span<const double> matrix, std::size_t width, std::span<const double> weights) {
    Standardizer s;
    s.mean.assign(width, 0.0);
    s.scale.assign(width, 1.0);
    const std::size_t n = weights.size();
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw DegenerateError("instance weights sum to zero");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < width; ++j) s.mean[j] += weights[i] * matrix[i * width + j];
    }
    for (auto& m : s.mean) m /= total;
    std::vector<double> var(width, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < width; ++j) {
            const double d = matrix[i * width + j] - s.mean[j];
            var[j] += weights[i] * d * d;
        }
    }
    for (std::size_t j = 0; j < width; ++j) {
        const double sd = std::sqrt(var[j] / total);
        s.scale[j] = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

void Standardizer::apply(std::span<double> row) const {
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean[j]) / scale[j];
}

nlohmann::json Standardizer::to_json() const { return {{"mean", mean}, {"scale", scale}}; }

Standardizer Standardizer::from_json(const nlohmann::json& j) {
    Standardizer s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.scale = j.at("scale").get<std::vector<double>>();
    return s;
}

}  // namespace sentinel
