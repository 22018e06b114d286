#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace sentinel {

// One attribute of the learning table. `levels == 0` marks a continuous
// column; otherwise the column is categorical and holds integer codes in
// [0, levels).
struct Column {
    std::string name;
    int levels = 0;

    bool categorical() const { return levels > 0; }
    friend bool operator==(const Column&, const Column&) = default;
};

using Schema = std::vector<Column>;

nlohmann::json schema_to_json(const Schema& schema);
Schema schema_from_json(const nlohmann::json& j);

// Dense row-major feature matrix with binary labels. Categorical columns
// carry their raw integer code; learners that need a purely numeric design
// matrix go through OneHotEncoder.
class Table {
public:
    Table() = default;
    explicit Table(Schema schema) : schema_(std::move(schema)) {}

    void add_row(std::span<const double> values, int label);

    std::size_t rows() const { return labels_.size(); }
    std::size_t cols() const { return schema_.size(); }
    const Schema& schema() const { return schema_; }

    std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols(), cols()}; }
    double at(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }
    int label(std::size_t i) const { return labels_[i]; }
    const std::vector<int>& labels() const { return labels_; }
    std::size_t positives() const;

    Table subset(std::span<const std::size_t> indices) const;

private:
    Schema schema_;
    std::vector<double> values_;
    std::vector<int> labels_;
};

// Canonical numeric encoding: continuous columns pass through, two-level
// categoricals become one 0/1 indicator, wider categoricals become one
// indicator per level.
class OneHotEncoder {
public:
    OneHotEncoder() = default;
    explicit OneHotEncoder(const Schema& schema);

    std::size_t width() const { return width_; }
    void encode(std::span<const double> row, std::span<double> out) const;
    std::vector<double> encode(std::span<const double> row) const;
    // Encodes the whole table into a row-major matrix of rows() x width().
    std::vector<double> encode(const Table& table) const;

private:
    Schema schema_;
    std::size_t width_ = 0;
};

// Weighted z-normalization with stored scale. Zero-variance columns keep
// scale 1 so they encode to a constant 0.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(std::span<const double> matrix, std::size_t width, std::span<const double> weights);
    void apply(std::span<double> row) const;

    nlohmann::json to_json() const;
    static Standardizer from_json(const nlohmann::json& j);
};

}  // namespace sentinel
