#include "sentinel/csv.hpp"

#include "sentinel/error.hpp"

namespace sentinel {

void split_csv(std::string_view line, std::vector<std::string_view>& fields, std::string& scratch) {
    fields.clear();
    if (line.find('"') == std::string_view::npos) {
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string_view::npos) {
                fields.push_back(line.substr(start));
                return;
            }
            fields.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
    }

    // Slow path. Reserve up front so views into scratch stay valid.
    scratch.clear();
    scratch.reserve(line.size());
    std::size_t i = 0;
    while (true) {
        const std::size_t begin = scratch.size();
        if (i < line.size() && line[i] == '"') {
            ++i;
            while (i < line.size()) {
                if (line[i] == '"') {
                    if (i + 1 < line.size() && line[i + 1] == '"') {
                        scratch.push_back('"');
                        i += 2;
                        continue;
                    }
                    ++i;
                    break;
                }
                scratch.push_back(line[i++]);
            }
            while (i < line.size() && line[i] != ',') scratch.push_back(line[i++]);
        } else {
            while (i < line.size() && line[i] != ',') scratch.push_back(line[i++]);
        }
        fields.emplace_back(scratch.data() + begin, scratch.size() - begin);
        if (i >= line.size()) return;
        ++i;  // comma
    }
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

CsvReader::CsvReader(const std::filesystem::path& path, const std::vector<std::string_view>& expected)
    : path_(path), in_(path) {
    if (!in_) throw IoError("cannot open " + path.string());
    if (!std::getline(in_, line_)) throw SchemaError(path.string() + ": empty file, header expected");
    ++line_number_;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    split_csv(line_, fields_, scratch_);
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i >= fields_.size()) {
            throw SchemaError(path.string() + ": missing header column '" + std::string(expected[i]) + "'");
        }
        if (fields_[i] != expected[i]) {
            throw SchemaError(path.string() + ": header column " + std::to_string(i + 1) + " should be '" +
                              std::string(expected[i]) + "', found '" + std::string(fields_[i]) + "'");
        }
    }
    if (fields_.size() > expected.size()) {
        throw SchemaError(path.string() + ": unexpected header column '" +
                          std::string(fields_[expected.size()]) + "'");
    }
}

bool CsvReader::next() {
    while (std::getline(in_, line_)) {
        ++line_number_;
        if (!line_.empty() && line_.back() == '\r') line_.pop_back();
        if (line_.empty()) continue;
        split_csv(line_, fields_, scratch_);
        return true;
    }
    return false;
}

}  // namespace sentinel
