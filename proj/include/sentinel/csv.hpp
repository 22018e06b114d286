#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace sentinel {

// Splits one CSV record into fields. Quoted fields ("a,b", "say ""hi""")
// are unescaped into `scratch`; the returned views point either into `line`
// or into `scratch` and stay valid until the next call.
void split_csv(std::string_view line, std::vector<std::string_view>& fields, std::string& scratch);

// Quotes a field only when it contains a separator, quote or newline.
std::string csv_escape(std::string_view field);

// Line-at-a-time reader with an exact header check. Buffers are reused
// between rows, so steady-state reading does not allocate.
class CsvReader {
public:
    CsvReader(const std::filesystem::path& path, const std::vector<std::string_view>& expected_header);

    // Advances to the next non-empty record. Returns false at end of file.
    bool next();

    const std::vector<std::string_view>& fields() const { return fields_; }
    std::string_view line() const { return line_; }
    std::size_t line_number() const { return line_number_; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::string line_;
    std::string scratch_;
    std::vector<std::string_view> fields_;
    std::size_t line_number_ = 0;
};

}  // namespace sentinel
