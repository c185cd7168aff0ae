#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace spadsim {

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

/// Minimal CSV writer: header on construction, one row per call. Cells are numbers or
/// plain tokens (no quoting needed for anything this library emits).
class CsvWriter {
public:
    CsvWriter(std::ostream& out, std::vector<std::string> columns);

    void row(std::initializer_list<double> values);
    void row(const std::vector<std::string>& cells);

    const std::vector<std::string>& columns() const { return columns_; }

private:
    std::ostream& out_;
    std::vector<std::string> columns_;
};

}  // namespace spadsim
