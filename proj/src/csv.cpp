#include "spadsim/csv.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace spadsim {

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::ostream& out, std::vector<std::string> columns) : out_(out), columns_(std::move(columns)) {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        out_ << (i ? "," : "") << columns_[i];
    }
    out_ << '\n';
}

void CsvWriter::row(std::initializer_list<double> values) {
    if (values.size() != columns_.size()) {
        throw std::logic_error("csv row width does not match header");
    }
    std::size_t i = 0;
    for (const double v : values) {
        out_ << (i++ ? "," : "") << format_double(v);
    }
    out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) {
        throw std::logic_error("csv row width does not match header");
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out_ << (i ? "," : "") << cells[i];
    }
    out_ << '\n';
}

}  // namespace spadsim
