#include "sketchlab/csvio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "sketchlab/errors.hpp"

namespace sketchlab {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

std::string format_int(std::int64_t v) {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

std::string format_uint(std::uint64_t v) {
    char buf[24];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(columns.size()) {
    if (columns.empty()) throw ConfigError("a CSV needs at least one column");
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i > 0) text_ += ',';
        text_ += columns[i];
    }
    text_ += '\n';
}

void CsvWriter::add(const std::string& cell) {
    if (cell_in_row_ >= columns_) throw StateError("CSV row holds more cells than columns");
    if (cell_in_row_ > 0) text_ += ',';
    text_ += cell;
    ++cell_in_row_;
}

void CsvWriter::end_row() {
    if (cell_in_row_ != columns_) throw StateError("CSV row width does not match the header");
    text_ += '\n';
    cell_in_row_ = 0;
    ++rows_;
}

void CsvWriter::save(const std::string& path) const { write_text_file(path, text_); }

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace sketchlab
