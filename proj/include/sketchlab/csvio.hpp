#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sketchlab {

// Locale-free shortest-round-trip number formatting (deterministic CSV).
std::string format_double(double v);
std::string format_int(std::int64_t v);
std::string format_uint(std::uint64_t v);

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> columns);

    void add(const std::string& cell);
    void add(double v) { add(format_double(v)); }
    void add(std::int64_t v) { add(format_int(v)); }
    void add(std::uint64_t v) { add(format_uint(v)); }
    void add(int v) { add(static_cast<std::int64_t>(v)); }
    void add(std::uint32_t v) { add(static_cast<std::uint64_t>(v)); }
    void end_row();

    const std::string& text() const { return text_; }
    std::size_t rows() const { return rows_; }
    void save(const std::string& path) const;  // throws IoError

private:
    std::size_t columns_ = 0;
    std::size_t cell_in_row_ = 0;
    std::size_t rows_ = 0;
    std::string text_;
};

void write_text_file(const std::string& path, const std::string& text);

}  // namespace sketchlab
