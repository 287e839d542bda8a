#pragma once

#include <string>
#include <vector>

namespace sketchlab {

// Minimal static line chart; every plotted point mirrors one CSV row.
class SvgChart {
public:
    SvgChart(std::string title, std::string x_label, std::string y_label);

    void add_series(const std::string& name, std::vector<double> xs, std::vector<double> ys);
    void add_hline(double y, const std::string& name);

    std::string render() const;
    void save(const std::string& path) const;  // throws IoError

private:
    struct Series {
        std::string name;
        std::vector<double> xs, ys;
        bool hline = false;
    };
    std::string title_, x_label_, y_label_;
    std::vector<Series> series_;
};

}  // namespace sketchlab
