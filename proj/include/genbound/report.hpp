#pragma once

#include <string>
#include <vector>

#include "genbound/bounds.hpp"

namespace genbound {

// One CSV row; unset numeric fields serialize as empty cells.
struct CsvRow {
    std::string bound_name;
    double lambda = 0.0;
    double lr = 0.0;
    int batch_size = 0;
    double trajectory = 0.0;
    double penalty = 0.0;
    double flatness = 0.0;
    double sigma_star = 0.0;
    double total = 0.0;
    double measured_gap = 0.0;
    int k = 0;
    int n = 0;
    int T = 0;
    std::uint64_t seed = 0;
    std::string experiment;  // extension rows only
    int trials = 0;
    double stderr_ = 0.0;
    bool has_stats = false;  // experiment/trials/stderr populated
};

CsvRow row_from_report(const BoundReport& rep, double lr, int batch, std::uint64_t seed);

// Fixed, versioned schema: a "# genbound-csv v1" comment line followed by
// the header row. Numbers are printed with %.17g so identical inputs give
// byte-identical files.
std::string csv_header();
std::string csv_line(const CsvRow& row);
void write_csv(const std::string& path, const std::vector<CsvRow>& rows);
std::vector<CsvRow> parse_csv(const std::string& path);

// Minimal SVG line chart: one polyline per series over a shared x axis.
struct SvgSeries {
    std::string label;
    std::vector<double> y;
};
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::vector<double>& x, const std::vector<SvgSeries>& series);

}  // namespace genbound
