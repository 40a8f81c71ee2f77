#include "genbound/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace genbound {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

CsvRow row_from_report(const BoundReport& rep, double lr, int batch, std::uint64_t seed) {
    CsvRow row;
    row.bound_name = rep.name;
    row.lambda = rep.lambda;
    row.lr = lr;
    row.batch_size = batch;
    row.trajectory = rep.trajectory;
    row.penalty = rep.penalty;
    row.flatness = rep.flatness;
    row.sigma_star = rep.sigma_star;
    row.total = rep.total;
    row.measured_gap = rep.measured_gap;
    row.k = rep.k;
    row.n = rep.n;
    row.T = rep.T;
    row.seed = seed;
    return row;
}

std::string csv_header() {
    return "# genbound-csv v1\n"
           "bound_name,lambda,lr,batch_size,trajectory,penalty,flatness,sigma_star,total,"
           "measured_gap,k,n,T,seed,experiment,trials,stderr\n";
}

std::string csv_line(const CsvRow& r) {
    std::ostringstream os;
    os << r.bound_name << ',' << fmt(r.lambda) << ',' << fmt(r.lr) << ',' << r.batch_size << ','
       << fmt(r.trajectory) << ',' << fmt(r.penalty) << ',' << fmt(r.flatness) << ','
       << fmt(r.sigma_star) << ',' << fmt(r.total) << ',' << fmt(r.measured_gap) << ',' << r.k
       << ',' << r.n << ',' << r.T << ',' << r.seed << ',';
    if (r.has_stats)
        os << r.experiment << ',' << r.trials << ',' << fmt(r.stderr_);
    else
        os << ",,";
    os << '\n';
    return os.str();
}

void write_csv(const std::string& path, const std::vector<CsvRow>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_csv: cannot open " + path);
    f << csv_header();
    for (const auto& r : rows) f << csv_line(r);
}

std::vector<CsvRow> parse_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("parse_csv: cannot open " + path);
    std::vector<CsvRow> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;  // header row
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        while (cells.size() < 17) cells.emplace_back();
        CsvRow r;
        r.bound_name = cells[0];
        r.lambda = std::stod(cells[1]);
        r.lr = std::stod(cells[2]);
        r.batch_size = std::stoi(cells[3]);
        r.trajectory = std::stod(cells[4]);
        r.penalty = std::stod(cells[5]);
        r.flatness = std::stod(cells[6]);
        r.sigma_star = std::stod(cells[7]);
        r.total = std::stod(cells[8]);
        r.measured_gap = std::stod(cells[9]);
        r.k = std::stoi(cells[10]);
        r.n = std::stoi(cells[11]);
        r.T = std::stoi(cells[12]);
        r.seed = std::stoull(cells[13]);
        if (!cells[14].empty()) {
            r.experiment = cells[14];
            r.trials = cells[15].empty() ? 0 : std::stoi(cells[15]);
            r.stderr_ = cells[16].empty() ? 0.0 : std::stod(cells[16]);
            r.has_stats = true;
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_svg_chart(const std::string& path, const std::string& title,
                     const std::vector<double>& x, const std::vector<SvgSeries>& series) {
    const int W = 720, H = 480, M = 60;
    double xmin = x.empty() ? 0.0 : x.front(), xmax = x.empty() ? 1.0 : x.front();
    for (double v : x) {
        xmin = std::min(xmin, v);
        xmax = std::max(xmax, v);
    }
    double ymin = 0.0, ymax = 1e-300;
    for (const auto& s : series)
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    auto px = [&](double v) { return M + (v - xmin) / (xmax - xmin) * (W - 2 * M); };
    auto py = [&](double v) { return H - M - (v - ymin) / (ymax - ymin) * (H - 2 * M); };

    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"};
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_svg_chart: cannot open " + path);
    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    f << "<rect width='100%' height='100%' fill='white'/>\n";
    f << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";
    f << "<line x1='" << M << "' y1='" << H - M << "' x2='" << W - M << "' y2='" << H - M
      << "' stroke='black'/>\n";
    f << "<line x1='" << M << "' y1='" << M << "' x2='" << M << "' y2='" << H - M
      << "' stroke='black'/>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        f << "<polyline fill='none' stroke='" << colors[s % 5] << "' stroke-width='2' points='";
        for (std::size_t i = 0; i < series[s].y.size() && i < x.size(); ++i)
            f << px(x[i]) << ',' << py(series[s].y[i]) << ' ';
        f << "'/>\n";
        f << "<text x='" << W - M + 4 << "' y='" << M + 18 * double(s) << "' font-size='12' fill='"
          << colors[s % 5] << "'>" << series[s].label << "</text>\n";
    }
    f << "</svg>\n";
}

}  // namespace genbound
