#include "mfk/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mfk {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    return f;
}

}  // namespace

void write_atomic_csv(const AtomicMeasure& m, const std::string& path) {
    auto f = open_out(path);
    for (int k = 0; k < m.dim; ++k) f << "position_" << k << ",";
    f << "weight\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (int k = 0; k < m.dim; ++k)
            f << format_double(m.positions[i * static_cast<std::size_t>(m.dim) + k]) << ",";
        f << format_double(m.weights[i]) << "\n";
    }
}

AtomicMeasure read_atomic_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(f, line)) throw std::runtime_error("empty csv: " + path);
    int dim = 0;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            if (cell.rfind("position_", 0) == 0) ++dim;
        }
    }
    if (dim < 1) throw std::runtime_error("not an atomic-measure csv: " + path);
    AtomicMeasure m;
    m.dim = dim;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<int>(row.size()) != dim + 1)
            throw std::runtime_error("bad csv row in " + path);
        m.append({row.data(), static_cast<std::size_t>(dim)}, row.back());
    }
    return m;
}

void write_grid_csv(const GridMeasure& g, const std::string& path) {
    auto f = open_out(path);
    f << "cell_left,cell_right,mass,density\n";
    for (int j = 0; j < g.cells(); ++j) {
        f << format_double(g.cell_left(j)) << "," << format_double(g.cell_right(j)) << ","
          << format_double(g.mass[static_cast<std::size_t>(j)]) << ","
          << format_double(g.density(j)) << "\n";
    }
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    auto f = open_out(path);
    const int d = traj.states.empty() ? 1 : traj.states.front().dim;
    f << "t,i";
    for (int k = 0; k < d; ++k) f << ",x_" << k;
    f << ",m\n";
    for (const ParticleState& s : traj.states) {
        for (int i = 0; i < s.count(); ++i) {
            f << format_double(s.time) << "," << i;
            for (int k = 0; k < d; ++k)
                f << "," << format_double(s.positions[static_cast<std::size_t>(i) * d + k]);
            f << "," << format_double(s.weights[static_cast<std::size_t>(i)]) << "\n";
        }
    }
}

void write_grid_samples_csv(const std::vector<TimedGrid>& samples, const std::string& path) {
    auto f = open_out(path);
    f << "t,cell_left,cell_right,mass,density\n";
    for (const TimedGrid& s : samples) {
        const GridMeasure& g = *s.grid;
        for (int j = 0; j < g.cells(); ++j) {
            f << format_double(s.t) << "," << format_double(g.cell_left(j)) << ","
              << format_double(g.cell_right(j)) << ","
              << format_double(g.mass[static_cast<std::size_t>(j)]) << ","
              << format_double(g.density(j)) << "\n";
        }
    }
}

void write_svg_plot(const std::vector<SvgSeries>& series, const std::string& title,
                    const std::string& path) {
    const double width = 720, height = 480, ml = 60, mr = 20, mt = 40, mb = 40;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            if (first) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                first = false;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin + 1;
    double yspan = ymax - ymin;
    ymin -= 0.05 * yspan;
    ymax += 0.05 * yspan;

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
    auto py = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };

    auto f = open_out(path);
    f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' viewBox='0 0 " << width << " " << height << "'>\n";
    f << "<rect width='100%' height='100%' fill='white'/>\n";
    f << "<text x='" << width / 2 << "' y='24' text-anchor='middle' font-size='15'>" << title
      << "</text>\n";
    // axes
    f << "<line x1='" << ml << "' y1='" << height - mb << "' x2='" << width - mr << "' y2='"
      << height - mb << "' stroke='black'/>\n";
    f << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << height - mb
      << "' stroke='black'/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        double tx = xmin + (xmax - xmin) * tick / 4.0;
        double ty = ymin + (ymax - ymin) * tick / 4.0;
        f << "<text x='" << px(tx) << "' y='" << height - mb + 16
          << "' text-anchor='middle' font-size='11'>" << format_double(tx).substr(0, 8)
          << "</text>\n";
        f << "<text x='" << ml - 6 << "' y='" << py(ty) + 4
          << "' text-anchor='end' font-size='11'>" << format_double(ty).substr(0, 8)
          << "</text>\n";
    }
    for (const auto& s : series) {
        if (s.x.empty()) continue;
        f << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.2' points='";
        if (s.step) {
            for (std::size_t i = 0; i + 1 < s.x.size(); ++i) {
                f << px(s.x[i]) << "," << py(s.y[i]) << " ";
                f << px(s.x[i + 1]) << "," << py(s.y[i]) << " ";
            }
            if (!s.x.empty()) f << px(s.x.back()) << "," << py(s.y.back());
        } else {
            for (std::size_t i = 0; i < s.x.size(); ++i)
                f << px(s.x[i]) << "," << py(s.y[i]) << " ";
        }
        f << "'/>\n";
    }
    f << "</svg>\n";
}

}  // namespace mfk
