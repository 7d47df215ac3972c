#pragma once

#include <string>
#include <vector>

#include "mfk/measures.hpp"
#include "mfk/micro.hpp"

namespace mfk {

// round-trip-safe decimal formatting for CSV cells
std::string format_double(double v);

void write_atomic_csv(const AtomicMeasure& m, const std::string& path);
AtomicMeasure read_atomic_csv(const std::string& path);

void write_grid_csv(const GridMeasure& g, const std::string& path);

// trajectory CSV: t, i, x_0..x_{d-1}, m
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

// grid samples with a leading t column
struct TimedGrid {
    double t;
    const GridMeasure* grid;
};
void write_grid_samples_csv(const std::vector<TimedGrid>& samples, const std::string& path);

// Minimal self-contained SVG line/step plots; CSV stays the canonical output,
// these are for eyeballing runs.
struct SvgSeries {
    std::vector<double> x, y;
    std::string color = "#1f6fb5";
    bool step = false;  // render as step function (measure densities)
};
void write_svg_plot(const std::vector<SvgSeries>& series, const std::string& title,
                    const std::string& path);

}  // namespace mfk
