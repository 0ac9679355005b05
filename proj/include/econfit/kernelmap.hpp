#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "econfit/csv.hpp"
#include "econfit/error.hpp"
#include "econfit/growth_panel.hpp"
#include "econfit/strings.hpp"

namespace econfit {

struct NwPoint {
    std::array<double, 2> x{};
    double y = 0.0;
};

struct NwEstimate {
    double value = 0.0;  // NaN when unsupported
    double weight = 0.0; // effective weight, sum of kernel weights
    bool supported = false;
};

// Nadaraya-Watson estimate with a product Gaussian kernel:
//   w_i = exp(-sum_d (q_d - x_{i,d})^2 / (2 h_d^2)),  yhat = sum w_i y_i / sum w_i.
// Summation is sequential by point index so results are bit-stable. A total
// weight that underflows to zero is a no-support signal, not an error.
inline NwEstimate nw_estimate(std::span<const NwPoint> points,
                              std::array<double, 2> query,
                              std::array<double, 2> bandwidths) {
    if (points.empty()) {
        throw validation_error("nw_estimate: need at least one point");
    }
    if (!(bandwidths[0] > 0.0) || !(bandwidths[1] > 0.0)) {
        throw validation_error("nw_estimate: bandwidths must be > 0");
    }
    const double inv_2h0sq = 1.0 / (2.0 * bandwidths[0] * bandwidths[0]);
    const double inv_2h1sq = 1.0 / (2.0 * bandwidths[1] * bandwidths[1]);
    // Centering on the first response keeps the weighted mean exact for a
    // constant response and improves conditioning for nearly constant ones.
    const double y0 = points[0].y;
    double weight_sum = 0.0;
    double weighted_dy = 0.0;
    for (const NwPoint& pt : points) {
        double d0 = query[0] - pt.x[0];
        double d1 = query[1] - pt.x[1];
        double w = std::exp(-(d0 * d0 * inv_2h0sq + d1 * d1 * inv_2h1sq));
        weight_sum += w;
        weighted_dy += w * (pt.y - y0);
    }
    NwEstimate est;
    est.weight = weight_sum;
    if (weight_sum > 0.0) {
        est.value = y0 + weighted_dy / weight_sum;
        est.supported = true;
    } else {
        est.value = std::numeric_limits<double>::quiet_NaN();
    }
    return est;
}

enum class Transform { none, log };

// Column selector plus the transform applied to it before smoothing.
struct VariableSpec {
    std::string column;
    Transform transform = Transform::none;
    std::string display_name() const {
        return transform == Transform::log ? "log_" + column : column;
    }
};

// Resolves a variable name against the growth-panel columns; "log_<col>"
// falls back to an on-the-fly log of <col> when no such column exists.
inline VariableSpec resolve_variable(const std::string& name) {
    if (GrowthPanel::has_column(name)) {
        return VariableSpec{name, Transform::none};
    }
    if (name.rfind("log_", 0) == 0) {
        std::string base = name.substr(4);
        if (GrowthPanel::has_column(base)) {
            return VariableSpec{base, Transform::log};
        }
    }
    auto candidates = GrowthPanel::numeric_column_names();
    throw validation_error("unknown variable '" + name + "'; did you mean '" +
                           nearest_name(name, candidates) + "'?");
}

struct GridSpec {
    std::size_t nx = 100;
    std::size_t ny = 100;
    std::optional<std::pair<double, double>> x_range; // defaults to data range
    std::optional<std::pair<double, double>> y_range;
};

struct BandwidthRule {
    enum class Kind { scott, fixed };
    Kind kind = Kind::scott;
    std::array<double, 2> fixed{0.0, 0.0};

    static BandwidthRule scott() { return BandwidthRule{}; }
    static BandwidthRule fixed_bandwidths(double hx, double hy) {
        return BandwidthRule{Kind::fixed, {hx, hy}};
    }
};

struct KernelSurface {
    std::vector<double> x_axis; // strictly increasing grid coordinates
    std::vector<double> y_axis;
    std::vector<double> estimates;      // row-major over (x, y), NaN when unsupported
    std::vector<double> weights;        // effective weight per cell
    std::vector<std::uint8_t> support;  // 1 where effective weight >= cutoff
    std::array<double, 2> bandwidths{0.0, 0.0};
    std::size_t n_points = 0;
    std::size_t n_dropped = 0; // rows lost to listwise deletion / bad transforms
    std::string x_name;
    std::string y_name;
    std::string target_name;

    double estimate_at(std::size_t ix, std::size_t iy) const {
        return estimates[ix * y_axis.size() + iy];
    }
    bool supported_at(std::size_t ix, std::size_t iy) const {
        return support[ix * y_axis.size() + iy] != 0;
    }
};

namespace detail {

// A cell whose effective weight falls below this multiple of n carries no
// real sample information and is masked out of the surface.
inline constexpr double k_support_cutoff_per_point = 1e-6;

inline double apply_transform(double v, Transform t) {
    return t == Transform::log ? std::log(v) : v;
}

inline double sample_std(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) {
        mean += x;
    }
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

} // namespace detail

// Smoothed expected-target surface over the (x, y) plane, pooling all panel
// observations. Grid ranges default to the data range; bandwidths default to
// Scott's rule per dimension, h_d = sigma_d * n^(-1/6).
inline KernelSurface build_colormap(const GrowthPanel& panel, const VariableSpec& x_var,
                                    const VariableSpec& y_var,
                                    const std::string& target, const GridSpec& grid = {},
                                    const BandwidthRule& bw = {}) {
    if (grid.nx < 2 || grid.ny < 2) {
        throw validation_error("build_colormap: grid must be at least 2x2");
    }
    std::vector<double> xs = panel.column(x_var.column);
    std::vector<double> ys = panel.column(y_var.column);
    std::vector<double> ts = panel.column(target);

    std::vector<NwPoint> points;
    points.reserve(panel.size());
    std::size_t dropped = 0;
    for (std::size_t i = 0; i < panel.size(); ++i) {
        double xv = detail::apply_transform(xs[i], x_var.transform);
        double yv = detail::apply_transform(ys[i], y_var.transform);
        double tv = ts[i];
        if (!std::isfinite(xv) || !std::isfinite(yv) || !std::isfinite(tv)) {
            ++dropped;
            continue;
        }
        points.push_back(NwPoint{{xv, yv}, tv});
    }
    if (points.size() < 2) {
        throw data_error("build_colormap: fewer than 2 usable observations");
    }

    KernelSurface surface;
    surface.n_points = points.size();
    surface.n_dropped = dropped;
    surface.x_name = x_var.display_name();
    surface.y_name = y_var.display_name();
    surface.target_name = target;

    std::vector<double> xcol(points.size());
    std::vector<double> ycol(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        xcol[i] = points[i].x[0];
        ycol[i] = points[i].x[1];
    }
    const double n = static_cast<double>(points.size());
    if (bw.kind == BandwidthRule::Kind::fixed) {
        if (!(bw.fixed[0] > 0.0) || !(bw.fixed[1] > 0.0)) {
            throw validation_error("build_colormap: fixed bandwidths must be > 0");
        }
        surface.bandwidths = bw.fixed;
    } else {
        double sx = detail::sample_std(xcol);
        double sy = detail::sample_std(ycol);
        if (sx == 0.0) {
            throw numerical_error("build_colormap: zero variance in dimension x (" +
                                  surface.x_name + ")");
        }
        if (sy == 0.0) {
            throw numerical_error("build_colormap: zero variance in dimension y (" +
                                  surface.y_name + ")");
        }
        double factor = std::pow(n, -1.0 / 6.0);
        surface.bandwidths = {sx * factor, sy * factor};
    }

    auto axis = [](std::size_t count, double lo, double hi, const char* dim) {
        if (!(hi > lo)) {
            throw numerical_error(std::string("build_colormap: degenerate grid range in dimension ") + dim);
        }
        std::vector<double> coords(count);
        for (std::size_t i = 0; i < count; ++i) {
            coords[i] = lo + (hi - lo) * static_cast<double>(i) /
                                 static_cast<double>(count - 1);
        }
        return coords;
    };
    auto minmax = [](const std::vector<double>& v) {
        auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return std::pair<double, double>(*lo, *hi);
    };
    auto [x_lo, x_hi] = grid.x_range ? *grid.x_range : minmax(xcol);
    auto [y_lo, y_hi] = grid.y_range ? *grid.y_range : minmax(ycol);
    surface.x_axis = axis(grid.nx, x_lo, x_hi, "x");
    surface.y_axis = axis(grid.ny, y_lo, y_hi, "y");

    const double cutoff = detail::k_support_cutoff_per_point * n;
    surface.estimates.resize(grid.nx * grid.ny);
    surface.weights.resize(grid.nx * grid.ny);
    surface.support.resize(grid.nx * grid.ny);
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
        for (std::size_t iy = 0; iy < grid.ny; ++iy) {
            NwEstimate est = nw_estimate(points, {surface.x_axis[ix], surface.y_axis[iy]},
                                         surface.bandwidths);
            std::size_t cell = ix * grid.ny + iy;
            surface.weights[cell] = est.weight;
            bool supported = est.supported && est.weight >= cutoff;
            surface.support[cell] = supported ? 1 : 0;
            surface.estimates[cell] =
                supported ? est.value : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return surface;
}

// surface.csv: long format x,y,estimate,weight,supported.
inline void write_surface_csv(const KernelSurface& surface, std::ostream& os) {
    csv::write_row(os, {"x", "y", "estimate", "weight", "supported"});
    for (std::size_t ix = 0; ix < surface.x_axis.size(); ++ix) {
        for (std::size_t iy = 0; iy < surface.y_axis.size(); ++iy) {
            std::size_t cell = ix * surface.y_axis.size() + iy;
            csv::write_row(os, {csv::format_double(surface.x_axis[ix]),
                                csv::format_double(surface.y_axis[iy]),
                                csv::format_double(surface.estimates[cell]),
                                csv::format_double(surface.weights[cell]),
                                surface.support[cell] ? "1" : "0"});
        }
    }
}

} // namespace econfit
