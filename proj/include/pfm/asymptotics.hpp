#pragma once

#include "pfm/pareto.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace pfm {

struct UniformAxis {};

/// Density proportional to exp(-rate x) on [0, 1]; rate != 0.
struct TruncatedExponentialAxis {
    double rate = 1.0;
};

/// weight * N(mean1, sd1) + (1 - weight) * N(mean2, sd2), truncated to [0, 1].
struct TwoBumpAxis {
    double weight = 0.5;
    double mean1 = 0.2;
    double sd1 = 0.08;
    double mean2 = 0.8;
    double sd2 = 0.08;
};

using AxisDensity = std::variant<UniformAxis, TruncatedExponentialAxis, TwoBumpAxis>;

double axis_pdf(const AxisDensity& f, double x);
double axis_cdf(const AxisDensity& f, double x);
double axis_quantile(const AxisDensity& f, double u);

/// Product density f(x) = f_1(x_1) ... f_d(x_d) on [0, 1]^d.
struct SeparableDensity {
    std::vector<AxisDensity> axes;

    static SeparableDensity uniform(std::size_t d);
    static SeparableDensity same(const AxisDensity& axis, std::size_t d);

    std::size_t dim() const noexcept { return axes.size(); }
    double cdf(std::span<const double> x) const;
};

/// "uniform", "texp:<rate>" or "twobump:<w>,<m1>,<s1>,<m2>,<s2>".
AxisDensity parse_axis_density(const std::string& spec);

/// n i.i.d. draws by per-axis inverse CDF. Points sharing a coordinate value
/// on any axis are redrawn, so coordinates are distinct on every axis.
PointSet sample_density(const SeparableDensity& f, std::size_t n, std::uint64_t seed);

/// Pareto depth function of one sample, evaluated through longest chains.
class DepthField {
public:
    explicit DepthField(PointSet points);

    std::size_t size() const noexcept { return points_.size(); }
    std::size_t dim() const noexcept { return points_.dim(); }
    const PointSet& points() const noexcept { return points_; }
    const std::vector<std::size_t>& chain_depths() const noexcept { return depths_; }

    /// Length of the longest chain ending at or below x (0 if no point is <= x).
    std::size_t depth_at(std::span<const double> x) const;
    /// n^{-1/d} depth_at(x).
    double scaled_depth_at(std::span<const double> x) const;

private:
    PointSet points_;
    std::vector<std::size_t> depths_;
};

double scaled_depth_at(const PointSet& points, std::span<const double> x);

struct ChainAgreement {
    std::size_t instances = 0;
    std::size_t points = 0;
    std::size_t mismatches = 0;  // points whose front index differs from their chain depth
};

/// Random uniform instances with n in [n_min, n_max] and d drawn from `dims`;
/// compares non-dominated sorting against longest-chain depths point by point.
ChainAgreement front_chain_agreement(std::size_t instances, std::size_t n_min, std::size_t n_max,
                                     std::span<const std::size_t> dims, std::uint64_t seed);

/// 9^d interior lattice {0.1, ..., 0.9}^d followed by (1, ..., 1).
std::vector<std::vector<double>> evaluation_grid(std::size_t d);

struct ContinuumRow {
    std::size_t n = 0;
    double max_relative_error = 0.0;
    double scaled_depth_at_one = 0.0;  // mean over runs
};

struct ContinuumTable {
    std::vector<ContinuumRow> rows;
    double c_hat = 0.0;               // calibrated at (1, ..., 1) for the largest n
    bool non_increasing = false;      // trend check on max_relative_error
};

/// For each n: max over the grid (F(x) > 0) of |mean scaled depth / (c_hat F(x)^{1/d}) - 1|,
/// averaging the scaled depth over `runs` independent samples.
ContinuumTable continuum_comparison(const SeparableDensity& f, std::vector<std::size_t> n_schedule,
                                    const std::vector<std::vector<double>>& grid, std::size_t runs,
                                    std::uint64_t seed);

struct ProbeLevel {
    double level = 0.0;
    std::size_t front = 0;       // front whose points are the corners of the level curve
    std::size_t curve_points = 0;
    double defect = 0.0;         // fraction of curve points off the lower-left hull
    bool skipped = false;
    std::string note;
};

/// Relative tolerance (fraction of the curve's bounding-box diagonal) beyond
/// which a curve point counts as lying inside the hull.
inline constexpr double kHullTolerance = 0.02;

/// Convexity probe of the level sets {x : n^{-1/2} h_n(x) >= a} of a planar sample.
std::vector<ProbeLevel> quasiconcavity_probe(const PointSet& points, std::span<const double> levels);
std::vector<ProbeLevel> quasiconcavity_probe(const SeparableDensity& f, std::size_t n,
                                             std::span<const double> levels, std::uint64_t seed);

} // namespace pfm
