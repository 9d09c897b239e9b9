#include "pfm/asymptotics.hpp"

#include "pfm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace pfm {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

struct TruncatedNormal {
    double mean;
    double sd;

    double mass() const { return normal_cdf((1.0 - mean) / sd) - normal_cdf(-mean / sd); }
    double cdf(double x) const { return (normal_cdf((x - mean) / sd) - normal_cdf(-mean / sd)) / mass(); }
    double pdf(double x) const { return normal_pdf((x - mean) / sd) / (sd * mass()); }
};

void check_two_bump(const TwoBumpAxis& b) {
    if (!(b.weight >= 0.0 && b.weight <= 1.0) || !(b.sd1 > 0.0) || !(b.sd2 > 0.0))
        throw ValidationError("two-bump density needs weight in [0, 1] and positive widths");
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace

double axis_pdf(const AxisDensity& f, double x) {
    if (x < 0.0 || x > 1.0)
        return 0.0;
    return std::visit(
        [x](const auto& a) -> double {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, UniformAxis>) {
                return 1.0;
            } else if constexpr (std::is_same_v<T, TruncatedExponentialAxis>) {
                return a.rate * std::exp(-a.rate * x) / -std::expm1(-a.rate);
            } else {
                check_two_bump(a);
                return a.weight * TruncatedNormal{a.mean1, a.sd1}.pdf(x) +
                       (1.0 - a.weight) * TruncatedNormal{a.mean2, a.sd2}.pdf(x);
            }
        },
        f);
}

double axis_cdf(const AxisDensity& f, double x) {
    if (x <= 0.0)
        return 0.0;
    if (x >= 1.0)
        return 1.0;
    return std::visit(
        [x](const auto& a) -> double {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, UniformAxis>) {
                return x;
            } else if constexpr (std::is_same_v<T, TruncatedExponentialAxis>) {
                return std::expm1(-a.rate * x) / std::expm1(-a.rate);
            } else {
                check_two_bump(a);
                return a.weight * TruncatedNormal{a.mean1, a.sd1}.cdf(x) +
                       (1.0 - a.weight) * TruncatedNormal{a.mean2, a.sd2}.cdf(x);
            }
        },
        f);
}

double axis_quantile(const AxisDensity& f, double u) {
    if (!(u >= 0.0 && u <= 1.0))
        throw ValidationError("quantile level must lie in [0, 1]");
    return std::visit(
        [&f, u](const auto& a) -> double {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, UniformAxis>) {
                return u;
            } else if constexpr (std::is_same_v<T, TruncatedExponentialAxis>) {
                return std::clamp(-std::log1p(u * std::expm1(-a.rate)) / a.rate, 0.0, 1.0);
            } else {
                double lo = 0.0;
                double hi = 1.0;
                for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (axis_cdf(f, mid) < u ? lo : hi) = mid;
                }
                return 0.5 * (lo + hi);
            }
        },
        f);
}

SeparableDensity SeparableDensity::uniform(std::size_t d) { return same(UniformAxis{}, d); }

SeparableDensity SeparableDensity::same(const AxisDensity& axis, std::size_t d) {
    if (d < 1)
        throw ValidationError("density dimension must be at least 1");
    return {std::vector<AxisDensity>(d, axis)};
}

double SeparableDensity::cdf(std::span<const double> x) const {
    if (x.size() != axes.size())
        throw DimensionError("evaluation point has the wrong dimension");
    double p = 1.0;
    for (std::size_t i = 0; i < axes.size(); ++i)
        p *= axis_cdf(axes[i], x[i]);
    return p;
}

AxisDensity parse_axis_density(const std::string& spec) {
    if (spec == "uniform")
        return UniformAxis{};
    auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    std::vector<double> params;
    if (colon != std::string::npos) {
        std::stringstream ss(spec.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                params.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw ValidationError("bad density parameter '" + tok + "'");
            }
        }
    }
    if (kind == "texp" && params.size() == 1) {
        if (params[0] == 0.0 || !std::isfinite(params[0]))
            throw ValidationError("truncated exponential rate must be nonzero");
        return TruncatedExponentialAxis{params[0]};
    }
    if (kind == "twobump" && params.size() == 5) {
        TwoBumpAxis b{params[0], params[1], params[2], params[3], params[4]};
        check_two_bump(b);
        return b;
    }
    throw ValidationError("unknown density '" + spec + "' (use uniform, texp:RATE or twobump:W,M1,S1,M2,S2)");
}

PointSet sample_density(const SeparableDensity& f, std::size_t n, std::uint64_t seed) {
    if (n < 1)
        throw ValidationError("sample size must be at least 1");
    const std::size_t d = f.dim();
    if (d < 1)
        throw ValidationError("density has no axes");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> coords(n * d);
    auto draw = [&](std::size_t i) {
        for (std::size_t k = 0; k < d; ++k)
            coords[i * d + k] = axis_quantile(f.axes[k], unit(rng));
    };
    for (std::size_t i = 0; i < n; ++i)
        draw(i);

    std::vector<std::size_t> order(n);
    for (int round = 0; round < 64; ++round) {
        std::vector<std::size_t> redraw;
        for (std::size_t k = 0; k < d; ++k) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return std::tie(coords[a * d + k], a) < std::tie(coords[b * d + k], b);
            });
            for (std::size_t r = 1; r < n; ++r) {
                if (coords[order[r] * d + k] == coords[order[r - 1] * d + k])
                    redraw.push_back(order[r]);
            }
        }
        if (redraw.empty())
            return PointSet(d, std::move(coords));
        std::sort(redraw.begin(), redraw.end());
        redraw.erase(std::unique(redraw.begin(), redraw.end()), redraw.end());
        for (auto i : redraw)
            draw(i);
    }
    throw NumericalError("could not draw a sample with distinct coordinates (density too concentrated)");
}

DepthField::DepthField(PointSet points) : points_(std::move(points)), depths_(longest_chain_depths(points_)) {}

std::size_t DepthField::depth_at(std::span<const double> x) const {
    if (x.size() != points_.dim())
        throw DimensionError("evaluation point has the wrong dimension");
    std::size_t best = 0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (depths_[i] > best && precedes_or_equal(points_[i], x))
            best = depths_[i];
    }
    return best;
}

double DepthField::scaled_depth_at(std::span<const double> x) const {
    const double n = static_cast<double>(points_.size());
    return std::pow(n, -1.0 / static_cast<double>(points_.dim())) * static_cast<double>(depth_at(x));
}

double scaled_depth_at(const PointSet& points, std::span<const double> x) {
    if (points.empty())
        return 0.0;
    const double n = static_cast<double>(points.size());
    return std::pow(n, -1.0 / static_cast<double>(points.dim())) * static_cast<double>(depth_at(points, x));
}

ChainAgreement front_chain_agreement(std::size_t instances, std::size_t n_min, std::size_t n_max,
                                     std::span<const std::size_t> dims, std::uint64_t seed) {
    if (n_min < 1 || n_max < n_min)
        throw ValidationError("need 1 <= n_min <= n_max");
    if (dims.empty())
        throw ValidationError("dimension list is empty");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_n(n_min, n_max);
    std::uniform_int_distribution<std::size_t> pick_d(0, dims.size() - 1);
    ChainAgreement out;
    for (std::size_t i = 0; i < instances; ++i) {
        const std::size_t n = pick_n(rng);
        const std::size_t d = dims[pick_d(rng)];
        const auto points = sample_density(SeparableDensity::uniform(d), n, rng());
        const auto layering = non_dominated_sort(points);
        const auto depths = longest_chain_depths(points);
        for (std::size_t j = 0; j < n; ++j)
            out.mismatches += layering.front_of[j] != depths[j];
        out.points += n;
        ++out.instances;
    }
    return out;
}

std::vector<std::vector<double>> evaluation_grid(std::size_t d) {
    if (d < 1)
        throw ValidationError("grid dimension must be at least 1");
    std::vector<std::vector<double>> grid = {{}};
    for (std::size_t k = 0; k < d; ++k) {
        std::vector<std::vector<double>> next;
        for (const auto& prefix : grid) {
            for (int step = 1; step <= 9; ++step) {
                auto p = prefix;
                p.push_back(0.1 * step);
                next.push_back(std::move(p));
            }
        }
        grid = std::move(next);
    }
    grid.emplace_back(d, 1.0);
    return grid;
}

ContinuumTable continuum_comparison(const SeparableDensity& f, std::vector<std::size_t> n_schedule,
                                    const std::vector<std::vector<double>>& grid, std::size_t runs,
                                    std::uint64_t seed) {
    if (n_schedule.empty())
        throw ValidationError("n schedule is empty");
    if (runs < 1)
        throw ValidationError("runs must be at least 1");
    std::sort(n_schedule.begin(), n_schedule.end());
    const std::size_t d = f.dim();
    const std::vector<double> ones(d, 1.0);

    // mean scaled depth per (n, grid point)
    std::vector<std::vector<double>> mean(n_schedule.size(), std::vector<double>(grid.size(), 0.0));
    std::vector<double> at_one(n_schedule.size(), 0.0);
    std::uint64_t stream = 0;
    for (std::size_t s = 0; s < n_schedule.size(); ++s) {
        for (std::size_t r = 0; r < runs; ++r) {
            DepthField field(sample_density(f, n_schedule[s], mix_seed(seed, stream++)));
            for (std::size_t g = 0; g < grid.size(); ++g)
                mean[s][g] += field.scaled_depth_at(grid[g]) / static_cast<double>(runs);
            at_one[s] += field.scaled_depth_at(ones) / static_cast<double>(runs);
        }
    }

    ContinuumTable table;
    table.c_hat = at_one.back();
    if (!(table.c_hat > 0.0))
        throw NumericalError("calibration depth at (1, ..., 1) is zero");
    for (std::size_t s = 0; s < n_schedule.size(); ++s) {
        ContinuumRow row{n_schedule[s], 0.0, at_one[s]};
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const double cdf = f.cdf(grid[g]);
            if (!(cdf > 0.0))
                continue;
            const double limit = table.c_hat * std::pow(cdf, 1.0 / static_cast<double>(d));
            row.max_relative_error = std::max(row.max_relative_error, std::abs(mean[s][g] / limit - 1.0));
        }
        table.rows.push_back(row);
    }
    table.non_increasing = true;
    for (std::size_t s = 1; s < table.rows.size(); ++s) {
        if (table.rows[s].max_relative_error > table.rows[s - 1].max_relative_error)
            table.non_increasing = false;
    }
    return table;
}

namespace {

double cross(std::span<const double> o, std::span<const double> a, std::span<const double> b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

double segment_distance(std::span<const double> p, std::span<const double> a, std::span<const double> b) {
    const double vx = b[0] - a[0];
    const double vy = b[1] - a[1];
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((p[0] - a[0]) * vx + (p[1] - a[1]) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = p[0] - (a[0] + t * vx);
    const double dy = p[1] - (a[1] + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

// Fraction of the front's points farther than kHullTolerance * diagonal from
// the lower convex hull of the front.
double hull_defect(const PointSet& points, std::span<const std::size_t> front) {
    if (front.size() < 3)
        return 0.0;
    auto order = tail_to_tail_order(front, points);
    std::vector<std::size_t> hull;
    for (auto i : order) {
        while (hull.size() >= 2 && cross(points[hull[hull.size() - 2]], points[hull.back()], points[i]) <= 0.0)
            hull.pop_back();
        hull.push_back(i);
    }
    double lo0 = points[order.front()][0], hi0 = lo0, lo1 = points[order.front()][1], hi1 = lo1;
    for (auto i : order) {
        lo0 = std::min(lo0, points[i][0]);
        hi0 = std::max(hi0, points[i][0]);
        lo1 = std::min(lo1, points[i][1]);
        hi1 = std::max(hi1, points[i][1]);
    }
    const double diag = std::hypot(hi0 - lo0, hi1 - lo1);
    if (!(diag > 0.0))
        return 0.0;
    std::size_t inside = 0;
    for (auto i : order) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t h = 0; h + 1 < hull.size(); ++h)
            best = std::min(best, segment_distance(points[i], points[hull[h]], points[hull[h + 1]]));
        if (best > kHullTolerance * diag)
            ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(order.size());
}

} // namespace

std::vector<ProbeLevel> quasiconcavity_probe(const PointSet& points, std::span<const double> levels) {
    if (points.dim() != 2)
        throw DimensionError("the convexity probe is planar (d = 2)");
    std::vector<ProbeLevel> out;
    if (points.empty()) {
        for (double a : levels)
            out.push_back({a, 0, 0, 0.0, true, "empty sample"});
        return out;
    }
    const auto layering = non_dominated_sort(points);
    const double scale = std::sqrt(static_cast<double>(points.size()));
    for (double a : levels) {
        ProbeLevel level;
        level.level = a;
        const double k = std::ceil(a * scale);
        if (!(k >= 1.0) || k > static_cast<double>(layering.depth())) {
            level.skipped = true;
            level.note = "empty level set";
            out.push_back(level);
            continue;
        }
        level.front = static_cast<std::size_t>(k);
        const auto& front = layering.fronts[level.front - 1];
        level.curve_points = front.size();
        level.defect = hull_defect(points, front);
        out.push_back(level);
    }
    return out;
}

std::vector<ProbeLevel> quasiconcavity_probe(const SeparableDensity& f, std::size_t n,
                                             std::span<const double> levels, std::uint64_t seed) {
    if (f.dim() != 2)
        throw DimensionError("the convexity probe is planar (d = 2)");
    return quasiconcavity_probe(sample_density(f, n, seed), levels);
}

} // namespace pfm
