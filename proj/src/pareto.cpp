#include "pfm/pareto.hpp"

#include "pfm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pfm {

PointSet::PointSet(std::size_t dim) : dim_(dim) {
    if (dim_ < 1)
        throw DimensionError("points need at least one coordinate");
}

PointSet::PointSet(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
    if (dim_ < 1)
        throw DimensionError("points need at least one coordinate");
    if (coords_.size() % dim_ != 0)
        throw DimensionError("coordinate count is not a multiple of the dimension");
    if (!std::all_of(coords_.begin(), coords_.end(), [](double v) { return std::isfinite(v); }))
        throw ValidationError("point coordinates must be finite");
}

PointSet PointSet::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty())
        throw ValidationError("point set is empty");
    PointSet out(rows.front().size());
    for (const auto& r : rows)
        out.push_back(r);
    return out;
}

void PointSet::push_back(std::span<const double> point) {
    if (point.size() != dim_)
        throw DimensionError("point has " + std::to_string(point.size()) + " coordinates, expected " +
                             std::to_string(dim_));
    if (!std::all_of(point.begin(), point.end(), [](double v) { return std::isfinite(v); }))
        throw ValidationError("point coordinates must be finite");
    coords_.insert(coords_.end(), point.begin(), point.end());
}

bool dominates(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size())
        throw DimensionError("cannot compare points of dimension " + std::to_string(p.size()) + " and " +
                             std::to_string(q.size()));
    bool strict = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > q[i])
            return false;
        if (p[i] < q[i])
            strict = true;
    }
    return strict;
}

bool dominates(const ParetoPoint& p, const ParetoPoint& q) {
    return dominates(std::span<const double>(p.coords), std::span<const double>(q.coords));
}

bool precedes_or_equal(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size())
        throw DimensionError("cannot compare points of different dimension");
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > q[i])
            return false;
    }
    return true;
}

namespace {

ParetoLayering layering_from_fronts(std::size_t n, const std::vector<std::size_t>& front_of) {
    ParetoLayering out;
    out.front_of = front_of;
    std::size_t depth = 0;
    for (auto f : front_of)
        depth = std::max(depth, f);
    out.fronts.resize(depth);
    for (std::size_t i = 0; i < n; ++i)
        out.fronts[front_of[i] - 1].push_back(i);
    return out;
}

// Lexicographic order of the coordinates, ties by index. Any strict
// dominator of a point comes before it in this order.
std::vector<std::size_t> lexicographic_order(const PointSet& points) {
    std::vector<std::size_t> idx(points.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        auto pa = points[a];
        auto pb = points[b];
        for (std::size_t k = 0; k < pa.size(); ++k) {
            if (pa[k] != pb[k])
                return pa[k] < pb[k];
        }
        return a < b;
    });
    return idx;
}

ParetoLayering sort_scalar(const PointSet& points) {
    auto order = lexicographic_order(points);
    std::vector<std::size_t> front_of(points.size());
    std::size_t front = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (r == 0 || points[order[r]][0] != points[order[r - 1]][0])
            ++front;
        front_of[order[r]] = front;
    }
    return layering_from_fronts(points.size(), front_of);
}

} // namespace

ParetoLayering non_dominated_sort_pairwise(const PointSet& points) {
    const std::size_t n = points.size();
    if (n == 0)
        throw ValidationError("cannot sort an empty point set");
    std::vector<std::size_t> dominated_count(n, 0);
    std::vector<std::vector<std::uint32_t>> dominated(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dominates(points[i], points[j])) {
                dominated[i].push_back(static_cast<std::uint32_t>(j));
                ++dominated_count[j];
            } else if (dominates(points[j], points[i])) {
                dominated[j].push_back(static_cast<std::uint32_t>(i));
                ++dominated_count[i];
            }
        }
    }
    std::vector<std::size_t> front_of(n, 0);
    std::vector<std::size_t> current;
    for (std::size_t i = 0; i < n; ++i) {
        if (dominated_count[i] == 0)
            current.push_back(i);
    }
    std::size_t front = 0;
    while (!current.empty()) {
        ++front;
        std::vector<std::size_t> next;
        for (auto i : current) {
            front_of[i] = front;
            for (auto j : dominated[i]) {
                if (--dominated_count[j] == 0)
                    next.push_back(j);
            }
        }
        current = std::move(next);
    }
    return layering_from_fronts(n, front_of);
}

ParetoLayering non_dominated_sort_sweep2d(const PointSet& points) {
    if (points.dim() != 2)
        throw DimensionError("the 2-D sweep needs two coordinates");
    const std::size_t n = points.size();
    if (n == 0)
        throw ValidationError("cannot sort an empty point set");
    auto order = lexicographic_order(points);

    // Per front: smallest d2 so far and the d1 of the point that attained it.
    // Points of one front sharing that d2 are duplicates of each other, so a
    // single d1 suffices to decide strict dominance.
    struct FrontTip {
        double d2;
        double d1;
    };
    std::vector<FrontTip> tips;
    std::vector<std::size_t> front_of(n);
    for (auto i : order) {
        const double d1 = points[i][0];
        const double d2 = points[i][1];
        auto it = std::partition_point(tips.begin(), tips.end(), [&](const FrontTip& t) {
            return t.d2 < d2 || (t.d2 == d2 && t.d1 < d1);
        });
        const auto k = static_cast<std::size_t>(it - tips.begin());
        if (k == tips.size())
            tips.push_back({d2, d1});
        else if (d2 < tips[k].d2)
            tips[k] = {d2, d1};
        front_of[i] = k + 1;
    }
    return layering_from_fronts(n, front_of);
}

ParetoLayering non_dominated_sort_lexicographic(const PointSet& points) {
    const std::size_t n = points.size();
    if (n == 0)
        throw ValidationError("cannot sort an empty point set");
    auto order = lexicographic_order(points);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> front_of(n);
    for (auto i : order) {
        auto p = points[i];
        auto it = std::partition_point(fronts.begin(), fronts.end(), [&](const std::vector<std::size_t>& f) {
            return std::any_of(f.rbegin(), f.rend(), [&](std::size_t j) { return dominates(points[j], p); });
        });
        const auto k = static_cast<std::size_t>(it - fronts.begin());
        if (k == fronts.size())
            fronts.emplace_back();
        fronts[k].push_back(i);
        front_of[i] = k + 1;
    }
    return layering_from_fronts(n, front_of);
}

ParetoLayering non_dominated_sort(const PointSet& points) {
    if (points.empty())
        throw ValidationError("cannot sort an empty point set");
    switch (points.dim()) {
    case 1:
        return sort_scalar(points);
    case 2:
        return non_dominated_sort_sweep2d(points);
    default:
        return non_dominated_sort_lexicographic(points);
    }
}

std::vector<std::size_t> longest_chain_depths(const PointSet& points) {
    const std::size_t n = points.size();
    std::vector<std::size_t> depth(n, 1);
    if (n == 0)
        return depth;
    auto order = lexicographic_order(points);
    if (points.dim() == 1) {
        for (std::size_t r = 0; r < n; ++r)
            depth[order[r]] = r + 1;
        return depth;
    }
    if (points.dim() == 2) {
        // Longest non-decreasing subsequence of d2 along the (d1, d2) order.
        std::vector<double> tails;
        for (auto i : order) {
            const double d2 = points[i][1];
            auto it = std::upper_bound(tails.begin(), tails.end(), d2);
            depth[i] = static_cast<std::size_t>(it - tails.begin()) + 1;
            if (it == tails.end())
                tails.push_back(d2);
            else
                *it = d2;
        }
        return depth;
    }
    for (std::size_t r = 0; r < n; ++r) {
        const auto i = order[r];
        for (std::size_t q = 0; q < r; ++q) {
            const auto j = order[q];
            if (depth[j] + 1 > depth[i] && precedes_or_equal(points[j], points[i]))
                depth[i] = depth[j] + 1;
        }
    }
    return depth;
}

std::size_t depth_at(const PointSet& points, const ParetoLayering& layering, std::span<const double> x) {
    if (x.size() != points.dim())
        throw DimensionError("evaluation point has the wrong dimension");
    std::size_t best = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (layering.front_of[i] > best && precedes_or_equal(points[i], x))
            best = layering.front_of[i];
    }
    return best;
}

std::size_t depth_at(const PointSet& points, std::span<const double> x) {
    if (points.empty())
        return 0;
    return depth_at(points, non_dominated_sort(points), x);
}

std::vector<std::size_t> tail_to_tail_order(std::span<const std::size_t> front, const PointSet& points) {
    std::vector<std::size_t> sorted(front.begin(), front.end());
    std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        auto pa = points[a];
        auto pb = points[b];
        if (pa[0] != pb[0])
            return pa[0] < pb[0];
        if (pa.size() > 1 && pa[1] != pb[1])
            return pa[1] < pb[1];
        return a < b;
    });
    return sorted;
}

std::vector<std::size_t> middle_out_order(std::span<const std::size_t> front, const PointSet& points) {
    std::vector<std::size_t> out;
    out.reserve(front.size());
    if (front.empty())
        return out;
    const std::size_t t = points.dim();
    if (t == 1) {
        out.assign(front.begin(), front.end());
        std::sort(out.begin(), out.end());
        return out;
    }
    if (t == 2) {
        auto sorted = tail_to_tail_order(front, points);
        const auto len = static_cast<std::ptrdiff_t>(sorted.size());
        const std::ptrdiff_t mid = (len - 1) / 2;
        out.push_back(sorted[static_cast<std::size_t>(mid)]);
        for (std::ptrdiff_t step = 1; static_cast<std::ptrdiff_t>(out.size()) < len; ++step) {
            if (mid + step < len)
                out.push_back(sorted[static_cast<std::size_t>(mid + step)]);
            if (mid - step >= 0)
                out.push_back(sorted[static_cast<std::size_t>(mid - step)]);
        }
        return out;
    }

    std::vector<double> lo(t, std::numeric_limits<double>::infinity());
    std::vector<double> hi(t, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t k = 0; k < t; ++k) {
            lo[k] = std::min(lo[k], points[i][k]);
            hi[k] = std::max(hi[k], points[i][k]);
        }
    }
    auto spread = [&](std::size_t i) {
        std::vector<double> z(t);
        for (std::size_t k = 0; k < t; ++k)
            z[k] = hi[k] > lo[k] ? (points[i][k] - lo[k]) / (hi[k] - lo[k]) : 0.0;
        const double mean = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(t);
        double var = 0.0;
        for (double v : z)
            var += (v - mean) * (v - mean);
        return var / static_cast<double>(t);
    };
    std::vector<std::pair<double, std::size_t>> keyed;
    keyed.reserve(front.size());
    for (auto i : front)
        keyed.emplace_back(spread(i), i);
    std::sort(keyed.begin(), keyed.end());
    for (const auto& [v, i] : keyed)
        out.push_back(i);
    return out;
}

} // namespace pfm
