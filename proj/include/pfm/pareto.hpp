#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pfm {

/// n points in R^T stored row-major. Coordinates must be finite.
class PointSet {
public:
    explicit PointSet(std::size_t dim);
    PointSet(std::size_t dim, std::vector<double> coords);

    static PointSet from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t size() const noexcept { return coords_.size() / dim_; }
    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return coords_.empty(); }

    std::span<const double> operator[](std::size_t i) const {
        return {coords_.data() + i * dim_, dim_};
    }
    void push_back(std::span<const double> point);
    const std::vector<double>& coords() const noexcept { return coords_; }

private:
    std::size_t dim_;
    std::vector<double> coords_;
};

struct ParetoPoint {
    std::vector<double> coords;
    std::size_t item_index = 0;
};

/// Strict dominance: p <= q in every coordinate and p < q in at least one.
bool dominates(std::span<const double> p, std::span<const double> q);
bool dominates(const ParetoPoint& p, const ParetoPoint& q);

/// Componentwise p <= q (the partial order chains are built on).
bool precedes_or_equal(std::span<const double> p, std::span<const double> q);

/// Front assignment of a point set. front_of is 1-based; fronts[k] lists the
/// points of front k+1 in ascending index order.
struct ParetoLayering {
    std::vector<std::size_t> front_of;
    std::vector<std::vector<std::size_t>> fronts;

    std::size_t depth() const noexcept { return fronts.size(); }
};

/// Deterministic non-dominated sort. Dispatches to the T=1 value sort, the
/// T=2 sweep, or the lexicographic sequential-search sort for T >= 3.
ParetoLayering non_dominated_sort(const PointSet& points);

/// Reference O(n^2 T): domination counts and dominated lists, peeled front by front.
ParetoLayering non_dominated_sort_pairwise(const PointSet& points);

/// T=2 only, O(n log n): sweep in (d1, d2) order keeping, per front, the
/// smallest d2 seen so far; the fronts that dominate a point form a prefix.
ParetoLayering non_dominated_sort_sweep2d(const PointSet& points);

/// Any T: lexicographic order, then each point joins the first front that
/// holds none of its dominators (found by binary search).
ParetoLayering non_dominated_sort_lexicographic(const PointSet& points);

/// For each point, the length of the longest chain x^1 <= ... <= x^l = x_j of
/// distinct sample members (duplicated points chain through each other, ties
/// ordered by index). O(n log n) for T <= 2, O(n^2 T) otherwise.
std::vector<std::size_t> longest_chain_depths(const PointSet& points);

/// max{i : some member of front i is <= x}, or 0 when no point is <= x.
std::size_t depth_at(const PointSet& points, std::span<const double> x);
std::size_t depth_at(const PointSet& points, const ParetoLayering& layering, std::span<const double> x);

/// Visit order of one front, starting from its most balanced point.
///
/// T=2: sort by d1 ascending (d2, then index, break ties), start at position
/// floor((len-1)/2) and alternate +1, -1, +2, -2, ... T>2: ascending variance
/// of the point's coordinates after per-axis min-max normalisation over the
/// whole point set, ties by index. T=1: ascending index.
std::vector<std::size_t> middle_out_order(std::span<const std::size_t> front, const PointSet& points);

/// Front members sorted by d1 ascending (tail to tail for T=2).
std::vector<std::size_t> tail_to_tail_order(std::span<const std::size_t> front, const PointSet& points);

} // namespace pfm
