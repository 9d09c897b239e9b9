#pragma once

#include "pfm/pareto.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace pfm {

using LabelBits = std::span<const std::uint8_t>;

/// Multiple-query unique relevance of an item with labels `ell`.
///
/// With beta = OR of the query labels and unique_i = y^i AND NOT (OR_{j != i} y^j),
/// the score is |ell AND beta| / |beta| when ell meets every unique_i, else 0.
/// Throws UndefinedMetricError when beta is empty.
double mq_uniq_rel(LabelBits ell, std::span<const LabelBits> query_labels);

/// rel_1 + sum_{i=2..k} rel_i / log2(i). Requires 1 <= k <= rels.size().
double dcg_at_k(std::span<const double> rels, std::size_t k);

/// dcg_at_k / (1 + sum_{i=2..k} 1 / log2(i)); clamped to [0, 1] when every rel is in [0, 1].
double ndcg_at_k(std::span<const double> rels, std::size_t k);

/// One query pair's sorted candidates together with each candidate's relevance.
struct LayeredRelevance {
    PointSet points;
    ParetoLayering layering;
    std::vector<double> relevance;  // aligned with points
};

struct FrontProfiles {
    std::vector<double> grid;                 // grid_size points on [0, 1]
    std::vector<std::vector<double>> curves;  // per front, averaged over contributing pairs
    std::vector<std::size_t> contributors;    // pairs that had this front
};

/// Orders each front tail to tail by d1, maps positions onto [0, 1], linearly
/// interpolates relevance onto a fixed grid and averages over pairs. A front
/// with one point contributes a constant curve. Requires T = 2.
FrontProfiles front_relevance_profile(std::span<const LayeredRelevance> pairs, std::size_t n_fronts,
                                      std::size_t grid_size);

/// Mean of a profile curve over grid points in [lo, hi].
double profile_band_mean(const FrontProfiles& profiles, std::size_t front, double lo, double hi);

} // namespace pfm
