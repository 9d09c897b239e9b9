#include "pfm/metrics.hpp"

#include "pfm/errors.hpp"

#include <algorithm>
#include <cmath>

namespace pfm {

double mq_uniq_rel(LabelBits ell, std::span<const LabelBits> query_labels) {
    if (query_labels.empty())
        throw ValidationError("at least one query label vector is required");
    const std::size_t c = ell.size();
    for (const auto& y : query_labels) {
        if (y.size() != c)
            throw DimensionError("label vectors have different class counts");
    }

    std::size_t beta_count = 0;
    std::size_t covered = 0;
    for (std::size_t j = 0; j < c; ++j) {
        bool in_beta = false;
        for (const auto& y : query_labels)
            in_beta = in_beta || y[j];
        if (in_beta) {
            ++beta_count;
            if (ell[j])
                ++covered;
        }
    }
    if (beta_count == 0)
        throw UndefinedMetricError("the queries carry no labels");

    for (std::size_t i = 0; i < query_labels.size(); ++i) {
        bool hit = false;
        for (std::size_t j = 0; j < c && !hit; ++j) {
            if (!query_labels[i][j] || !ell[j])
                continue;
            bool shared = false;
            for (std::size_t o = 0; o < query_labels.size() && !shared; ++o)
                shared = o != i && query_labels[o][j];
            hit = !shared;
        }
        if (!hit)
            return 0.0;
    }
    return static_cast<double>(covered) / static_cast<double>(beta_count);
}

double dcg_at_k(std::span<const double> rels, std::size_t k) {
    if (k < 1)
        throw ValidationError("k must be at least 1");
    if (k > rels.size())
        throw ValidationError("k exceeds the number of relevance values");
    double total = rels[0];
    for (std::size_t i = 2; i <= k; ++i)
        total += rels[i - 1] / std::log2(static_cast<double>(i));
    return total;
}

double ndcg_at_k(std::span<const double> rels, std::size_t k) {
    const double dcg = dcg_at_k(rels, k);
    double ideal = 1.0;
    for (std::size_t i = 2; i <= k; ++i)
        ideal += 1.0 / std::log2(static_cast<double>(i));
    double value = dcg / ideal;
    const bool unit = std::all_of(rels.begin(), rels.end(), [](double r) { return r >= 0.0 && r <= 1.0; });
    if (unit)
        value = std::clamp(value, 0.0, 1.0);
    return value;
}

FrontProfiles front_relevance_profile(std::span<const LayeredRelevance> pairs, std::size_t n_fronts,
                                      std::size_t grid_size) {
    if (n_fronts < 1)
        throw ValidationError("n_fronts must be at least 1");
    if (grid_size < 2)
        throw ValidationError("grid_size must be at least 2");
    FrontProfiles out;
    out.grid.resize(grid_size);
    for (std::size_t g = 0; g < grid_size; ++g)
        out.grid[g] = static_cast<double>(g) / static_cast<double>(grid_size - 1);
    out.curves.assign(n_fronts, std::vector<double>(grid_size, 0.0));
    out.contributors.assign(n_fronts, 0);

    for (const auto& pair : pairs) {
        if (pair.points.dim() != 2)
            throw DimensionError("front profiles are defined for two queries");
        if (pair.relevance.size() != pair.points.size())
            throw DimensionError("relevance must be aligned with the points");
        for (std::size_t f = 0; f < n_fronts && f < pair.layering.depth(); ++f) {
            const auto order = tail_to_tail_order(pair.layering.fronts[f], pair.points);
            auto& curve = out.curves[f];
            ++out.contributors[f];
            if (order.size() == 1) {
                for (auto& v : curve)
                    v += pair.relevance[order[0]];
                continue;
            }
            const double last = static_cast<double>(order.size() - 1);
            for (std::size_t g = 0; g < grid_size; ++g) {
                const double pos = out.grid[g] * last;
                const auto lo = std::min(static_cast<std::size_t>(std::floor(pos)), order.size() - 2);
                const double frac = pos - static_cast<double>(lo);
                curve[g] += (1.0 - frac) * pair.relevance[order[lo]] + frac * pair.relevance[order[lo + 1]];
            }
        }
    }
    for (std::size_t f = 0; f < n_fronts; ++f) {
        if (out.contributors[f] == 0)
            continue;
        for (auto& v : out.curves[f])
            v /= static_cast<double>(out.contributors[f]);
    }
    return out;
}

double profile_band_mean(const FrontProfiles& profiles, std::size_t front, double lo, double hi) {
    if (front >= profiles.curves.size())
        throw ValidationError("front index out of range");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t g = 0; g < profiles.grid.size(); ++g) {
        if (profiles.grid[g] >= lo && profiles.grid[g] <= hi) {
            sum += profiles.curves[front][g];
            ++count;
        }
    }
    if (count == 0)
        throw ValidationError("no grid points inside the band");
    return sum / static_cast<double>(count);
}

} // namespace pfm
