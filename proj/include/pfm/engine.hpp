#pragma once

#include "pfm/dataset.hpp"
#include "pfm/emr.hpp"
#include "pfm/pareto.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pfm {

enum class Method { pfm, mq_avg, mq_max, scalarized };

std::string method_name(Method m);
Method parse_method(const std::string& name);

/// T x n matrix; row i holds the EMR scores r*_i for query i.
using ScoreMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// T x n matrix of d_i = 1 - r*_i.
struct DissimilarityMatrix {
    ScoreMatrix d;

    std::size_t queries() const noexcept { return static_cast<std::size_t>(d.rows()); }
    std::size_t items() const noexcept { return static_cast<std::size_t>(d.cols()); }

    /// Pareto points of the given items, one row per item, in the given order.
    PointSet points(std::span<const std::size_t> items) const;
};

ScoreMatrix query_scores(const EmrModel& model, const QuerySet& qs);
DissimilarityMatrix dissimilarities(const ScoreMatrix& scores);

struct RankedItem {
    std::size_t item_index = 0;
    std::size_t front_index = 0;        // 1-based for pfm; 0 for score-based methods
    std::size_t position_in_front = 0;  // middle-out position for pfm; overall rank otherwise
    std::vector<double> coords;         // d_1(j) .. d_T(j)
    std::optional<double> score;        // fused score for score-based methods
};

struct RetrievalResult {
    Method method = Method::pfm;
    std::vector<double> weights;  // scalarized only
    std::vector<RankedItem> ranked_items;
};

/// Every item that is not a query, in ascending index order.
std::vector<std::size_t> candidate_items(std::size_t n, const QuerySet& qs);

/// Front-by-front ranking of the candidates, middle-out within a front.
/// Returns at most k items (all candidates when k exceeds their number).
RetrievalResult rank_by_pareto(const DissimilarityMatrix& dis, std::span<const std::size_t> candidates,
                               std::size_t k);

/// Descending fused score, ties by item index. weights only used for Method::scalarized.
RetrievalResult rank_by_fusion(const ScoreMatrix& scores, std::span<const std::size_t> candidates,
                               Method method, std::span<const double> weights, std::size_t k);

RetrievalResult pfm_retrieve(const FeatureDataset& ds, const EmrModel& model, const QuerySet& qs, std::size_t k);
RetrievalResult mq_avg_retrieve(const FeatureDataset& ds, const EmrModel& model, const QuerySet& qs, std::size_t k);
RetrievalResult mq_max_retrieve(const FeatureDataset& ds, const EmrModel& model, const QuerySet& qs, std::size_t k);
RetrievalResult scalarized_retrieve(const FeatureDataset& ds, const EmrModel& model, const QuerySet& qs,
                                    std::span<const double> weights, std::size_t k);

RetrievalResult retrieve(const FeatureDataset& ds, const EmrModel& model, const QuerySet& qs, Method method,
                         std::size_t k, std::span<const double> weights = {});

/// The first `depth` fronts of the candidates (each in middle-out order) with
/// their coordinates; backs the front exploration endpoint.
struct FrontView {
    std::vector<std::size_t> candidates;
    PointSet points;  // rows aligned with candidates
    ParetoLayering layering;  // over candidate positions
    std::vector<std::vector<std::size_t>> ordered_fronts;  // candidate positions, middle-out
};

FrontView explore_fronts(const DissimilarityMatrix& dis, std::span<const std::size_t> candidates,
                         std::size_t depth);

} // namespace pfm
