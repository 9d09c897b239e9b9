#pragma once

#include "pfm/dataset.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace pfm {

/// Anchor-graph manifold ranking model for one dataset.
///
/// weights is the A x n Nadaraya-Watson matrix Z (column i holds at most s
/// nonnegative entries summing to 1), degree is D_ii = z_i^T sum_j z_j and
/// core_inverse is (H H^T - I/alpha)^{-1} with H = Z D^{-1/2}. Built once and
/// shared read-only between any number of ranking calls.
struct EmrModel {
    RowMatrix anchors;                    // A x m
    Eigen::SparseMatrix<double> weights;  // A x n, compressed sparse column
    Eigen::VectorXd degree;               // n
    Eigen::MatrixXd core_inverse;         // A x A
    double alpha = 0.99;
    std::string dataset_fingerprint;      // empty when built from memory

    std::size_t anchor_count() const noexcept { return static_cast<std::size_t>(anchors.rows()); }
    std::size_t item_count() const noexcept { return static_cast<std::size_t>(weights.cols()); }
    std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(anchors.cols()); }
};

struct RankingVector {
    Eigen::VectorXd scores;
    std::optional<std::size_t> query_index;
};

/// k-means++ seeding followed by a fixed number of Lloyd iterations.
RowMatrix kmeans_anchors(const FeatureDataset& ds, std::size_t k, std::size_t iterations,
                         std::uint64_t seed);

EmrModel build_emr_model(const FeatureDataset& ds, const RetrievalConfig& cfg, std::uint64_t seed);

/// Same as build_emr_model but with caller-supplied anchors (cfg.anchor_count is ignored).
EmrModel build_emr_model_with_anchors(const FeatureDataset& ds, RowMatrix anchors,
                                      const RetrievalConfig& cfg);

/// r* = (I - H^T (H H^T - I/alpha)^{-1} H) y, O(s n + A^2) per call.
RankingVector emr_rank(const EmrModel& model, const Eigen::VectorXd& y);

/// emr_rank with y = e_query.
RankingVector emr_rank_query(const EmrModel& model, std::size_t query);

/// max |core_inverse * (H H^T - I/alpha) - I|; a spot check of the stored inverse.
double core_inverse_residual(const EmrModel& model);

void save_emr_model(const std::filesystem::path& path, const EmrModel& model);
EmrModel load_emr_model(const std::filesystem::path& path);

/// Loads and checks that the model was built for a dataset of this shape.
EmrModel load_emr_model(const std::filesystem::path& path, const FeatureDataset& ds);

// Classic (dense) manifold ranking, used as a small-n oracle for EMR.

inline constexpr std::size_t kClassicMrMaxItems = 2000;

struct GraphEdge {
    std::size_t a;
    std::size_t b;
    double distance;
};

/// Edges added in ascending Euclidean distance (ties by index pair) until
/// the graph becomes connected; the last edge is the one that connected it.
std::vector<GraphEdge> connectivity_graph(const FeatureDataset& ds);

/// S = D^{-1/2} W D^{-1/2} with w_ab = exp(-d^2 / 2 sigma^2) on connectivity_graph edges.
Eigen::MatrixXd normalized_affinity(const FeatureDataset& ds, double sigma);

/// r* = (I - alpha S)^{-1} e_query by dense Cholesky.
RankingVector classic_mr_rank(const FeatureDataset& ds, std::size_t query, double sigma, double alpha);

/// Runs r(t+1) = alpha S r(t) + (1 - alpha) y from r(0) = (1 - alpha) y and
/// reports r(t) / (1 - alpha), whose limit is the closed form above. Stops
/// once the reported iterates move less than tol in max norm.
RankingVector classic_mr_iterate(const FeatureDataset& ds, std::size_t query, double sigma,
                                 double alpha, double tol, std::size_t max_iter);

} // namespace pfm
