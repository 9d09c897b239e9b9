#pragma once

#include "pfm/dataset.hpp"
#include "pfm/emr.hpp"
#include "pfm/engine.hpp"
#include "pfm/metrics.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pfm {

struct QueryPair {
    std::size_t a = 0;
    std::size_t b = 0;
};

struct QueryPairBatch {
    std::vector<QueryPair> pairs;
    std::uint64_t rng_seed = 0;
    std::size_t requested = 0;
    std::size_t min_relevant = 5;
};

/// A pair is viable when at least `min_relevant` other items have positive
/// mq-uniq-rel with respect to it.
bool is_viable_pair(const LabelMatrix& labels, QueryPair pair, std::size_t min_relevant = 5);

/// Draws distinct unordered viable pairs uniformly at random. Returns fewer
/// than `count` pairs only when the attempt budget runs out; throws
/// ValidationError when no viable pair is found at all.
QueryPairBatch make_query_pair_batch(const LabelMatrix& labels, std::size_t count, std::uint64_t seed,
                                     std::size_t min_relevant = 5);

struct ExperimentOptions {
    std::vector<Method> methods = {Method::pfm, Method::mq_avg, Method::mq_max};
    std::size_t k_max = 20;
    std::size_t profile_fronts = 5;
    std::size_t grid_size = 50;
};

struct MetricReport {
    std::vector<Method> methods;
    std::map<std::string, std::vector<double>> ndcg_at_k;  // method -> value at k = 1..k_max
    FrontProfiles front_profiles;  // filled when pfm is among the methods
    std::size_t pair_count = 0;
    std::size_t model_count = 0;
    std::size_t k_max = 0;
    std::uint64_t pair_seed = 0;
    std::vector<std::uint64_t> model_seeds;  // recorded by the caller
};

/// Relevance of every item against a query pair (0 for the queries themselves).
std::vector<double> pair_relevance(const LabelMatrix& labels, QueryPair pair);

/// Mean nDCG@k per method, averaged over pairs and then over models. The
/// per-front relevance profile of the pfm layering is averaged the same way.
MetricReport run_query_pair_experiment(const FeatureDataset& ds, const LabelMatrix& labels,
                                       std::span<const EmrModel> models, const QueryPairBatch& batch,
                                       const ExperimentOptions& options);

} // namespace pfm
