#include "pfm/experiment.hpp"

#include "pfm/errors.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <set>

namespace pfm {

std::vector<double> pair_relevance(const LabelMatrix& labels, QueryPair pair) {
    const std::array<LabelBits, 2> queries = {labels.row(pair.a), labels.row(pair.b)};
    std::vector<double> rel(labels.rows(), 0.0);
    for (std::size_t j = 0; j < labels.rows(); ++j) {
        if (j == pair.a || j == pair.b)
            continue;
        rel[j] = mq_uniq_rel(labels.row(j), queries);
    }
    return rel;
}

bool is_viable_pair(const LabelMatrix& labels, QueryPair pair, std::size_t min_relevant) {
    if (pair.a == pair.b || pair.a >= labels.rows() || pair.b >= labels.rows())
        return false;
    const auto ya = labels.row(pair.a);
    const auto yb = labels.row(pair.b);
    bool any = false;
    for (std::size_t c = 0; c < labels.classes(); ++c)
        any = any || ya[c] || yb[c];
    if (!any)
        return false;
    const auto rel = pair_relevance(labels, pair);
    const auto hits = static_cast<std::size_t>(std::count_if(rel.begin(), rel.end(), [](double r) { return r > 0.0; }));
    return hits >= min_relevant;
}

QueryPairBatch make_query_pair_batch(const LabelMatrix& labels, std::size_t count, std::uint64_t seed,
                                     std::size_t min_relevant) {
    const std::size_t n = labels.rows();
    if (n < 2)
        throw ValidationError("need at least two items to form query pairs");
    QueryPairBatch batch;
    batch.rng_seed = seed;
    batch.requested = count;
    batch.min_relevant = min_relevant;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    const std::size_t budget = std::max<std::size_t>(1000, 200 * count);
    for (std::size_t attempt = 0; attempt < budget && batch.pairs.size() < count; ++attempt) {
        const std::size_t a = pick(rng);
        const std::size_t b = pick(rng);
        if (a == b)
            continue;
        if (!seen.insert({std::min(a, b), std::max(a, b)}).second)
            continue;
        if (is_viable_pair(labels, {a, b}, min_relevant))
            batch.pairs.push_back({a, b});
    }
    if (batch.pairs.empty())
        throw ValidationError("no viable query pair found");
    return batch;
}

MetricReport run_query_pair_experiment(const FeatureDataset& ds, const LabelMatrix& labels,
                                       std::span<const EmrModel> models, const QueryPairBatch& batch,
                                       const ExperimentOptions& options) {
    if (labels.rows() != ds.size())
        throw DimensionError("labels do not match the dataset");
    if (models.empty())
        throw ValidationError("at least one model is required");
    if (batch.pairs.empty())
        throw ValidationError("query pair batch is empty");
    if (options.methods.empty())
        throw ValidationError("at least one method is required");
    if (options.k_max < 1)
        throw ValidationError("k_max must be at least 1");
    for (auto m : options.methods) {
        if (m == Method::scalarized)
            throw ValidationError("scalarized needs explicit weights and is not an experiment method");
    }

    MetricReport report;
    report.methods = options.methods;
    report.pair_count = batch.pairs.size();
    report.model_count = models.size();
    report.k_max = options.k_max;
    report.pair_seed = batch.rng_seed;
    for (auto m : options.methods)
        report.ndcg_at_k[method_name(m)].assign(options.k_max, 0.0);

    const bool want_profiles =
        std::find(options.methods.begin(), options.methods.end(), Method::pfm) != options.methods.end();
    std::vector<LayeredRelevance> layered;

    std::vector<std::vector<double>> relevance;
    relevance.reserve(batch.pairs.size());
    for (const auto& pair : batch.pairs)
        relevance.push_back(pair_relevance(labels, pair));

    for (const auto& model : models) {
        if (model.item_count() != ds.size())
            throw DimensionError("model and dataset disagree on the item count");
        std::map<std::string, std::vector<double>> per_model;
        for (auto m : options.methods)
            per_model[method_name(m)].assign(options.k_max, 0.0);

        for (std::size_t p = 0; p < batch.pairs.size(); ++p) {
            const QuerySet qs{{batch.pairs[p].a, batch.pairs[p].b}};
            const auto scores = query_scores(model, qs);
            const auto candidates = candidate_items(ds.size(), qs);
            const auto& rel = relevance[p];
            for (auto m : options.methods) {
                const auto result = m == Method::pfm
                                        ? rank_by_pareto(dissimilarities(scores), candidates, options.k_max)
                                        : rank_by_fusion(scores, candidates, m, {}, options.k_max);
                std::vector<double> rels(options.k_max, 0.0);
                for (std::size_t r = 0; r < result.ranked_items.size(); ++r)
                    rels[r] = rel[result.ranked_items[r].item_index];
                auto& acc = per_model[method_name(m)];
                for (std::size_t k = 1; k <= options.k_max; ++k)
                    acc[k - 1] += ndcg_at_k(rels, k);
            }
            if (want_profiles) {
                LayeredRelevance lr{dissimilarities(scores).points(candidates), {}, {}};
                lr.layering = non_dominated_sort(lr.points);
                lr.relevance.reserve(candidates.size());
                for (auto j : candidates)
                    lr.relevance.push_back(rel[j]);
                layered.push_back(std::move(lr));
            }
        }
        for (auto& [name, acc] : per_model) {
            auto& total = report.ndcg_at_k[name];
            for (std::size_t k = 0; k < options.k_max; ++k)
                total[k] += acc[k] / static_cast<double>(batch.pairs.size());
        }
    }
    for (auto& [name, total] : report.ndcg_at_k) {
        for (auto& v : total)
            v /= static_cast<double>(models.size());
    }
    if (want_profiles)
        report.front_profiles = front_relevance_profile(layered, options.profile_fronts, options.grid_size);
    return report;
}

} // namespace pfm
