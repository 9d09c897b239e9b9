#include "pfm/engine.hpp"

#include "pfm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pfm {

std::string method_name(Method m) {
    switch (m) {
    case Method::pfm:
        return "pfm";
    case Method::mq_avg:
        return "mq_avg";
    case Method::mq_max:
        return "mq_max";
    case Method::scalarized:
        return "scalarized";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    if (name == "pfm")
        return Method::pfm;
    if (name == "mq_avg")
        return Method::mq_avg;
    if (name == "mq_max")
        return Method::mq_max;
    if (name == "scalarized")
        return Method::scalarized;
    throw ValidationError("unknown method '" + name + "'");
}

PointSet DissimilarityMatrix::points(std::span<const std::size_t> items) const {
    const std::size_t t = queries();
    std::vector<double> coords;
    coords.reserve(items.size() * t);
    for (auto j : items) {
        if (j >= this->items())
            throw ValidationError("item index out of range");
        for (std::size_t i = 0; i < t; ++i)
            coords.push_back(d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
    return PointSet(t, std::move(coords));
}

ScoreMatrix query_scores(const EmrModel& model, const QuerySet& qs) {
    if (qs.items.empty())
        throw ValidationError("query set is empty");
    ScoreMatrix out(static_cast<Eigen::Index>(qs.size()), static_cast<Eigen::Index>(model.item_count()));
    for (std::size_t i = 0; i < qs.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = emr_rank_query(model, qs.items[i]).scores.transpose();
    if (!out.allFinite())
        throw NumericalError("ranking produced non-finite scores");
    return out;
}

DissimilarityMatrix dissimilarities(const ScoreMatrix& scores) {
    return {(1.0 - scores.array()).matrix()};
}

std::vector<std::size_t> candidate_items(std::size_t n, const QuerySet& qs) {
    std::vector<bool> is_query(n, false);
    for (auto q : qs.items) {
        if (q < n)
            is_query[q] = true;
    }
    std::vector<std::size_t> out;
    out.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (!is_query[j])
            out.push_back(j);
    }
    return out;
}

namespace {

void require_positive_k(std::size_t k) {
    if (k == 0)
        throw ValidationError("k must be positive");
}

} // namespace

FrontView explore_fronts(const DissimilarityMatrix& dis, std::span<const std::size_t> candidates,
                         std::size_t depth) {
    FrontView view{{candidates.begin(), candidates.end()}, dis.points(candidates), {}, {}};
    if (candidates.empty())
        return view;
    view.layering = non_dominated_sort(view.points);
    const std::size_t keep = std::min(depth, view.layering.depth());
    for (std::size_t f = 0; f < keep; ++f)
        view.ordered_fronts.push_back(middle_out_order(view.layering.fronts[f], view.points));
    return view;
}

RetrievalResult rank_by_pareto(const DissimilarityMatrix& dis, std::span<const std::size_t> candidates,
                               std::size_t k) {
    require_positive_k(k);
    RetrievalResult out;
    out.method = Method::pfm;
    if (candidates.empty())
        return out;
    const PointSet points = dis.points(candidates);
    const ParetoLayering layering = non_dominated_sort(points);
    for (std::size_t f = 0; f < layering.depth() && out.ranked_items.size() < k; ++f) {
        const auto order = middle_out_order(layering.fronts[f], points);
        for (std::size_t pos = 0; pos < order.size() && out.ranked_items.size() < k; ++pos) {
            const auto local = order[pos];
            auto coords = points[local];
            out.ranked_items.push_back(
                {candidates[local], f + 1, pos, {coords.begin(), coords.end()}, std::nullopt});
        }
    }
    return out;
}

RetrievalResult rank_by_fusion(const ScoreMatrix& scores, std::span<const std::size_t> candidates,
                               Method method, std::span<const double> weights, std::size_t k) {
    require_positive_k(k);
    const auto t = static_cast<std::size_t>(scores.rows());
    std::vector<double> w;
    switch (method) {
    case Method::mq_avg:
        w.assign(t, 1.0 / static_cast<double>(t));
        break;
    case Method::scalarized: {
        if (weights.size() != t)
            throw DimensionError("expected " + std::to_string(t) + " weights, got " +
                                 std::to_string(weights.size()));
        double sum = 0.0;
        for (double v : weights) {
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ValidationError("weights must be nonnegative and finite");
            sum += v;
        }
        if (!(sum > 0.0))
            throw ValidationError("weights must not all be zero");
        w.assign(weights.begin(), weights.end());
        break;
    }
    case Method::mq_max:
        break;
    case Method::pfm:
        throw ValidationError("pfm is not a score-fusion method");
    }

    std::vector<std::pair<double, std::size_t>> keyed;
    keyed.reserve(candidates.size());
    for (auto j : candidates) {
        const auto col = scores.col(static_cast<Eigen::Index>(j));
        double s = 0.0;
        if (method == Method::mq_max) {
            s = col.maxCoeff();
        } else {
            for (std::size_t i = 0; i < t; ++i)
                s += w[i] * col(static_cast<Eigen::Index>(i));
        }
        keyed.emplace_back(s, j);
    }
    const std::size_t take = std::min(k, keyed.size());
    auto by_score = [](const auto& a, const auto& b) {
        if (a.first != b.first)
            return a.first > b.first;
        return a.second < b.second;
    };
    std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(take), keyed.end(), by_score);

    RetrievalResult out;
    out.method = method;
    if (method == Method::scalarized)
        out.weights = w;
    for (std::size_t r = 0; r < take; ++r) {
        const auto j = keyed[r].second;
        std::vector<double> coords(t);
        for (std::size_t i = 0; i < t; ++i)
            coords[i] = 1.0 - scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        out.ranked_items.push_back({j, 0, r, std::move(coords), keyed[r].first});
    }
    return out;
}

namespace {

ScoreMatrix checked_scores(const FeatureDataset& ds, const EmrModel& model, const QuerySet& qs) {
    if (model.item_count() != ds.size())
        throw DimensionError("model and dataset disagree on the item count");
    validate_query_set(qs, ds);
    return query_scores(model, qs);
}

} // namespace

RetrievalResult pfm_retrieve(const FeatureDataset& ds, const EmrModel& model, const QuerySet& qs, std::size_t k) {
    require_positive_k(k);
    const auto scores = checked_scores(ds, model, qs);
    const auto candidates = candidate_items(ds.size(), qs);
    return rank_by_pareto(dissimilarities(scores), candidates, k);
}

RetrievalResult mq_avg_retrieve(const FeatureDataset& ds, const EmrModel& model, const QuerySet& qs, std::size_t k) {
    require_positive_k(k);
    const auto scores = checked_scores(ds, model, qs);
    return rank_by_fusion(scores, candidate_items(ds.size(), qs), Method::mq_avg, {}, k);
}

RetrievalResult mq_max_retrieve(const FeatureDataset& ds, const EmrModel& model, const QuerySet& qs, std::size_t k) {
    require_positive_k(k);
    const auto scores = checked_scores(ds, model, qs);
    return rank_by_fusion(scores, candidate_items(ds.size(), qs), Method::mq_max, {}, k);
}

RetrievalResult scalarized_retrieve(const FeatureDataset& ds, const EmrModel& model, const QuerySet& qs,
                                    std::span<const double> weights, std::size_t k) {
    require_positive_k(k);
    const auto scores = checked_scores(ds, model, qs);
    return rank_by_fusion(scores, candidate_items(ds.size(), qs), Method::scalarized, weights, k);
}

RetrievalResult retrieve(const FeatureDataset& ds, const EmrModel& model, const QuerySet& qs, Method method,
                         std::size_t k, std::span<const double> weights) {
    switch (method) {
    case Method::pfm:
        return pfm_retrieve(ds, model, qs, k);
    case Method::mq_avg:
        return mq_avg_retrieve(ds, model, qs, k);
    case Method::mq_max:
        return mq_max_retrieve(ds, model, qs, k);
    case Method::scalarized:
        return scalarized_retrieve(ds, model, qs, weights, k);
    }
    throw ValidationError("unknown method");
}

} // namespace pfm
