#include "pfm/emr.hpp"

#include "pfm/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pfm {

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), components_(n) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b)
            return;
        parent_[std::max(a, b)] = std::min(a, b);
        --components_;
    }
    std::size_t components() const { return components_; }

private:
    std::vector<std::size_t> parent_;
    std::size_t components_;
};

void check_classic_inputs(const FeatureDataset& ds, std::size_t query, double alpha) {
    if (ds.size() > kClassicMrMaxItems)
        throw CapacityError("dense manifold ranking is capped at " + std::to_string(kClassicMrMaxItems) +
                            " items (dataset has " + std::to_string(ds.size()) +
                            "); build an EMR model instead");
    if (query >= ds.size())
        throw ValidationError("query index " + std::to_string(query) + " out of range");
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw ValidationError("alpha must lie in [0, 1)");
}

} // namespace

std::vector<GraphEdge> connectivity_graph(const FeatureDataset& ds) {
    const std::size_t n = ds.size();
    if (n > kClassicMrMaxItems)
        throw CapacityError("connectivity graph is capped at " + std::to_string(kClassicMrMaxItems) + " items");
    std::vector<GraphEdge> all;
    all.reserve(n * (n - 1) / 2);
    for (std::size_t a = 0; a < n; ++a) {
        auto xa = ds.row(a);
        for (std::size_t b = a + 1; b < n; ++b) {
            auto xb = ds.row(b);
            double s = 0.0;
            for (std::size_t j = 0; j < xa.size(); ++j)
                s += (xa[j] - xb[j]) * (xa[j] - xb[j]);
            all.push_back({a, b, std::sqrt(s)});
        }
    }
    std::sort(all.begin(), all.end(), [](const GraphEdge& l, const GraphEdge& r) {
        if (l.distance != r.distance)
            return l.distance < r.distance;
        return std::tie(l.a, l.b) < std::tie(r.a, r.b);
    });
    DisjointSets sets(n);
    std::size_t used = 0;
    while (sets.components() > 1) {
        sets.unite(all[used].a, all[used].b);
        ++used;
    }
    all.resize(used);
    return all;
}

Eigen::MatrixXd normalized_affinity(const FeatureDataset& ds, double sigma) {
    if (!(sigma > 0.0))
        throw ValidationError("sigma must be positive");
    const auto n = static_cast<Eigen::Index>(ds.size());
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : connectivity_graph(ds)) {
        const double v = std::exp(-e.distance * e.distance / (2.0 * sigma * sigma));
        w(static_cast<Eigen::Index>(e.a), static_cast<Eigen::Index>(e.b)) = v;
        w(static_cast<Eigen::Index>(e.b), static_cast<Eigen::Index>(e.a)) = v;
    }
    if (n == 1)
        return w;
    Eigen::VectorXd degree = w.rowwise().sum();
    if ((degree.array() <= 0.0).any())
        throw NumericalError("kernel weights underflow to zero; increase sigma");
    Eigen::VectorXd inv_sqrt = degree.cwiseSqrt().cwiseInverse();
    return inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal();
}

RankingVector classic_mr_rank(const FeatureDataset& ds, std::size_t query, double sigma, double alpha) {
    check_classic_inputs(ds, query, alpha);
    const auto n = static_cast<Eigen::Index>(ds.size());
    Eigen::MatrixXd system = -alpha * normalized_affinity(ds, sigma);
    system.diagonal().array() += 1.0;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    y(static_cast<Eigen::Index>(query)) = 1.0;
    Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success)
        throw NumericalError("I - alpha S is not positive definite");
    return {llt.solve(y), query};
}

RankingVector classic_mr_iterate(const FeatureDataset& ds, std::size_t query, double sigma,
                                 double alpha, double tol, std::size_t max_iter) {
    check_classic_inputs(ds, query, alpha);
    if (!(tol > 0.0))
        throw ValidationError("tolerance must be positive");
    const auto n = static_cast<Eigen::Index>(ds.size());
    const Eigen::MatrixXd s = normalized_affinity(ds, sigma);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    y(static_cast<Eigen::Index>(query)) = 1.0;
    const double scale = 1.0 - alpha;
    Eigen::VectorXd r = scale * y;
    double residual = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= max_iter; ++it) {
        Eigen::VectorXd next = alpha * (s * r) + scale * y;
        residual = (next - r).cwiseAbs().maxCoeff() / scale;
        r = std::move(next);
        if (residual < tol)
            return {r / scale, query};
    }
    throw ConvergenceError(residual, max_iter);
}

} // namespace pfm
