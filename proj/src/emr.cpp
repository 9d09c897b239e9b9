#include "pfm/emr.hpp"

#include "pfm/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

namespace pfm {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

// Squared distances from rows [begin, begin + rows) of x to every center.
Eigen::MatrixXd block_distances(const RowMatrix& x, Eigen::Index begin, Eigen::Index rows,
                                const RowMatrix& centers, const Eigen::VectorXd& center_norms) {
    auto block = x.middleRows(begin, rows);
    Eigen::MatrixXd d = -2.0 * (block * centers.transpose());
    d.colwise() += block.rowwise().squaredNorm();
    d.rowwise() += center_norms.transpose();
    return d.cwiseMax(0.0);
}

} // namespace

RowMatrix kmeans_anchors(const FeatureDataset& ds, std::size_t k, std::size_t iterations,
                         std::uint64_t seed) {
    const std::size_t n = ds.size();
    if (k < 1 || k > n)
        throw ValidationError("anchor count must be in [1, n]");
    const RowMatrix& x = ds.features();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    RowMatrix centers(static_cast<Eigen::Index>(k), x.cols());
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    std::size_t pick = static_cast<std::size_t>(rng() % n);
    for (std::size_t c = 0; c < k; ++c) {
        centers.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(pick));
        auto center = std::span<const double>(centers.row(static_cast<Eigen::Index>(c)).data(),
                                              ds.dim());
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(ds.row(i), center));
            total += nearest[i];
        }
        if (c + 1 == k)
            break;
        if (total > 0.0) {
            double target = unit(rng) * total;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                target -= nearest[i];
                if (target < 0.0 && nearest[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(rng() % n);
        }
    }

    constexpr Eigen::Index kBlock = 4096;
    std::vector<std::size_t> assignment(n, k);
    for (std::size_t it = 0; it < iterations; ++it) {
        Eigen::VectorXd norms = centers.rowwise().squaredNorm();
        bool changed = false;
        for (Eigen::Index begin = 0; begin < x.rows(); begin += kBlock) {
            const Eigen::Index rows = std::min(kBlock, x.rows() - begin);
            Eigen::MatrixXd d = block_distances(x, begin, rows, centers, norms);
            for (Eigen::Index r = 0; r < rows; ++r) {
                Eigen::Index best = 0;
                d.row(r).minCoeff(&best);
                auto i = static_cast<std::size_t>(begin + r);
                if (assignment[i] != static_cast<std::size_t>(best)) {
                    assignment[i] = static_cast<std::size_t>(best);
                    changed = true;
                }
            }
        }
        if (!changed)
            break;
        RowMatrix sums = RowMatrix::Zero(centers.rows(), centers.cols());
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            sums.row(static_cast<Eigen::Index>(assignment[i])) += x.row(static_cast<Eigen::Index>(i));
            ++counts[assignment[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            // empty clusters keep their previous center
            if (counts[c] > 0)
                centers.row(static_cast<Eigen::Index>(c)) =
                    sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
        }
    }
    return centers;
}

EmrModel build_emr_model(const FeatureDataset& ds, const RetrievalConfig& cfg, std::uint64_t seed) {
    cfg.validate(ds.size());
    return build_emr_model_with_anchors(
        ds, kmeans_anchors(ds, cfg.anchor_count, cfg.kmeans_iterations, seed), cfg);
}

EmrModel build_emr_model_with_anchors(const FeatureDataset& ds, RowMatrix anchors,
                                      const RetrievalConfig& cfg) {
    const std::size_t n = ds.size();
    const auto a_count = static_cast<std::size_t>(anchors.rows());
    if (a_count < 1 || a_count > n)
        throw ValidationError("anchor count must be in [1, n]");
    if (static_cast<std::size_t>(anchors.cols()) != ds.dim())
        throw DimensionError("anchor dimension does not match dataset");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
        throw ValidationError("alpha must lie strictly inside (0, 1)");
    const std::size_t s = cfg.nearest_anchors;
    if (s < 1 || s > a_count)
        throw ValidationError("nearest_anchors must be in [1, anchor_count]");

    // Triangular kernel over the s nearest anchors, bandwidth = distance to
    // the (s+1)-th nearest (or to the s-th when every anchor is used).
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(n * s);
    std::vector<std::pair<double, std::size_t>> dist(a_count);
    const std::size_t keep = std::min(s + 1, a_count);
    for (std::size_t i = 0; i < n; ++i) {
        auto xi = ds.row(i);
        for (std::size_t a = 0; a < a_count; ++a) {
            auto u = std::span<const double>(anchors.row(static_cast<Eigen::Index>(a)).data(), ds.dim());
            dist[a] = {std::sqrt(squared_distance(xi, u)), a};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(keep), dist.end());
        const double h = dist[keep - 1].first;
        std::vector<double> w(s, 0.0);
        double total = 0.0;
        if (h > 0.0) {
            for (std::size_t j = 0; j < s; ++j) {
                w[j] = std::max(0.0, 1.0 - dist[j].first / h);
                total += w[j];
            }
        }
        if (!(total > 0.0)) {
            std::fill(w.begin(), w.end(), 1.0);
            total = static_cast<double>(s);
        }
        for (std::size_t j = 0; j < s; ++j) {
            if (w[j] > 0.0)
                triplets.emplace_back(static_cast<int>(dist[j].second), static_cast<int>(i), w[j] / total);
        }
    }

    EmrModel model;
    model.alpha = cfg.alpha;
    model.anchors = std::move(anchors);
    model.weights.resize(static_cast<Eigen::Index>(a_count), static_cast<Eigen::Index>(n));
    model.weights.setFromTriplets(triplets.begin(), triplets.end());
    model.weights.makeCompressed();

    Eigen::VectorXd anchor_mass = model.weights * Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    model.degree = model.weights.transpose() * anchor_mass;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(model.degree(static_cast<Eigen::Index>(i)) > 0.0))
            throw ConnectivityError(i, "item '" + ds.id(i) + "' has zero weight to every anchor");
    }

    Eigen::VectorXd inv_sqrt = model.degree.cwiseSqrt().cwiseInverse();
    Eigen::SparseMatrix<double> h = model.weights * inv_sqrt.asDiagonal();
    Eigen::MatrixXd hht = Eigen::MatrixXd(h * Eigen::SparseMatrix<double>(h.transpose()));
    Eigen::MatrixXd shifted =
        Eigen::MatrixXd::Identity(hht.rows(), hht.cols()) / cfg.alpha - hht;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success)
        throw NumericalError("core matrix H H^T - I/alpha is singular or indefinite");
    model.core_inverse = -llt.solve(Eigen::MatrixXd::Identity(hht.rows(), hht.cols()));
    if (!model.core_inverse.allFinite())
        throw NumericalError("core inverse has non-finite entries");
    return model;
}

RankingVector emr_rank(const EmrModel& model, const Eigen::VectorXd& y) {
    if (static_cast<std::size_t>(y.size()) != model.item_count())
        throw DimensionError("ranking input has length " + std::to_string(y.size()) + ", expected " +
                             std::to_string(model.item_count()));
    Eigen::VectorXd inv_sqrt = model.degree.cwiseSqrt().cwiseInverse();
    Eigen::VectorXd hy = model.weights * inv_sqrt.cwiseProduct(y);
    Eigen::VectorXd core = model.core_inverse * hy;
    Eigen::VectorXd back = model.weights.transpose() * core;
    RankingVector out;
    out.scores = y - inv_sqrt.cwiseProduct(back);
    return out;
}

RankingVector emr_rank_query(const EmrModel& model, std::size_t query) {
    if (query >= model.item_count())
        throw ValidationError("query index " + std::to_string(query) + " out of range");
    Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.item_count()));
    y(static_cast<Eigen::Index>(query)) = 1.0;
    auto out = emr_rank(model, y);
    out.query_index = query;
    return out;
}

double core_inverse_residual(const EmrModel& model) {
    Eigen::VectorXd inv_sqrt = model.degree.cwiseSqrt().cwiseInverse();
    Eigen::SparseMatrix<double> h = model.weights * inv_sqrt.asDiagonal();
    Eigen::MatrixXd core = Eigen::MatrixXd(h * Eigen::SparseMatrix<double>(h.transpose()));
    core.diagonal().array() -= 1.0 / model.alpha;
    Eigen::MatrixXd prod = model.core_inverse * core;
    prod.diagonal().array() -= 1.0;
    return prod.cwiseAbs().maxCoeff();
}

namespace {

constexpr std::array<char, 8> kModelMagic = {'P', 'F', 'M', 'E', 'M', 'R', '\0', '\0'};
constexpr std::uint32_t kModelVersion = 1;

struct Writer {
    std::string bytes;
    void u(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i)
            bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
    void f(double v) { u(std::bit_cast<std::uint64_t>(v), 8); }
};

struct Reader {
    std::string bytes;
    std::size_t pos = 0;
    std::uint64_t u(int width) {
        if (pos + static_cast<std::size_t>(width) > bytes.size())
            throw FormatError("truncated model file");
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += static_cast<std::size_t>(width);
        return v;
    }
    double f() { return std::bit_cast<double>(u(8)); }
};

} // namespace

// Layout (little-endian): magic[8] version:u32 A:u64 m:u64 n:u64 alpha:f64
// fingerprint(len:u32, bytes) anchors:f64[A*m] row-major, Z as CSC
// (nnz:u64, colptr:u64[n+1], rowidx:u32[nnz], values:f64[nnz]), D:f64[n],
// core_inverse:f64[A*A] column-major.
void save_emr_model(const std::filesystem::path& path, const EmrModel& model) {
    Writer w;
    w.bytes.assign(kModelMagic.begin(), kModelMagic.end());
    w.u(kModelVersion, 4);
    const auto a_count = model.anchor_count();
    const auto n = model.item_count();
    w.u(a_count, 8);
    w.u(model.feature_dim(), 8);
    w.u(n, 8);
    w.f(model.alpha);
    w.u(model.dataset_fingerprint.size(), 4);
    w.bytes += model.dataset_fingerprint;
    for (Eigen::Index i = 0; i < model.anchors.size(); ++i)
        w.f(model.anchors.data()[i]);
    Eigen::SparseMatrix<double> z = model.weights;
    z.makeCompressed();
    const auto nnz = static_cast<std::uint64_t>(z.nonZeros());
    w.u(nnz, 8);
    for (std::size_t c = 0; c <= n; ++c)
        w.u(static_cast<std::uint64_t>(z.outerIndexPtr()[c]), 8);
    for (std::uint64_t k = 0; k < nnz; ++k)
        w.u(static_cast<std::uint64_t>(z.innerIndexPtr()[k]), 4);
    for (std::uint64_t k = 0; k < nnz; ++k)
        w.f(z.valuePtr()[k]);
    for (Eigen::Index i = 0; i < model.degree.size(); ++i)
        w.f(model.degree(i));
    for (Eigen::Index i = 0; i < model.core_inverse.size(); ++i)
        w.f(model.core_inverse.data()[i]);

    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError("cannot write model '" + path.string() + "'");
    out.write(w.bytes.data(), static_cast<std::streamsize>(w.bytes.size()));
}

EmrModel load_emr_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open model '" + path.string() + "'");
    Reader r{std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>())};
    for (char expected : kModelMagic) {
        if (static_cast<char>(r.u(1)) != expected)
            throw FormatError("'" + path.string() + "' is not a model file (bad magic)");
    }
    if (auto v = r.u(4); v != kModelVersion)
        throw FormatError("unsupported model version " + std::to_string(v));
    const auto a_count = r.u(8);
    const auto m = r.u(8);
    const auto n = r.u(8);
    if (a_count == 0 || m == 0 || n == 0 || a_count > n || n > (1ull << 32) || m > (1ull << 24))
        throw FormatError("implausible model header");
    EmrModel model;
    model.alpha = r.f();
    const auto fp_len = r.u(4);
    if (r.pos + fp_len > r.bytes.size())
        throw FormatError("truncated model file");
    model.dataset_fingerprint = r.bytes.substr(r.pos, fp_len);
    r.pos += fp_len;
    model.anchors.resize(static_cast<Eigen::Index>(a_count), static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < model.anchors.size(); ++i)
        model.anchors.data()[i] = r.f();
    const auto nnz = r.u(8);
    if (nnz > n * a_count)
        throw FormatError("implausible nonzero count");
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(nnz);
    std::vector<std::uint64_t> colptr(n + 1);
    for (auto& c : colptr)
        c = r.u(8);
    std::vector<std::uint32_t> rows(nnz);
    for (auto& row : rows) {
        row = static_cast<std::uint32_t>(r.u(4));
        if (row >= a_count)
            throw FormatError("anchor index out of range in model file");
    }
    if (colptr.front() != 0 || colptr.back() != nnz)
        throw FormatError("corrupt column pointers in model file");
    for (std::uint64_t c = 0; c < n; ++c) {
        if (colptr[c] > colptr[c + 1])
            throw FormatError("corrupt column pointers in model file");
        for (auto k = colptr[c]; k < colptr[c + 1]; ++k)
            triplets.emplace_back(static_cast<int>(rows[k]), static_cast<int>(c), 0.0);
    }
    for (std::uint64_t k = 0; k < nnz; ++k)
        triplets[k] = Eigen::Triplet<double>(triplets[k].row(), triplets[k].col(), r.f());
    model.weights.resize(static_cast<Eigen::Index>(a_count), static_cast<Eigen::Index>(n));
    model.weights.setFromTriplets(triplets.begin(), triplets.end());
    model.weights.makeCompressed();
    model.degree.resize(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < model.degree.size(); ++i)
        model.degree(i) = r.f();
    model.core_inverse.resize(static_cast<Eigen::Index>(a_count), static_cast<Eigen::Index>(a_count));
    for (Eigen::Index i = 0; i < model.core_inverse.size(); ++i)
        model.core_inverse.data()[i] = r.f();
    if (r.pos != r.bytes.size())
        throw FormatError("trailing bytes in model file");
    return model;
}

EmrModel load_emr_model(const std::filesystem::path& path, const FeatureDataset& ds) {
    EmrModel model = load_emr_model(path);
    if (model.item_count() != ds.size() || model.feature_dim() != ds.dim())
        throw DimensionError("model was built for n=" + std::to_string(model.item_count()) +
                             ", m=" + std::to_string(model.feature_dim()) + " but dataset has n=" +
                             std::to_string(ds.size()) + ", m=" + std::to_string(ds.dim()));
    return model;
}

} // namespace pfm
