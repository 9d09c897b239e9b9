#include "pfm/synthetic.hpp"

#include "pfm/errors.hpp"

#include <array>
#include <cstdio>
#include <random>

namespace pfm {

LabeledDataset make_bridge_benchmark(const BridgeBenchmarkConfig& cfg) {
    if (cfg.dim < 2)
        throw ValidationError("bridge benchmark needs at least two feature dimensions");
    if (cfg.cluster_size == 0 || cfg.bridge_size == 0)
        throw ValidationError("cluster and bridge sizes must be positive");

    struct Group {
        std::size_t count;
        double axis0;
        double axis1;
        double spread;
        std::array<std::uint8_t, 3> labels;
        const char* tag;
    };
    const std::array<Group, 4> groups = {{
        {cfg.cluster_size, -cfg.separation, 0.0, cfg.cluster_spread, {1, 0, 0}, "a"},
        {cfg.cluster_size, cfg.separation, 0.0, cfg.cluster_spread, {0, 1, 0}, "b"},
        {cfg.bridge_size, 0.0, 0.0, cfg.bridge_spread, {1, 1, 0}, "ab"},
        {cfg.distractor_size, 0.0, 2.0 * cfg.separation, cfg.cluster_spread, {0, 0, 1}, "c"},
    }};

    std::size_t n = 0;
    for (const auto& g : groups)
        n += g.count;
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cfg.dim));
    std::vector<std::string> ids;
    std::vector<std::uint8_t> bits;
    ids.reserve(n);
    bits.reserve(3 * n);
    Eigen::Index row = 0;
    for (const auto& g : groups) {
        for (std::size_t i = 0; i < g.count; ++i, ++row) {
            for (Eigen::Index j = 0; j < x.cols(); ++j)
                x(row, j) = g.spread * gauss(rng);
            x(row, 0) += g.axis0;
            x(row, 1) += g.axis1;
            std::array<char, 32> id{};
            std::snprintf(id.data(), id.size(), "%s%05zu", g.tag, i);
            ids.emplace_back(id.data());
            bits.insert(bits.end(), g.labels.begin(), g.labels.end());
        }
    }
    LabeledDataset out{FeatureDataset(std::move(ids), std::move(x)), std::nullopt};
    out.labels.emplace(n, 3, std::move(bits), std::vector<std::string>{"A", "B", "C"});
    return out;
}

} // namespace pfm
