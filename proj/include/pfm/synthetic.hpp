#pragma once

#include "pfm/dataset.hpp"

#include <cstdint>

namespace pfm {

/// Multi-label benchmark with classes {A, B, C}: Gaussian clusters labelled
/// {A} and {B}, a bridge cluster labelled {A, B} halfway between them, and a
/// distractor cluster labelled {C} off to the side.
struct BridgeBenchmarkConfig {
    std::size_t cluster_size = 150;
    std::size_t bridge_size = 40;
    std::size_t distractor_size = 150;
    std::size_t dim = 16;
    double separation = 4.0;     // A and B centers sit at -/+ separation on axis 0
    double cluster_spread = 1.0;
    double bridge_spread = 0.6;
    std::uint64_t seed = 1;
};

LabeledDataset make_bridge_benchmark(const BridgeBenchmarkConfig& cfg);

} // namespace pfm
