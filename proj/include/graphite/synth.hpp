#pragma once

#include <cstdint>

#include "graphite/graph.hpp"

namespace graphite {

// Stochastic block model with class-indicative feature blocks. Heterophilic
// regime is p_out > p_in. feature_noise_prob drops each home-block feature
// with that probability and adds one random out-of-block feature with the
// same probability.
struct SynthParams {
    NodeId num_nodes = 200;
    std::int32_t num_classes = 4;
    std::int32_t features_per_class = 4;
    double intra_class_edge_prob = 0.02;   // p_in
    double inter_class_edge_prob = 0.10;   // p_out
    double feature_noise_prob = 0.1;
    std::uint64_t seed = 0;
    int max_retries = 64;

    std::int32_t num_features() const { return num_classes * features_per_class; }
    bool heterophilic_regime() const { return inter_class_edge_prob > intra_class_edge_prob; }

    void validate() const;
};

// Deterministic in seed. Regenerates (bounded by max_retries) until the graph
// passes check_assumptions and, in the heterophilic regime, has AND-similarity
// homophily below 0.5. Throws std::runtime_error when the budget is exhausted.
Graph synth_heterophilic(const SynthParams& params);

}  // namespace graphite
