#pragma once

#include <random>
#include <utility>
#include <vector>

#include "graphite/graph.hpp"
#include "graphite/rng.hpp"

namespace graphite::testing {

// Five-node example: two classes, feature 0 marks {v0, v1}, feature 1 marks
// {v2, v3, v4}, and all four drawn edges cross the classes.
inline Graph fig1_fixture() {
    const std::vector<std::pair<NodeId, NodeId>> edges = {{0, 2}, {0, 3}, {1, 3}, {1, 4}};
    const std::vector<FeatureEntry> feats = {
        {0, 0}, {1, 0}, {2, 1}, {3, 1}, {4, 1},
    };
    const std::vector<std::int32_t> labels = {0, 0, 1, 1, 1};
    return build_graph(5, edges, 2, feats, labels, 2);
}

// Uniform random labeled graph for property tests; guaranteed at least one
// edge. Kept separate from the library's generator on purpose.
inline Graph random_graph(std::mt19937_64& rng, NodeId max_nodes = 50, std::int32_t max_features = 12) {
    const NodeId n = 3 + static_cast<NodeId>(rng() % static_cast<std::uint64_t>(max_nodes - 2));
    const std::int32_t f = 1 + static_cast<std::int32_t>(rng() % static_cast<std::uint64_t>(max_features));
    const std::int32_t c = 2 + static_cast<std::int32_t>(rng() % 3);
    const double edge_p = 0.05 + 0.25 * canonical_double(rng);
    const double feat_p = 0.1 + 0.4 * canonical_double(rng);

    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = i + 1; j < n; ++j) {
            if (canonical_double(rng) < edge_p) edges.emplace_back(i, j);
        }
    }
    if (edges.empty()) edges.emplace_back(0, 1);

    std::vector<FeatureEntry> feats;
    for (NodeId v = 0; v < n; ++v) {
        for (std::int32_t k = 0; k < f; ++k) {
            if (canonical_double(rng) < feat_p) feats.push_back({v, k, 1.0});
        }
    }

    std::vector<std::int32_t> labels(static_cast<std::size_t>(n));
    for (auto& y : labels) y = static_cast<std::int32_t>(rng() % static_cast<std::uint64_t>(c));

    return build_graph(n, edges, f, feats, labels, c);
}

}  // namespace graphite::testing
