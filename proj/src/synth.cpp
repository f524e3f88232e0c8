#include "graphite/synth.hpp"

#include <stdexcept>
#include <string>

#include "graphite/homophily.hpp"
#include "graphite/rng.hpp"

namespace graphite {

void SynthParams::validate() const {
    if (num_nodes < 2) throw std::invalid_argument("SynthParams: need at least 2 nodes");
    if (num_classes < 2) throw std::invalid_argument("SynthParams: need at least 2 classes");
    if (num_nodes < num_classes) throw std::invalid_argument("SynthParams: fewer nodes than classes");
    if (features_per_class < 1) throw std::invalid_argument("SynthParams: features_per_class must be >= 1");
    auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!probability(intra_class_edge_prob) || !probability(inter_class_edge_prob) ||
        !probability(feature_noise_prob)) {
        throw std::invalid_argument("SynthParams: probabilities must lie in [0, 1]");
    }
    if (max_retries < 1) throw std::invalid_argument("SynthParams: max_retries must be >= 1");
}

namespace {

Graph generate_once(const SynthParams& p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);

    // Balanced class assignment, then shuffled.
    std::vector<std::int32_t> labels(static_cast<std::size_t>(p.num_nodes));
    for (NodeId v = 0; v < p.num_nodes; ++v) {
        labels[static_cast<std::size_t>(v)] = v % p.num_classes;
    }
    shuffle_deterministic(labels, rng);

    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId i = 0; i < p.num_nodes; ++i) {
        for (NodeId j = i + 1; j < p.num_nodes; ++j) {
            const bool same = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)];
            const double prob = same ? p.intra_class_edge_prob : p.inter_class_edge_prob;
            if (canonical_double(rng) < prob) edges.emplace_back(i, j);
        }
    }

    // Noise drops each home-block column with probability noise and, with the
    // same probability, adds one uniformly random out-of-block column. Kept
    // one-sided so cross-class feature sharing stays rare.
    std::vector<FeatureEntry> entries;
    const std::int32_t fpc = p.features_per_class;
    for (NodeId v = 0; v < p.num_nodes; ++v) {
        const std::int32_t block = labels[static_cast<std::size_t>(v)] * fpc;
        for (std::int32_t k = block; k < block + fpc; ++k) {
            if (canonical_double(rng) >= p.feature_noise_prob) entries.push_back({v, k, 1.0});
        }
        if (canonical_double(rng) < p.feature_noise_prob) {
            const std::int32_t foreign_count = p.num_features() - fpc;
            if (foreign_count > 0) {
                auto pick = static_cast<std::int32_t>(rng() % static_cast<std::uint64_t>(foreign_count));
                if (pick >= block) pick += fpc;
                entries.push_back({v, pick, 1.0});
            }
        }
    }

    return build_graph(p.num_nodes, edges, p.num_features(), entries, labels, p.num_classes);
}

}  // namespace

Graph synth_heterophilic(const SynthParams& params) {
    params.validate();
    for (int attempt = 0; attempt < params.max_retries; ++attempt) {
        Graph g = generate_once(params, mix_seed(params.seed, static_cast<std::uint64_t>(attempt)));
        if (g.edges.empty()) continue;
        if (!check_assumptions(g).all_passed()) continue;
        if (params.heterophilic_regime() && and_homophily(g) >= 0.5) continue;
        return g;
    }
    throw std::runtime_error("synth_heterophilic: retry budget exhausted after " +
                             std::to_string(params.max_retries) + " attempts");
}

}  // namespace graphite
