#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "graphite/graph.hpp"

namespace graphite {

struct TransformOptions {
    bool drop_unused_features = true;
    bool zero_graph_node_features = false;     // appendix knob used for Squirrel-F
    bool row_normalize_graph_node_features = false;  // appendix knob used for Cora/CiteSeer

    bool operator==(const TransformOptions&) const = default;
};

// A feature edge links graph node `node` to feature node ordinal `feature_node`
// (vertex index base.num_nodes + feature_node).
struct FeatureEdge {
    NodeId node;
    std::int32_t feature_node;

    friend bool operator==(const FeatureEdge&, const FeatureEdge&) = default;
    friend auto operator<=>(const FeatureEdge&, const FeatureEdge&) = default;
};

// Output of the feature-node transformation. Graph edges and feature edges are
// kept separate so message passing can weight them differently and so
// homophily is computable over either edge universe.
struct TransformedGraph {
    Graph base;                              // graph nodes and graph edges, untouched
    std::int32_t num_feature_nodes = 0;      // retained feature columns
    std::vector<FeatureEdge> feature_edges;  // sorted by (node, feature_node)
    SparseRowMatrix x_star;                  // rows over V then V_X; columns keep original indices
    std::vector<std::int32_t> column_map;    // original column -> feature node ordinal, -1 if dropped
    std::vector<std::int32_t> retained_columns;  // feature node ordinal -> original column

    std::int64_t num_all_nodes() const { return base.num_nodes + num_feature_nodes; }
    NodeId feature_node_vertex(std::int32_t ordinal) const { return base.num_nodes + ordinal; }

    bool operator==(const TransformedGraph&) const = default;
};

struct SizeReport {
    std::int64_t nodes_before = 0;
    std::int64_t nodes_after = 0;
    std::int64_t edges_before = 0;
    std::int64_t edges_after = 0;
    std::int64_t feature_nnz = 0;  // feature edges added = ||X_retained||_0
};

// Adds one feature node per retained feature column, one feature edge per
// stored 1, and assembles the augmented feature matrix: graph-node rows keep
// the original features, feature-node rows get the mean feature vector of
// their neighbors. Zeroing / normalizing of graph-node rows (options) happens
// after feature-node rows are computed.
TransformedGraph graphite_transform(const Graph& g, const TransformOptions& opts = {});

// Wraps a graph as a TransformedGraph with no feature nodes, so the same
// model can run on untransformed graphs.
TransformedGraph identity_transform(const Graph& g);

// Naive homophily booster: directly connect every pair of distinct nodes that
// shares at least one feature. Quadratic; refuses graphs above node_cap.
Graph nhb_transform(const Graph& g, NodeId node_cap = 10000);

// Feature node ordinal witnessing a 2-hop path u -> x_k -> v, if u and v
// share a retained feature. u, v must be distinct graph nodes.
std::optional<std::int32_t> two_hop_witness(const TransformedGraph& t, NodeId u, NodeId v);

// Exact size accounting for the transformation; throws std::invalid_argument
// if t was not produced from g.
SizeReport size_report(const Graph& g, const TransformedGraph& t);

// Graph edges plus feature edges as one canonical edge list over V*.
std::vector<Edge> star_edges(const TransformedGraph& t);

}  // namespace graphite
