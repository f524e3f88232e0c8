#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "graphite/matrix.hpp"

namespace graphite {

using NodeId = std::int32_t;

// Canonical undirected edge: u < v always.
struct Edge {
    NodeId u;
    NodeId v;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Undirected graph with binary discrete node features and optional labels.
// Immutable after construction; build through build_graph.
struct Graph {
    NodeId num_nodes = 0;
    std::vector<Edge> edges;                         // sorted, deduplicated, self-loop free
    std::int32_t num_features = 0;
    std::vector<std::vector<std::int32_t>> features; // per node: sorted feature columns with value 1
    std::int32_t num_classes = 0;                    // 0 when unlabeled
    std::vector<std::int32_t> labels;                // -1 where unlabeled; size num_nodes when labeled
    std::vector<std::uint8_t> label_mask;            // 1 where a label is present

    bool has_labels() const { return num_classes > 0; }
    bool all_labeled() const;
    std::int64_t num_edges() const { return static_cast<std::int64_t>(edges.size()); }
    std::int64_t feature_nnz() const;
    std::vector<std::int64_t> degrees() const;

    bool operator==(const Graph&) const = default;
};

// Symmetric CSR adjacency with a uniform edge weight.
struct CsrAdjacency {
    std::vector<std::int64_t> row_offsets;  // size num_nodes + 1
    std::vector<NodeId> col_indices;        // sorted within each row
    std::vector<Real> weights;

    std::int64_t num_nodes() const { return static_cast<std::int64_t>(row_offsets.size()) - 1; }
    std::int64_t nnz() const { return static_cast<std::int64_t>(col_indices.size()); }
    std::int64_t degree(NodeId u) const { return row_offsets[u + 1] - row_offsets[u]; }
};

// Checks of the theoretical assumptions on a graph.
struct AssumptionReport {
    bool hom_lt_one = false;                       // hom(G) < 1 under AND similarity
    bool exists_similar_nonadjacent_pair = false;  // some non-edge shares a feature
    double feature_count_ratio = 0.0;              // |X| / |V|
    double feature_nnz_ratio = 0.0;                // ||X||_0 / |E|
    bool within_feature_count_bound = false;
    bool within_nnz_bound = false;
    bool every_feature_used = false;

    bool all_passed() const {
        return hom_lt_one && exists_similar_nonadjacent_pair && within_feature_count_bound &&
               within_nnz_bound && every_feature_used;
    }
};

struct FeatureEntry {
    NodeId node;
    std::int32_t feature;
    double value = 1.0;  // must be 0 or 1; zeros are dropped
};

// Validates and canonicalizes raw input: edges get lower-index-first order,
// duplicates and self-loops are removed, feature entries are deduplicated.
// Throws std::invalid_argument on out-of-range indices, non-binary feature
// values, or labels outside [0, num_classes).
Graph build_graph(NodeId num_nodes,
                  std::span<const std::pair<NodeId, NodeId>> raw_edges,
                  std::int32_t num_features,
                  std::span<const FeatureEntry> feature_entries,
                  std::span<const std::int32_t> labels = {},
                  std::int32_t num_classes = 0);

// Requires at least one edge; throws std::invalid_argument otherwise.
AssumptionReport check_assumptions(const Graph& g,
                                   double c_features = 1.0,
                                   double c_nnz = 4.0);

CsrAdjacency to_csr(const Graph& g, Real weight = 1.0);

// Sorted binary rows share a column.
bool rows_intersect(std::span<const std::int32_t> a, std::span<const std::int32_t> b);

// Feature matrix of g as a sparse real matrix (all stored values are 1).
SparseRowMatrix feature_matrix(const Graph& g);

}  // namespace graphite
