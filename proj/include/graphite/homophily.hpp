#pragma once

#include <optional>
#include <span>
#include <vector>

#include "graphite/transform.hpp"

namespace graphite {

enum class SimilarityKind {
    Cosine,        // cos(X[u,:], X[v,:]); 0 when either vector is zero
    BinaryAndInf,  // ||X[u,:] AND X[v,:]||_inf on binarized (>0) rows
    LabelMatch,    // indicator 1[y_u = y_v], generalized to dot(p_u, p_v) for soft labels
};

enum class EdgeUniverse { Original, Nhb, Star };

struct HomophilyReport {
    EdgeUniverse edge_universe = EdgeUniverse::Original;
    double h_feature = 0.0;  // cosine feature homophily
    double h_and = 0.0;      // AND-similarity homophily
    std::optional<double> h_edge;      // needs labels
    std::optional<double> h_adjusted;  // needs labels; empty when degenerate
};

// Per-feature-node class distribution.
struct SoftLabels {
    std::int32_t num_classes = 0;
    std::vector<std::vector<double>> dist;  // one row per feature node, sums to 1
};

struct ImprovementReport {
    std::optional<double> ratio_feature;   // after / before, empty when before == 0
    std::optional<double> ratio_adjusted;
    double delta_feature = 0.0;            // absolute after - before
    double delta_adjusted = 0.0;
    bool adjusted_baseline_nonpositive = false;
};

double similarity(SimilarityKind kind, std::span<const double> u, std::span<const double> v);

double sparse_cosine(std::span<const SparseEntry> a, std::span<const SparseEntry> b);
double sparse_and_inf(std::span<const SparseEntry> a, std::span<const SparseEntry> b);

// Mean similarity over an undirected edge list, each edge counted once.
// Throws std::invalid_argument on an empty edge list. LabelMatch is not a
// row-feature similarity and is rejected here; use adjusted_homophily /
// edge_label_homophily for label-based metrics.
double graph_homophily(const SparseRowMatrix& rows, std::span<const Edge> edges, SimilarityKind kind);

// AND-similarity homophily of a graph over its own edges (Eq. of the
// theoretical assumptions); feature rows are the stored binary features.
double and_homophily(const Graph& g);

// Class distribution of each feature node's labelled neighbors; uniform when
// a feature node has no labelled neighbor.
SoftLabels soft_labels(const TransformedGraph& t);

// Adjusted homophily over the graph's own edges. All nodes must be labeled.
// Throws std::domain_error when the denominator degenerates.
double adjusted_homophily(const Graph& g);

// Adjusted homophily over V*/E* with soft labels on feature nodes: a feature
// node contributes deg(x_k) * p_{x_k}(c) to the class degree sum D_c, and the
// edge similarity is the dot product of endpoint class distributions.
double adjusted_homophily(const TransformedGraph& t, const SoftLabels& soft);

// Edge homophily (mean LabelMatch) over the graph's own edges.
double edge_label_homophily(const Graph& g);

HomophilyReport homophily_report(const Graph& g, EdgeUniverse universe = EdgeUniverse::Original);
HomophilyReport homophily_report(const TransformedGraph& t);

ImprovementReport improvement_ratio(const HomophilyReport& before, const HomophilyReport& after);

// Mean of base joined with added strictly exceeds mean of base, provided every
// added element strictly exceeds mean(base). Returns the comparison outcome;
// throws std::invalid_argument when the precondition fails.
bool lemma4_check(std::span<const double> base, std::span<const double> added);

}  // namespace graphite
