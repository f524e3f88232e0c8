#include "graphite/graph.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace graphite {

bool Graph::all_labeled() const {
    if (!has_labels()) return false;
    for (NodeId v = 0; v < num_nodes; ++v) {
        if (!label_mask[static_cast<std::size_t>(v)]) return false;
    }
    return true;
}

std::int64_t Graph::feature_nnz() const {
    std::int64_t n = 0;
    for (const auto& row : features) n += static_cast<std::int64_t>(row.size());
    return n;
}

std::vector<std::int64_t> Graph::degrees() const {
    std::vector<std::int64_t> deg(static_cast<std::size_t>(num_nodes), 0);
    for (const Edge& e : edges) {
        ++deg[static_cast<std::size_t>(e.u)];
        ++deg[static_cast<std::size_t>(e.v)];
    }
    return deg;
}

Graph build_graph(NodeId num_nodes,
                  std::span<const std::pair<NodeId, NodeId>> raw_edges,
                  std::int32_t num_features,
                  std::span<const FeatureEntry> feature_entries,
                  std::span<const std::int32_t> labels,
                  std::int32_t num_classes) {
    if (num_nodes < 0) throw std::invalid_argument("build_graph: negative node count");
    if (num_features < 0) throw std::invalid_argument("build_graph: negative feature count");

    Graph g;
    g.num_nodes = num_nodes;
    g.num_features = num_features;

    g.edges.reserve(raw_edges.size());
    for (const auto& [a, b] : raw_edges) {
        if (a < 0 || a >= num_nodes || b < 0 || b >= num_nodes) {
            throw std::invalid_argument("build_graph: edge endpoint out of range: (" +
                                        std::to_string(a) + ", " + std::to_string(b) + ")");
        }
        if (a == b) continue;  // self-loops dropped at ingestion
        g.edges.push_back(a < b ? Edge{a, b} : Edge{b, a});
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());

    g.features.assign(static_cast<std::size_t>(num_nodes), {});
    for (const FeatureEntry& e : feature_entries) {
        if (e.node < 0 || e.node >= num_nodes) {
            throw std::invalid_argument("build_graph: feature entry node out of range: " +
                                        std::to_string(e.node));
        }
        if (e.feature < 0 || e.feature >= num_features) {
            throw std::invalid_argument("build_graph: feature column out of range: " +
                                        std::to_string(e.feature));
        }
        if (e.value != 0.0 && e.value != 1.0) {
            throw std::invalid_argument("build_graph: non-binary feature value " +
                                        std::to_string(e.value));
        }
        if (e.value == 1.0) g.features[static_cast<std::size_t>(e.node)].push_back(e.feature);
    }
    for (auto& row : g.features) {
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
    }

    if (!labels.empty()) {
        if (static_cast<NodeId>(labels.size()) != num_nodes) {
            throw std::invalid_argument("build_graph: labels must cover all nodes (-1 = unlabeled)");
        }
        if (num_classes <= 0) throw std::invalid_argument("build_graph: labels given without class count");
        g.num_classes = num_classes;
        g.labels.assign(labels.begin(), labels.end());
        g.label_mask.assign(static_cast<std::size_t>(num_nodes), 0);
        for (NodeId v = 0; v < num_nodes; ++v) {
            std::int32_t y = g.labels[static_cast<std::size_t>(v)];
            if (y == -1) continue;
            if (y < 0 || y >= num_classes) {
                throw std::invalid_argument("build_graph: label out of class range at node " +
                                            std::to_string(v));
            }
            g.label_mask[static_cast<std::size_t>(v)] = 1;
        }
    }
    return g;
}

bool rows_intersect(std::span<const std::int32_t> a, std::span<const std::int32_t> b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return true;
        if (a[i] < b[j]) ++i;
        else ++j;
    }
    return false;
}

AssumptionReport check_assumptions(const Graph& g, double c_features, double c_nnz) {
    if (g.edges.empty()) throw std::invalid_argument("check_assumptions: graph has no edges");

    AssumptionReport r;

    std::int64_t similar_edges = 0;
    for (const Edge& e : g.edges) {
        if (rows_intersect(g.features[static_cast<std::size_t>(e.u)],
                           g.features[static_cast<std::size_t>(e.v)])) {
            ++similar_edges;
        }
    }
    r.hom_lt_one = similar_edges < g.num_edges();

    // A non-adjacent pair sharing a feature must co-occur in some column.
    std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(g.num_features));
    for (NodeId v = 0; v < g.num_nodes; ++v) {
        for (std::int32_t k : g.features[static_cast<std::size_t>(v)]) {
            members[static_cast<std::size_t>(k)].push_back(v);
        }
    }
    auto adjacent = [&](NodeId a, NodeId b) {
        Edge probe = a < b ? Edge{a, b} : Edge{b, a};
        return std::binary_search(g.edges.begin(), g.edges.end(), probe);
    };
    for (const auto& col : members) {
        for (std::size_t i = 0; i < col.size() && !r.exists_similar_nonadjacent_pair; ++i) {
            for (std::size_t j = i + 1; j < col.size(); ++j) {
                if (!adjacent(col[i], col[j])) {
                    r.exists_similar_nonadjacent_pair = true;
                    break;
                }
            }
        }
        if (r.exists_similar_nonadjacent_pair) break;
    }

    r.feature_count_ratio = g.num_nodes > 0
                                ? static_cast<double>(g.num_features) / static_cast<double>(g.num_nodes)
                                : 0.0;
    r.feature_nnz_ratio = static_cast<double>(g.feature_nnz()) / static_cast<double>(g.num_edges());
    r.within_feature_count_bound = r.feature_count_ratio <= c_features;
    r.within_nnz_bound = r.feature_nnz_ratio <= c_nnz;

    r.every_feature_used = true;
    for (const auto& col : members) {
        if (col.empty()) {
            r.every_feature_used = false;
            break;
        }
    }
    return r;
}

CsrAdjacency to_csr(const Graph& g, Real weight) {
    CsrAdjacency csr;
    const auto n = static_cast<std::size_t>(g.num_nodes);
    csr.row_offsets.assign(n + 1, 0);
    for (const Edge& e : g.edges) {
        ++csr.row_offsets[static_cast<std::size_t>(e.u) + 1];
        ++csr.row_offsets[static_cast<std::size_t>(e.v) + 1];
    }
    for (std::size_t i = 0; i < n; ++i) csr.row_offsets[i + 1] += csr.row_offsets[i];

    csr.col_indices.resize(static_cast<std::size_t>(csr.row_offsets[n]));
    csr.weights.assign(csr.col_indices.size(), weight);
    std::vector<std::int64_t> cursor(csr.row_offsets.begin(), csr.row_offsets.end() - 1);
    for (const Edge& e : g.edges) {  // edges sorted by (u, v): rows fill in sorted order
        csr.col_indices[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.u)]++)] = e.v;
    }
    for (const Edge& e : g.edges) {
        csr.col_indices[static_cast<std::size_t>(cursor[static_cast<std::size_t>(e.v)]++)] = e.u;
    }
    for (std::size_t i = 0; i < n; ++i) {
        auto begin = csr.col_indices.begin() + csr.row_offsets[i];
        auto end = csr.col_indices.begin() + csr.row_offsets[i + 1];
        std::sort(begin, end);
    }
    return csr;
}

SparseRowMatrix feature_matrix(const Graph& g) {
    SparseRowMatrix m;
    m.num_cols = g.num_features;
    m.rows.resize(static_cast<std::size_t>(g.num_nodes));
    for (NodeId v = 0; v < g.num_nodes; ++v) {
        const auto& row = g.features[static_cast<std::size_t>(v)];
        auto& out = m.rows[static_cast<std::size_t>(v)];
        out.reserve(row.size());
        for (std::int32_t k : row) out.push_back({k, 1.0});
    }
    return m;
}

}  // namespace graphite
