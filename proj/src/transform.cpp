#include "graphite/transform.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace graphite {

TransformedGraph graphite_transform(const Graph& g, const TransformOptions& opts) {
    TransformedGraph t;
    t.base = g;

    std::vector<std::int64_t> column_count(static_cast<std::size_t>(g.num_features), 0);
    for (const auto& row : g.features) {
        for (std::int32_t k : row) ++column_count[static_cast<std::size_t>(k)];
    }

    t.column_map.assign(static_cast<std::size_t>(g.num_features), -1);
    for (std::int32_t k = 0; k < g.num_features; ++k) {
        if (column_count[static_cast<std::size_t>(k)] == 0) {
            if (!opts.drop_unused_features) {
                throw std::invalid_argument("graphite_transform: unused feature column " +
                                            std::to_string(k) + " and dropping is disabled");
            }
            continue;
        }
        t.column_map[static_cast<std::size_t>(k)] = t.num_feature_nodes++;
        t.retained_columns.push_back(k);
    }

    for (NodeId v = 0; v < g.num_nodes; ++v) {
        for (std::int32_t k : g.features[static_cast<std::size_t>(v)]) {
            std::int32_t ord = t.column_map[static_cast<std::size_t>(k)];
            if (ord >= 0) t.feature_edges.push_back({v, ord});
        }
    }
    std::sort(t.feature_edges.begin(), t.feature_edges.end());

    // Feature-node rows: mean of the incident graph nodes' original rows,
    // accumulated column-wise over each retained column's member set.
    t.x_star.num_cols = g.num_features;
    t.x_star.rows.resize(static_cast<std::size_t>(t.num_all_nodes()));
    for (NodeId v = 0; v < g.num_nodes; ++v) {
        auto& row = t.x_star.rows[static_cast<std::size_t>(v)];
        for (std::int32_t k : g.features[static_cast<std::size_t>(v)]) row.push_back({k, 1.0});
    }

    std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(t.num_feature_nodes));
    for (const FeatureEdge& fe : t.feature_edges) {
        members[static_cast<std::size_t>(fe.feature_node)].push_back(fe.node);
    }
    std::vector<std::int64_t> scratch(static_cast<std::size_t>(g.num_features), 0);
    std::vector<std::int32_t> touched;
    for (std::int32_t ord = 0; ord < t.num_feature_nodes; ++ord) {
        const auto& group = members[static_cast<std::size_t>(ord)];
        touched.clear();
        for (NodeId v : group) {
            for (std::int32_t k : g.features[static_cast<std::size_t>(v)]) {
                if (scratch[static_cast<std::size_t>(k)] == 0) touched.push_back(k);
                ++scratch[static_cast<std::size_t>(k)];
            }
        }
        std::sort(touched.begin(), touched.end());
        auto& row = t.x_star.rows[static_cast<std::size_t>(t.feature_node_vertex(ord))];
        row.reserve(touched.size());
        const auto count = static_cast<Real>(group.size());
        for (std::int32_t k : touched) {
            row.push_back({k, static_cast<Real>(scratch[static_cast<std::size_t>(k)]) / count});
            scratch[static_cast<std::size_t>(k)] = 0;
        }
    }

    if (opts.zero_graph_node_features) {
        for (NodeId v = 0; v < g.num_nodes; ++v) t.x_star.rows[static_cast<std::size_t>(v)].clear();
    } else if (opts.row_normalize_graph_node_features) {
        for (NodeId v = 0; v < g.num_nodes; ++v) {
            auto& row = t.x_star.rows[static_cast<std::size_t>(v)];
            Real sum = 0.0;
            for (const auto& e : row) sum += e.value;
            if (sum > 0.0) {
                for (auto& e : row) e.value /= sum;
            }
        }
    }
    return t;
}

TransformedGraph identity_transform(const Graph& g) {
    TransformedGraph t;
    t.base = g;
    t.column_map.assign(static_cast<std::size_t>(g.num_features), -1);
    t.x_star = feature_matrix(g);
    return t;
}

Graph nhb_transform(const Graph& g, NodeId node_cap) {
    if (g.num_nodes > node_cap) {
        throw std::invalid_argument("nhb_transform: " + std::to_string(g.num_nodes) +
                                    " nodes exceeds cap " + std::to_string(node_cap) +
                                    " (pairwise scan is quadratic)");
    }
    std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(g.num_features));
    for (NodeId v = 0; v < g.num_nodes; ++v) {
        for (std::int32_t k : g.features[static_cast<std::size_t>(v)]) {
            members[static_cast<std::size_t>(k)].push_back(v);
        }
    }

    Graph out = g;
    for (const auto& col : members) {
        for (std::size_t i = 0; i < col.size(); ++i) {
            for (std::size_t j = i + 1; j < col.size(); ++j) {
                out.edges.push_back({col[i], col[j]});
            }
        }
    }
    std::sort(out.edges.begin(), out.edges.end());
    out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
    return out;
}

std::optional<std::int32_t> two_hop_witness(const TransformedGraph& t, NodeId u, NodeId v) {
    if (u < 0 || u >= t.base.num_nodes || v < 0 || v >= t.base.num_nodes) {
        throw std::out_of_range("two_hop_witness: node index out of range");
    }
    if (u == v) throw std::invalid_argument("two_hop_witness: nodes must be distinct");

    const auto& a = t.base.features[static_cast<std::size_t>(u)];
    const auto& b = t.base.features[static_cast<std::size_t>(v)];
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            std::int32_t ord = t.column_map[static_cast<std::size_t>(a[i])];
            if (ord >= 0) return ord;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return std::nullopt;
}

SizeReport size_report(const Graph& g, const TransformedGraph& t) {
    if (t.base != g) {
        throw std::invalid_argument("size_report: transformed graph was not produced from this graph");
    }
    SizeReport r;
    r.nodes_before = g.num_nodes;
    r.nodes_after = t.num_all_nodes();
    r.edges_before = g.num_edges();
    r.feature_nnz = static_cast<std::int64_t>(t.feature_edges.size());
    r.edges_after = r.edges_before + r.feature_nnz;
    return r;
}

std::vector<Edge> star_edges(const TransformedGraph& t) {
    std::vector<Edge> edges = t.base.edges;
    edges.reserve(edges.size() + t.feature_edges.size());
    for (const FeatureEdge& fe : t.feature_edges) {
        edges.push_back({fe.node, t.feature_node_vertex(fe.feature_node)});
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

}  // namespace graphite
