#include "graphite/homophily.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graphite {

double similarity(SimilarityKind kind, std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw std::invalid_argument("similarity: dimension mismatch");
    switch (kind) {
        case SimilarityKind::Cosine: {
            double dot = 0.0, nu = 0.0, nv = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) {
                dot += u[i] * v[i];
                nu += u[i] * u[i];
                nv += v[i] * v[i];
            }
            if (nu == 0.0 || nv == 0.0) return 0.0;
            return dot / (std::sqrt(nu) * std::sqrt(nv));
        }
        case SimilarityKind::BinaryAndInf: {
            for (std::size_t i = 0; i < u.size(); ++i) {
                if (u[i] > 0.0 && v[i] > 0.0) return 1.0;
            }
            return 0.0;
        }
        case SimilarityKind::LabelMatch: {
            double dot = 0.0;
            for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * v[i];
            return dot;
        }
    }
    throw std::invalid_argument("similarity: unknown kind");
}

double sparse_cosine(std::span<const SparseEntry> a, std::span<const SparseEntry> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& e : a) na += e.value * e.value;
    for (const auto& e : b) nb += e.value * e.value;
    if (na == 0.0 || nb == 0.0) return 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].col == b[j].col) {
            dot += a[i].value * b[j].value;
            ++i;
            ++j;
        } else if (a[i].col < b[j].col) {
            ++i;
        } else {
            ++j;
        }
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double sparse_and_inf(std::span<const SparseEntry> a, std::span<const SparseEntry> b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].col == b[j].col) {
            if (a[i].value > 0.0 && b[j].value > 0.0) return 1.0;
            ++i;
            ++j;
        } else if (a[i].col < b[j].col) {
            ++i;
        } else {
            ++j;
        }
    }
    return 0.0;
}

double graph_homophily(const SparseRowMatrix& rows, std::span<const Edge> edges, SimilarityKind kind) {
    if (edges.empty()) throw std::invalid_argument("graph_homophily: empty edge set");
    if (kind == SimilarityKind::LabelMatch) {
        throw std::invalid_argument("graph_homophily: LabelMatch needs label distributions");
    }
    // Sorted-edge accumulation keeps the report bit-reproducible.
    std::vector<Edge> ordered(edges.begin(), edges.end());
    std::sort(ordered.begin(), ordered.end());
    double sum = 0.0;
    for (const Edge& e : ordered) {
        const auto& ru = rows.rows[static_cast<std::size_t>(e.u)];
        const auto& rv = rows.rows[static_cast<std::size_t>(e.v)];
        sum += kind == SimilarityKind::Cosine ? sparse_cosine(ru, rv) : sparse_and_inf(ru, rv);
    }
    return sum / static_cast<double>(ordered.size());
}

double and_homophily(const Graph& g) {
    return graph_homophily(feature_matrix(g), g.edges, SimilarityKind::BinaryAndInf);
}

SoftLabels soft_labels(const TransformedGraph& t) {
    if (!t.base.has_labels()) throw std::invalid_argument("soft_labels: graph has no labels");
    SoftLabels s;
    s.num_classes = t.base.num_classes;
    s.dist.assign(static_cast<std::size_t>(t.num_feature_nodes),
                  std::vector<double>(static_cast<std::size_t>(s.num_classes), 0.0));
    std::vector<std::int64_t> total(static_cast<std::size_t>(t.num_feature_nodes), 0);
    for (const FeatureEdge& fe : t.feature_edges) {
        if (!t.base.label_mask[static_cast<std::size_t>(fe.node)]) continue;
        std::int32_t y = t.base.labels[static_cast<std::size_t>(fe.node)];
        s.dist[static_cast<std::size_t>(fe.feature_node)][static_cast<std::size_t>(y)] += 1.0;
        ++total[static_cast<std::size_t>(fe.feature_node)];
    }
    for (std::int32_t f = 0; f < t.num_feature_nodes; ++f) {
        auto& d = s.dist[static_cast<std::size_t>(f)];
        if (total[static_cast<std::size_t>(f)] == 0) {
            std::fill(d.begin(), d.end(), 1.0 / static_cast<double>(s.num_classes));
        } else {
            for (double& p : d) p /= static_cast<double>(total[static_cast<std::size_t>(f)]);
        }
    }
    return s;
}

namespace {

// Shared core of Eq. 18: endpoints carry class distributions, degrees are
// counted in the edge universe being measured.
double adjusted_homophily_impl(std::span<const Edge> edges,
                               std::int64_t num_vertices,
                               std::int32_t num_classes,
                               const std::vector<std::vector<double>>& dist) {
    if (edges.empty()) throw std::invalid_argument("adjusted_homophily: empty edge set");

    std::vector<Edge> ordered(edges.begin(), edges.end());
    std::sort(ordered.begin(), ordered.end());

    std::vector<std::int64_t> deg(static_cast<std::size_t>(num_vertices), 0);
    double h_edge = 0.0;
    for (const Edge& e : ordered) {
        ++deg[static_cast<std::size_t>(e.u)];
        ++deg[static_cast<std::size_t>(e.v)];
        const auto& pu = dist[static_cast<std::size_t>(e.u)];
        const auto& pv = dist[static_cast<std::size_t>(e.v)];
        double dot = 0.0;
        for (std::int32_t c = 0; c < num_classes; ++c) {
            dot += pu[static_cast<std::size_t>(c)] * pv[static_cast<std::size_t>(c)];
        }
        h_edge += dot;
    }
    h_edge /= static_cast<double>(ordered.size());

    std::vector<double> class_degree(static_cast<std::size_t>(num_classes), 0.0);
    for (std::int64_t v = 0; v < num_vertices; ++v) {
        const auto& p = dist[static_cast<std::size_t>(v)];
        for (std::int32_t c = 0; c < num_classes; ++c) {
            class_degree[static_cast<std::size_t>(c)] +=
                static_cast<double>(deg[static_cast<std::size_t>(v)]) * p[static_cast<std::size_t>(c)];
        }
    }
    const double two_m = 2.0 * static_cast<double>(ordered.size());
    double s = 0.0;
    for (double dc : class_degree) s += (dc / two_m) * (dc / two_m);

    const double denom = 1.0 - s;
    if (std::abs(denom) < 1e-15) {
        throw std::domain_error("adjusted_homophily: degenerate denominator (1 - sum D_c^2/(2|E|)^2 = 0)");
    }
    return (h_edge - s) / denom;
}

std::vector<std::vector<double>> one_hot_labels(const Graph& g) {
    if (!g.all_labeled()) throw std::invalid_argument("adjusted_homophily: all graph nodes must be labeled");
    std::vector<std::vector<double>> dist(static_cast<std::size_t>(g.num_nodes),
                                          std::vector<double>(static_cast<std::size_t>(g.num_classes), 0.0));
    for (NodeId v = 0; v < g.num_nodes; ++v) {
        dist[static_cast<std::size_t>(v)][static_cast<std::size_t>(g.labels[static_cast<std::size_t>(v)])] = 1.0;
    }
    return dist;
}

}  // namespace

double adjusted_homophily(const Graph& g) {
    return adjusted_homophily_impl(g.edges, g.num_nodes, g.num_classes, one_hot_labels(g));
}

double adjusted_homophily(const TransformedGraph& t, const SoftLabels& soft) {
    if (soft.num_classes != t.base.num_classes ||
        static_cast<std::int32_t>(soft.dist.size()) != t.num_feature_nodes) {
        throw std::invalid_argument("adjusted_homophily: soft labels do not match the transformed graph");
    }
    auto dist = one_hot_labels(t.base);
    dist.insert(dist.end(), soft.dist.begin(), soft.dist.end());
    return adjusted_homophily_impl(star_edges(t), t.num_all_nodes(), t.base.num_classes, dist);
}

double edge_label_homophily(const Graph& g) {
    if (g.edges.empty()) throw std::invalid_argument("edge_label_homophily: empty edge set");
    if (!g.all_labeled()) throw std::invalid_argument("edge_label_homophily: all nodes must be labeled");
    std::int64_t same = 0;
    for (const Edge& e : g.edges) {
        if (g.labels[static_cast<std::size_t>(e.u)] == g.labels[static_cast<std::size_t>(e.v)]) ++same;
    }
    return static_cast<double>(same) / static_cast<double>(g.num_edges());
}

HomophilyReport homophily_report(const Graph& g, EdgeUniverse universe) {
    HomophilyReport r;
    r.edge_universe = universe;
    SparseRowMatrix x = feature_matrix(g);
    r.h_feature = graph_homophily(x, g.edges, SimilarityKind::Cosine);
    r.h_and = graph_homophily(x, g.edges, SimilarityKind::BinaryAndInf);
    if (g.has_labels() && g.all_labeled()) {
        r.h_edge = edge_label_homophily(g);
        try {
            r.h_adjusted = adjusted_homophily(g);
        } catch (const std::domain_error&) {
            r.h_adjusted = std::nullopt;
        }
    }
    return r;
}

HomophilyReport homophily_report(const TransformedGraph& t) {
    HomophilyReport r;
    r.edge_universe = EdgeUniverse::Star;
    const std::vector<Edge> edges = star_edges(t);
    r.h_feature = graph_homophily(t.x_star, edges, SimilarityKind::Cosine);
    r.h_and = graph_homophily(t.x_star, edges, SimilarityKind::BinaryAndInf);
    if (t.base.has_labels() && t.base.all_labeled()) {
        const SoftLabels soft = soft_labels(t);
        auto dist = std::vector<std::vector<double>>{};
        // Edge label homophily over E* with soft endpoints.
        dist.reserve(static_cast<std::size_t>(t.num_all_nodes()));
        for (NodeId v = 0; v < t.base.num_nodes; ++v) {
            std::vector<double> p(static_cast<std::size_t>(t.base.num_classes), 0.0);
            p[static_cast<std::size_t>(t.base.labels[static_cast<std::size_t>(v)])] = 1.0;
            dist.push_back(std::move(p));
        }
        dist.insert(dist.end(), soft.dist.begin(), soft.dist.end());
        double h_edge = 0.0;
        for (const Edge& e : edges) {
            const auto& pu = dist[static_cast<std::size_t>(e.u)];
            const auto& pv = dist[static_cast<std::size_t>(e.v)];
            double dot = 0.0;
            for (std::size_t c = 0; c < pu.size(); ++c) dot += pu[c] * pv[c];
            h_edge += dot;
        }
        r.h_edge = h_edge / static_cast<double>(edges.size());
        try {
            r.h_adjusted = adjusted_homophily(t, soft);
        } catch (const std::domain_error&) {
            r.h_adjusted = std::nullopt;
        }
    }
    return r;
}

ImprovementReport improvement_ratio(const HomophilyReport& before, const HomophilyReport& after) {
    ImprovementReport r;
    r.delta_feature = after.h_feature - before.h_feature;
    if (before.h_feature != 0.0) r.ratio_feature = after.h_feature / before.h_feature;
    if (before.h_adjusted && after.h_adjusted) {
        r.delta_adjusted = *after.h_adjusted - *before.h_adjusted;
        r.adjusted_baseline_nonpositive = *before.h_adjusted <= 0.0;
        if (*before.h_adjusted != 0.0) r.ratio_adjusted = *after.h_adjusted / *before.h_adjusted;
    }
    return r;
}

bool lemma4_check(std::span<const double> base, std::span<const double> added) {
    if (base.empty() || added.empty()) {
        throw std::invalid_argument("lemma4_check: both multisets must be nonempty");
    }
    double base_sum = 0.0;
    for (double z : base) base_sum += z;
    const double base_mean = base_sum / static_cast<double>(base.size());
    double added_sum = 0.0;
    for (double z : added) {
        if (!(z > base_mean)) {
            throw std::invalid_argument("lemma4_check: added element does not exceed mean(base)");
        }
        added_sum += z;
    }
    const double joint_mean =
        (base_sum + added_sum) / static_cast<double>(base.size() + added.size());
    return joint_mean > base_mean;
}

}  // namespace graphite
