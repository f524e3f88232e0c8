#include <doctest.h>

#include <numeric>

#include "fixtures.hpp"
#include "graphite/homophily.hpp"
#include "graphite/synth.hpp"
#include "oracles.hpp"

using namespace graphite;
using graphite::testing::fig1_fixture;
using graphite::testing::random_graph;

TEST_CASE("similarity kinds on dense vectors") {
    const std::vector<double> a = {1, 0}, b = {1, 1}, c = {0, 1};
    CHECK(similarity(SimilarityKind::BinaryAndInf, a, b) == 1.0);
    CHECK(similarity(SimilarityKind::BinaryAndInf, a, c) == 0.0);
    CHECK(similarity(SimilarityKind::Cosine, a, a) == doctest::Approx(1.0));

    const std::vector<double> u = {1, 1, 0}, v = {0, 1, 1};
    CHECK(similarity(SimilarityKind::Cosine, u, v) == doctest::Approx(0.5));

    const std::vector<double> zero = {0, 0};
    CHECK(similarity(SimilarityKind::Cosine, zero, b) == 0.0);

    const std::vector<double> p = {0.5, 0.5}, q = {1.0, 0.0};
    CHECK(similarity(SimilarityKind::LabelMatch, p, q) == doctest::Approx(0.5));
    CHECK(similarity(SimilarityKind::LabelMatch, q, q) == 1.0);

    const std::vector<double> shorter = {1.0};
    CHECK_THROWS_AS(similarity(SimilarityKind::Cosine, shorter, b), std::invalid_argument);
}

TEST_CASE("graph_homophily on a labeled triangle") {
    // v0 = (1,0), v1 = (1,0), v2 = (0,1): one similar edge out of three.
    const std::vector<std::pair<NodeId, NodeId>> edges = {{0, 1}, {0, 2}, {1, 2}};
    const std::vector<FeatureEntry> feats = {{0, 0}, {1, 0}, {2, 1}};
    const Graph g = build_graph(3, edges, 2, feats);
    const SparseRowMatrix x = feature_matrix(g);
    CHECK(graph_homophily(x, g.edges, SimilarityKind::Cosine) == doctest::Approx(1.0 / 3.0));
    CHECK(graph_homophily(x, g.edges, SimilarityKind::BinaryAndInf) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("graph_homophily of one identical pair is 1") {
    const std::vector<std::pair<NodeId, NodeId>> edges = {{0, 1}};
    const std::vector<FeatureEntry> feats = {{0, 0}, {1, 0}};
    const Graph g = build_graph(2, edges, 1, feats);
    CHECK(graph_homophily(feature_matrix(g), g.edges, SimilarityKind::Cosine) == 1.0);
}

TEST_CASE("graph_homophily rejects empty edge sets and label kind") {
    const Graph g = build_graph(2, {}, 0, {});
    CHECK_THROWS_AS(graph_homophily(feature_matrix(g), g.edges, SimilarityKind::Cosine),
                    std::invalid_argument);
    const Graph fig = fig1_fixture();
    CHECK_THROWS_AS(graph_homophily(feature_matrix(fig), fig.edges, SimilarityKind::LabelMatch),
                    std::invalid_argument);
}

TEST_CASE("graph_homophily ignores edge-list order") {
    const Graph g = fig1_fixture();
    const SparseRowMatrix x = feature_matrix(g);
    std::vector<Edge> shuffled = g.edges;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(graph_homophily(x, g.edges, SimilarityKind::Cosine) ==
          graph_homophily(x, shuffled, SimilarityKind::Cosine));
}

TEST_CASE("adjusted homophily of a two-class single edge is -1") {
    const std::vector<std::pair<NodeId, NodeId>> edges = {{0, 1}};
    const std::vector<std::int32_t> labels = {0, 1};
    const Graph g = build_graph(2, edges, 0, {}, labels, 2);
    CHECK(adjusted_homophily(g) == doctest::Approx(-1.0));
}

TEST_CASE("adjusted homophily of pure intra-class balanced edges is 1") {
    const std::vector<std::pair<NodeId, NodeId>> edges = {{0, 1}, {2, 3}};
    const std::vector<std::int32_t> labels = {0, 0, 1, 1};
    const Graph g = build_graph(4, edges, 0, {}, labels, 2);
    CHECK(adjusted_homophily(g) == doctest::Approx(1.0));
}

TEST_CASE("adjusted homophily signals the degenerate denominator") {
    // One class holds all degree mass: s = 1.
    const std::vector<std::pair<NodeId, NodeId>> edges = {{0, 1}};
    const std::vector<std::int32_t> labels = {0, 0};
    const Graph g = build_graph(2, edges, 0, {}, labels, 2);
    CHECK_THROWS_AS(adjusted_homophily(g), std::domain_error);
}

TEST_CASE("adjusted homophily is invariant under node relabeling") {
    std::mt19937_64 rng(53);
    for (int i = 0; i < 15; ++i) {
        const Graph g = random_graph(rng);
        double base = 0.0;
        try {
            base = adjusted_homophily(g);
        } catch (const std::domain_error&) {
            continue;  // degenerate denominator: nothing to compare
        }
        std::vector<NodeId> perm(static_cast<std::size_t>(g.num_nodes));
        std::iota(perm.begin(), perm.end(), 0);
        shuffle_deterministic(perm, rng);

        std::vector<std::pair<NodeId, NodeId>> edges;
        for (const Edge& e : g.edges) {
            edges.emplace_back(perm[static_cast<std::size_t>(e.u)], perm[static_cast<std::size_t>(e.v)]);
        }
        std::vector<std::int32_t> labels(static_cast<std::size_t>(g.num_nodes));
        for (NodeId v = 0; v < g.num_nodes; ++v) {
            labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(v)])] =
                g.labels[static_cast<std::size_t>(v)];
        }
        const Graph h = build_graph(g.num_nodes, edges, 0, {}, labels, g.num_classes);
        CHECK(adjusted_homophily(h) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("soft labels aggregate labelled neighbors") {
    // Feature 0 marks nodes with classes {0, 0, 1}; feature 1 marks class-0
    // nodes only; feature 2 marks an unlabeled node.
    const std::vector<std::pair<NodeId, NodeId>> edges = {{0, 1}};
    const std::vector<FeatureEntry> feats = {{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 1}, {3, 2}};
    const std::vector<std::int32_t> labels = {0, 0, 1, -1};
    const Graph g = build_graph(4, edges, 3, feats, labels, 2);
    const TransformedGraph t = graphite_transform(g);
    const SoftLabels s = soft_labels(t);
    REQUIRE(s.dist.size() == 3);
    CHECK(s.dist[0][0] == doctest::Approx(2.0 / 3.0));
    CHECK(s.dist[0][1] == doctest::Approx(1.0 / 3.0));
    CHECK(s.dist[1][0] == doctest::Approx(1.0));
    CHECK(s.dist[1][1] == doctest::Approx(0.0));
    // No labelled neighbor: uniform fallback.
    CHECK(s.dist[2][0] == doctest::Approx(0.5));
    CHECK(s.dist[2][1] == doctest::Approx(0.5));
}

TEST_CASE("improvement ratios") {
    HomophilyReport before, after;
    before.h_feature = 0.1;
    after.h_feature = 0.279;
    before.h_adjusted = 0.01;
    after.h_adjusted = 0.2867;
    const ImprovementReport r = improvement_ratio(before, after);
    REQUIRE(r.ratio_feature.has_value());
    CHECK(*r.ratio_feature == doctest::Approx(2.79));
    REQUIRE(r.ratio_adjusted.has_value());
    CHECK(*r.ratio_adjusted == doctest::Approx(28.67));
    CHECK_FALSE(r.adjusted_baseline_nonpositive);

    before.h_feature = 0.0;
    before.h_adjusted = -0.05;
    const ImprovementReport undefined = improvement_ratio(before, after);
    CHECK_FALSE(undefined.ratio_feature.has_value());
    CHECK(undefined.adjusted_baseline_nonpositive);
    CHECK(undefined.delta_adjusted == doctest::Approx(0.3367));
}

TEST_CASE("lemma4_check basic cases") {
    const std::vector<double> base1 = {0.0, 0.0}, added1 = {1.0};
    CHECK(lemma4_check(base1, added1));
    const std::vector<double> base2 = {0.2, 0.4}, added2 = {0.31};
    CHECK(lemma4_check(base2, added2));
    const std::vector<double> bad = {0.29};
    CHECK_THROWS_AS(lemma4_check(base2, bad), std::invalid_argument);
    CHECK_THROWS_AS(lemma4_check({}, added1), std::invalid_argument);
    CHECK_THROWS_AS(lemma4_check(base1, {}), std::invalid_argument);
}

TEST_CASE("lemma4_check fuzz") {
    std::mt19937_64 rng(59);
    for (int i = 0; i < 2000; ++i) {
        const std::size_t nb = 1 + rng() % 12;
        const std::size_t na = 1 + rng() % 12;
        std::vector<double> base(nb);
        for (double& z : base) z = 4.0 * canonical_double(rng) - 2.0;
        const double mean = std::accumulate(base.begin(), base.end(), 0.0) / static_cast<double>(nb);
        std::vector<double> added(na);
        for (double& z : added) z = mean + 1e-12 + 2.0 * canonical_double(rng);
        CHECK(lemma4_check(base, added));
    }
}

TEST_CASE("theorem statements hold on assumption-passing synthetic graphs") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        SynthParams p;
        p.num_nodes = 40 + static_cast<NodeId>(seed % 5) * 10;
        p.num_classes = 2 + static_cast<std::int32_t>(seed % 3);
        p.features_per_class = 2;
        p.intra_class_edge_prob = 0.01;
        p.inter_class_edge_prob = 0.15;
        p.feature_noise_prob = 0.05;
        p.seed = seed;
        const Graph g = synth_heterophilic(p);
        REQUIRE(check_assumptions(g).all_passed());

        const double hom_g = and_homophily(g);
        CHECK(and_homophily(nhb_transform(g)) > hom_g);

        const TransformedGraph t = graphite_transform(g);
        CHECK(graph_homophily(t.x_star, star_edges(t), SimilarityKind::BinaryAndInf) > hom_g);
    }
}

TEST_CASE("homophily metrics match the brute-force oracle") {
    std::mt19937_64 rng(61);
    for (int i = 0; i < 40; ++i) {
        const Graph g = random_graph(rng);
        const SparseRowMatrix x = feature_matrix(g);
        const auto dense = graphite::testing::densify(x);

        CHECK(graph_homophily(x, g.edges, SimilarityKind::Cosine) ==
              doctest::Approx(graphite::testing::oracle_homophily(dense, g.edges, true)).epsilon(1e-12));
        CHECK(graph_homophily(x, g.edges, SimilarityKind::BinaryAndInf) ==
              doctest::Approx(graphite::testing::oracle_homophily(dense, g.edges, false)).epsilon(1e-12));
        CHECK(edge_label_homophily(g) ==
              doctest::Approx(graphite::testing::oracle_edge_label_homophily(g)).epsilon(1e-12));
        try {
            const double adjusted = adjusted_homophily(g);
            CHECK(adjusted == doctest::Approx(graphite::testing::oracle_adjusted(
                                                  g.edges, g.num_nodes, g.num_classes,
                                                  graphite::testing::oracle_one_hot(g)))
                                  .epsilon(1e-12));
        } catch (const std::domain_error&) {
        }

        // Transformed universe with soft labels.
        const TransformedGraph t = graphite_transform(g);
        if (t.num_feature_nodes > 0) {
            const SoftLabels s = soft_labels(t);
            auto dist = graphite::testing::oracle_one_hot(g);
            dist.insert(dist.end(), s.dist.begin(), s.dist.end());
            try {
                const double adjusted = adjusted_homophily(t, s);
                CHECK(adjusted == doctest::Approx(graphite::testing::oracle_adjusted(
                                                      star_edges(t), t.num_all_nodes(),
                                                      g.num_classes, dist))
                                      .epsilon(1e-12));
            } catch (const std::domain_error&) {
            }
        }
    }
}
