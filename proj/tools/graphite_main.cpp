// graphite: feature-node graph transformation, homophily metrics, and the
// self-gated GNN, tied together behind one command line.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "graphite/homophily.hpp"
#include "graphite/io.hpp"
#include "graphite/model.hpp"
#include "graphite/parallel.hpp"
#include "graphite/rng.hpp"
#include "graphite/synth.hpp"
#include "graphite/train.hpp"
#include "graphite/transform.hpp"

namespace {

using namespace graphite;

BinarizeMode parse_binarize(const std::string& mode) {
    if (mode.empty() || mode == "reject") return BinarizeMode::Reject;
    if (mode == "threshold") return BinarizeMode::Threshold;
    if (mode == "onehot") return BinarizeMode::OneHot;
    throw CLI::ValidationError("--binarize must be 'threshold' or 'onehot'");
}

SplitRatio parse_ratio(const std::string& ratio) {
    if (ratio == "48/32/20") return SplitRatio::R48_32_20;
    if (ratio == "60/20/20") return SplitRatio::R60_20_20;
    throw CLI::ValidationError("--ratio must be '48/32/20' or '60/20/20'");
}

struct ModelFlags {
    double w_x = 0.6;
    double w0 = 0.5;
    double tau = 1.0;
    int layers = 2;
    int hidden = 64;
    double dropout = 0.2;

    void attach(CLI::App& app) {
        app.add_option("--wx", w_x, "feature-edge weight");
        app.add_option("--w0", w0, "self-loop weight");
        app.add_option("--tau", tau, "gate temperature");
        app.add_option("--layers", layers, "number of aggregation blocks");
        app.add_option("--hidden", hidden, "hidden dimensionality");
        app.add_option("--dropout", dropout, "dropout rate");
    }

    ModelConfig config() const {
        ModelConfig cfg;
        cfg.w_x = w_x;
        cfg.w0 = w0;
        cfg.tau = tau;
        cfg.num_layers = layers;
        cfg.hidden_dim = hidden;
        cfg.dropout_rate = dropout;
        cfg.validate();
        return cfg;
    }
};

int run_synth(const SynthParams& params, const std::string& out_dir) {
    const Graph g = synth_heterophilic(params);
    save_graph(g, out_dir);
    std::cout << "synth: " << g.num_nodes << " nodes, " << g.num_edges() << " edges, "
              << g.num_features << " features, " << g.num_classes << " classes -> " << out_dir
              << "\n";
    return 0;
}

int run_transform(const std::string& in_dir, const std::string& out_dir,
                  const TransformOptions& opts, BinarizeMode binarize) {
    const Graph g = load_graph(in_dir, binarize);
    const TransformedGraph t = graphite_transform(g, opts);
    save_transformed(t, out_dir);
    const SizeReport report = size_report(g, t);
    {
        std::ofstream os(std::filesystem::path(out_dir) / "size_report.tsv");
        write_size_report(os, report);
    }
    write_size_report(std::cout, report);
    return 0;
}

int run_nhb(const std::string& in_dir, const std::string& out_dir, int cap, BinarizeMode binarize) {
    const Graph g = load_graph(in_dir, binarize);
    const Graph boosted = nhb_transform(g, cap);
    save_graph(boosted, out_dir);
    std::cout << "nhb: edges " << g.num_edges() << " -> " << boosted.num_edges() << "\n";
    return 0;
}

int run_homophily(const std::string& in_dir, bool with_nhb, int nhb_cap,
                  const TransformOptions& opts, BinarizeMode binarize, const std::string& out_file,
                  const std::string& svg_file) {
    const Graph g = load_graph(in_dir, binarize);
    const HomophilyReport before = homophily_report(g);
    const TransformedGraph t = graphite_transform(g, opts);
    const HomophilyReport after = homophily_report(t);
    const ImprovementReport improvement = improvement_ratio(before, after);

    std::ostringstream body;
    write_homophily_report(body, before);
    if (with_nhb) {
        const Graph boosted = nhb_transform(g, nhb_cap);
        write_homophily_report(body, homophily_report(boosted, EdgeUniverse::Nhb));
    }
    write_homophily_report(body, after);
    write_improvement_report(body, improvement);

    std::cout << body.str();
    if (!out_file.empty()) {
        std::ofstream os(out_file);
        os << body.str();
    }
    if (!svg_file.empty()) {
        std::vector<BarGroup> groups;
        groups.push_back({"h_feature", before.h_feature, after.h_feature});
        if (before.h_adjusted && after.h_adjusted) {
            groups.push_back({"h_adjusted", *before.h_adjusted, *after.h_adjusted});
        }
        std::ofstream os(svg_file);
        write_svg_bars(os, "homophily before/after transformation", groups);
    }
    return 0;
}

int run_train(const std::string& in_dir, bool original, const ModelFlags& model_flags,
              TrainConfig train_cfg, int num_splits, SplitRatio ratio,
              const TransformOptions& opts, BinarizeMode binarize, const std::string& out_file,
              const std::string& checkpoint_file) {
    const Graph g = load_graph(in_dir, binarize);
    const TransformedGraph t = original ? identity_transform(g) : graphite_transform(g, opts);
    const ModelConfig model_cfg = model_flags.config();

    const std::vector<SplitSpec> splits = make_splits(g, ratio, train_cfg.seed, num_splits);
    std::vector<TrainReport> reports(splits.size());
    parallel_for_index(static_cast<std::int64_t>(splits.size()), [&](std::int64_t i) {
        TrainConfig cfg = train_cfg;
        cfg.seed = mix_seed(train_cfg.seed, 1000 + static_cast<std::uint64_t>(i));
        reports[static_cast<std::size_t>(i)] = train(t, splits[static_cast<std::size_t>(i)], model_cfg, cfg);
    });

    double mean = 0.0;
    for (const TrainReport& r : reports) mean += r.test_at_best_val;
    mean /= static_cast<double>(reports.size());
    double var = 0.0;
    for (const TrainReport& r : reports) {
        var += (r.test_at_best_val - mean) * (r.test_at_best_val - mean);
    }
    const double stddev = reports.size() > 1
                              ? std::sqrt(var / static_cast<double>(reports.size() - 1))
                              : 0.0;
    std::cout << "test metric over " << reports.size() << " splits: " << format_real(mean)
              << " +/- " << format_real(stddev) << "\n";

    if (!out_file.empty()) {
        std::ofstream os(out_file);
        for (const TrainReport& r : reports) write_train_report(os, r);
    }
    if (!checkpoint_file.empty()) {
        // Checkpoint of the first replicate's best-validation parameters.
        reports.front().best_params.save(checkpoint_file);
    }
    return 0;
}

int run_gradcheck(NodeId nodes, std::uint64_t seed, int hidden, int layers, double tolerance) {
    SynthParams sp;
    sp.num_nodes = nodes;
    sp.num_classes = 3;
    sp.features_per_class = 3;
    sp.intra_class_edge_prob = 0.05;
    sp.inter_class_edge_prob = 0.25;
    sp.feature_noise_prob = 0.1;
    sp.seed = seed;
    const Graph g = synth_heterophilic(sp);
    const TransformedGraph t = graphite_transform(g);

    ModelConfig cfg;
    cfg.hidden_dim = hidden;
    cfg.num_layers = layers;
    cfg.dropout_rate = 0.0;  // finite differences need a deterministic loss
    cfg.validate();

    Params params = Params::init(cfg, g.num_features, g.num_classes, mix_seed(seed, 7));
    const GatedStructure prop = build_propagation(t, cfg);
    std::vector<std::int32_t> mask;
    for (NodeId v = 0; v < g.num_nodes; ++v) mask.push_back(v);

    auto loss_at = [&](const Params& p) {
        Tape tape;
        const BoundParams bound = bind_params(tape, p);
        std::mt19937_64 rng(0);
        Tensor logits = forward(tape, t, prop, bound, cfg, false, rng);
        return static_cast<double>(
            tape.softmax_cross_entropy(logits, g.labels, mask).value().at(0, 0));
    };

    Tape tape;
    const BoundParams bound = bind_params(tape, params);
    std::mt19937_64 rng(0);
    Tensor logits = forward(tape, t, prop, bound, cfg, false, rng);
    Tensor loss = tape.softmax_cross_entropy(logits, g.labels, mask);
    tape.backward(loss);

    const auto analytic = bound.all();
    auto slots = params.entries();
    double max_rel = 0.0;
    const double h = 1e-6;
    for (std::size_t s = 0; s < slots.size(); ++s) {
        Matrix& mat = *slots[s].second;
        const Matrix& grad = analytic[s].grad();
        for (std::size_t i = 0; i < mat.data.size(); ++i) {
            const Real saved = mat.data[i];
            mat.data[i] = saved + h;
            const double up = loss_at(params);
            mat.data[i] = saved - h;
            const double down = loss_at(params);
            mat.data[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double a = grad.data[i];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-4});
            max_rel = std::max(max_rel, rel);
        }
    }
    std::cout << "gradcheck: max relative error " << format_real(max_rel) << " over "
              << slots.size() << " parameter matrices\n";
    return max_rel < tolerance ? 0 : 1;
}

int run_verify(int trials, std::uint64_t seed, std::int64_t lemma4_samples) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();

    struct TrialOutcome {
        bool thm1_strict = false;
        bool thm1_bound = false;
        bool thm3_strict = false;
        bool size_nodes = false;
        bool size_edges = false;
        bool obs2 = false;
        bool identity = false;
    };
    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(trials));

    parallel_for_index(trials, [&](std::int64_t i) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
        SynthParams sp;
        sp.num_nodes = 24 + static_cast<NodeId>(rng() % 96);
        sp.num_classes = 2 + static_cast<std::int32_t>(rng() % 4);
        sp.features_per_class = 1 + static_cast<std::int32_t>(rng() % 4);
        sp.intra_class_edge_prob = 0.02 * canonical_double(rng);
        sp.inter_class_edge_prob = 0.08 + 0.15 * canonical_double(rng);
        sp.feature_noise_prob = 0.2 * canonical_double(rng);
        sp.seed = mix_seed(seed, 0x5157ULL + static_cast<std::uint64_t>(i));
        const Graph g = synth_heterophilic(sp);

        TrialOutcome& out = outcomes[static_cast<std::size_t>(i)];
        const double hom_g = and_homophily(g);

        const Graph boosted = nhb_transform(g);
        out.thm1_strict = and_homophily(boosted) > hom_g;
        const std::int64_t added = boosted.num_edges() - g.num_edges();
        out.thm1_bound =
            added <= static_cast<std::int64_t>(g.num_nodes) * (g.num_nodes - 1) / 2;

        const TransformedGraph t = graphite_transform(g);
        out.thm3_strict =
            graph_homophily(t.x_star, star_edges(t), SimilarityKind::BinaryAndInf) > hom_g;

        const SizeReport sr = size_report(g, t);
        out.size_nodes = sr.nodes_after == sr.nodes_before + t.num_feature_nodes;
        out.size_edges = sr.edges_after == sr.edges_before + g.feature_nnz();

        out.obs2 = true;
        for (NodeId u = 0; u < g.num_nodes && out.obs2; ++u) {
            for (NodeId v = u + 1; v < g.num_nodes; ++v) {
                const bool share = rows_intersect(g.features[static_cast<std::size_t>(u)],
                                                  g.features[static_cast<std::size_t>(v)]);
                if (two_hop_witness(t, u, v).has_value() != share) {
                    out.obs2 = false;
                    break;
                }
            }
        }

        out.identity = true;
        for (std::int32_t ord = 0; ord < t.num_feature_nodes; ++ord) {
            const std::int32_t col = t.retained_columns[static_cast<std::size_t>(ord)];
            bool found = false;
            for (const SparseEntry& e :
                 t.x_star.rows[static_cast<std::size_t>(t.feature_node_vertex(ord))]) {
                if (e.col == col) {
                    found = e.value == 1.0;
                    break;
                }
            }
            if (!found) {
                out.identity = false;
                break;
            }
        }
    });

    std::int64_t lemma4_pass = 0;
    {
        std::mt19937_64 rng(mix_seed(seed, 0x1e44ULL));
        for (std::int64_t i = 0; i < lemma4_samples; ++i) {
            const std::size_t n_base = 1 + static_cast<std::size_t>(rng() % 16);
            const std::size_t n_added = 1 + static_cast<std::size_t>(rng() % 16);
            std::vector<double> base(n_base);
            for (double& z : base) z = 2.0 * canonical_double(rng) - 1.0;
            double mean = 0.0;
            for (double z : base) mean += z;
            mean /= static_cast<double>(n_base);
            std::vector<double> added(n_added);
            for (double& z : added) z = mean + 1e-9 + canonical_double(rng);
            if (lemma4_check(base, added)) ++lemma4_pass;
        }
    }

    auto count = [&](auto member) {
        std::int64_t ok = 0;
        for (const TrialOutcome& o : outcomes) ok += (o.*member) ? 1 : 0;
        return ok;
    };
    const std::int64_t n = trials;
    bool all_ok = true;
    auto line = [&](const char* name, std::int64_t ok, std::int64_t total) {
        all_ok = all_ok && ok == total;
        std::cout << name << ": " << ok << "/" << total << (ok == total ? " ok" : " FAILED") << "\n";
    };
    line("theorem-1 homophily strictly increases", count(&TrialOutcome::thm1_strict), n);
    line("theorem-1 added edges within pair bound", count(&TrialOutcome::thm1_bound), n);
    line("theorem-3 homophily strictly increases", count(&TrialOutcome::thm3_strict), n);
    line("theorem-3 node count exact", count(&TrialOutcome::size_nodes), n);
    line("theorem-3 edge count exact", count(&TrialOutcome::size_edges), n);
    line("observation-2 witness iff shared feature", count(&TrialOutcome::obs2), n);
    line("feature-node self-coordinate equals 1", count(&TrialOutcome::identity), n);
    line("lemma-4 mean strictly increases", lemma4_pass, lemma4_samples);

    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - t0).count();
    std::cout << "verified " << n << " graphs in " << elapsed << " ms\n";
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"feature-node graph transformation, homophily metrics and self-gated GNN"};
    app.require_subcommand(1);

    // synth
    SynthParams synth_params;
    std::string synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "generate a seeded synthetic heterophilic graph");
    synth_cmd->add_option("--nodes", synth_params.num_nodes, "node count");
    synth_cmd->add_option("--classes", synth_params.num_classes, "class count");
    synth_cmd->add_option("--features-per-class", synth_params.features_per_class,
                          "class-indicative features per class");
    synth_cmd->add_option("--p-in", synth_params.intra_class_edge_prob, "intra-class edge probability");
    synth_cmd->add_option("--p-out", synth_params.inter_class_edge_prob, "inter-class edge probability");
    synth_cmd->add_option("--noise", synth_params.feature_noise_prob, "feature flip probability");
    synth_cmd->add_option("--seed", synth_params.seed, "generator seed");
    synth_cmd->add_option("--out", synth_out, "output directory")->required();

    // shared dataset/transform flags
    std::string in_dir, out_dir, binarize_mode;
    TransformOptions topts;
    bool keep_unused = false;

    auto add_input_flags = [&](CLI::App* cmd) {
        cmd->add_option("--in", in_dir, "input dataset directory")->required();
        cmd->add_option("--binarize", binarize_mode, "accept non-binary features: threshold|onehot");
    };
    auto add_transform_flags = [&](CLI::App* cmd) {
        cmd->add_flag("--zero-graph-features", topts.zero_graph_node_features,
                      "zero graph-node rows of the augmented features");
        cmd->add_flag("--row-normalize", topts.row_normalize_graph_node_features,
                      "L1-normalize graph-node rows of the augmented features");
        cmd->add_flag("--keep-unused", keep_unused, "fail on unused feature columns instead of dropping");
    };

    auto* transform_cmd = app.add_subcommand("transform", "emit the transformed graph and size report");
    add_input_flags(transform_cmd);
    add_transform_flags(transform_cmd);
    transform_cmd->add_option("--out", out_dir, "output directory")->required();

    int nhb_cap = 10000;
    auto* nhb_cmd = app.add_subcommand("nhb", "emit the naive homophily booster graph");
    add_input_flags(nhb_cmd);
    nhb_cmd->add_option("--out", out_dir, "output directory")->required();
    nhb_cmd->add_option("--cap", nhb_cap, "node cap for the quadratic scan");

    bool with_nhb = false;
    std::string report_out, svg_out;
    auto* hom_cmd = app.add_subcommand("homophily", "report homophily before/after transformation");
    add_input_flags(hom_cmd);
    add_transform_flags(hom_cmd);
    hom_cmd->add_flag("--nhb", with_nhb, "include the naive booster edge universe");
    hom_cmd->add_option("--cap", nhb_cap, "node cap for the naive booster");
    hom_cmd->add_option("--out", report_out, "also write the report to a file");
    hom_cmd->add_option("--svg", svg_out, "write a before/after bar chart");

    ModelFlags model_flags;
    TrainConfig train_cfg;
    int num_splits = 10;
    std::string ratio_text = "48/32/20";
    std::string metric_text = "accuracy";
    std::string checkpoint_out;
    bool train_original = false;
    auto* train_cmd = app.add_subcommand("train", "train the self-gated GNN over random splits");
    add_input_flags(train_cmd);
    add_transform_flags(train_cmd);
    model_flags.attach(*train_cmd);
    train_cmd->add_flag("--original", train_original, "train on the untransformed graph");
    train_cmd->add_option("--lr", train_cfg.learning_rate, "learning rate");
    train_cmd->add_option("--steps", train_cfg.steps, "training steps");
    train_cmd->add_option("--seed", train_cfg.seed, "training seed");
    train_cmd->add_option("--splits", num_splits, "number of random splits");
    train_cmd->add_option("--ratio", ratio_text, "split ratio: 48/32/20 or 60/20/20");
    train_cmd->add_option("--metric", metric_text, "evaluation metric: accuracy or auc");
    train_cmd->add_option("--out", report_out, "write per-split train reports");
    train_cmd->add_option("--save-params", checkpoint_out, "write the first split's best checkpoint");

    NodeId gc_nodes = 20;
    std::uint64_t gc_seed = 1;
    int gc_hidden = 8;
    int gc_layers = 2;
    double gc_tolerance = 1e-5;
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference check of the full model");
    gc_cmd->add_option("--nodes", gc_nodes, "fixture size");
    gc_cmd->add_option("--seed", gc_seed, "fixture seed");
    gc_cmd->add_option("--hidden", gc_hidden, "hidden dimensionality");
    gc_cmd->add_option("--layers", gc_layers, "number of blocks");
    gc_cmd->add_option("--tolerance", gc_tolerance, "max relative error allowed");

    int vt_trials = 500;
    std::uint64_t vt_seed = 7;
    std::int64_t vt_lemma4 = 100000;
    auto* vt_cmd = app.add_subcommand("verify-theorems", "run the theorem suites over random graphs");
    vt_cmd->add_option("--trials", vt_trials, "number of random graphs");
    vt_cmd->add_option("--seed", vt_seed, "suite seed");
    vt_cmd->add_option("--lemma4-samples", vt_lemma4, "random multiset pairs for the mean lemma");

    CLI11_PARSE(app, argc, argv);

    try {
        topts.drop_unused_features = !keep_unused;
        const BinarizeMode binarize = parse_binarize(binarize_mode);
        if (synth_cmd->parsed()) return run_synth(synth_params, synth_out);
        if (transform_cmd->parsed()) return run_transform(in_dir, out_dir, topts, binarize);
        if (nhb_cmd->parsed()) return run_nhb(in_dir, out_dir, nhb_cap, binarize);
        if (hom_cmd->parsed()) {
            return run_homophily(in_dir, with_nhb, nhb_cap, topts, binarize, report_out, svg_out);
        }
        if (train_cmd->parsed()) {
            train_cfg.metric = metric_text == "auc" ? EvalMetric::RocAuc : EvalMetric::Accuracy;
            return run_train(in_dir, train_original, model_flags, train_cfg, num_splits,
                             parse_ratio(ratio_text), topts, binarize, report_out, checkpoint_out);
        }
        if (gc_cmd->parsed()) {
            return run_gradcheck(gc_nodes, gc_seed, gc_hidden, gc_layers, gc_tolerance);
        }
        if (vt_cmd->parsed()) return run_verify(vt_trials, vt_seed, vt_lemma4);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
