#include "graphite/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace graphite {

namespace fs = std::filesystem;

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

DatasetBundle DatasetBundle::from_dir(const fs::path& dir) {
    DatasetBundle b;
    b.edges_path = dir / "edges.tsv";
    b.features_path = dir / "features.tsv";
    if (fs::exists(dir / "labels.tsv")) b.labels_path = dir / "labels.tsv";
    b.name = dir.filename().string();
    return b;
}

namespace {

struct LineReader {
    std::ifstream stream;
    std::string path;
    std::int64_t line_no = 0;

    explicit LineReader(const fs::path& p) : stream(p), path(p.string()) {
        if (!stream) throw ParseError("cannot open " + path);
    }

    bool next(std::string& line) {
        if (!std::getline(stream, line)) return false;
        ++line_no;
        return true;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(path + ":" + std::to_string(line_no) + ": " + what);
    }
};

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::int64_t parse_int(LineReader& r, const std::string& s) {
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) r.fail("trailing characters in integer '" + s + "'");
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        r.fail("expected an integer, got '" + s + "'");
    }
}

double parse_double(LineReader& r, const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) r.fail("trailing characters in number '" + s + "'");
        return v;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        r.fail("expected a number, got '" + s + "'");
    }
}

void expect_header(LineReader& r, const std::string& tag, std::vector<std::int64_t>& counts) {
    std::string line;
    if (!r.next(line)) r.fail("missing header line");
    const auto fields = split_tabs(line);
    if (fields.empty() || fields[0] != tag) r.fail("expected header tag '" + tag + "'");
    counts.clear();
    for (std::size_t i = 1; i < fields.size(); ++i) counts.push_back(parse_int(r, fields[i]));
}

struct RawFeatures {
    std::int64_t declared_nodes = 0;
    std::int64_t declared_features = 0;
    std::vector<std::tuple<NodeId, std::int32_t, double>> entries;
};

RawFeatures read_features_file(const fs::path& path) {
    LineReader r(path);
    std::vector<std::int64_t> counts;
    expect_header(r, "graphite-features", counts);
    if (counts.size() != 3) r.fail("features header needs nodes, features, nnz");
    RawFeatures raw;
    raw.declared_nodes = counts[0];
    raw.declared_features = counts[1];
    std::string line;
    while (r.next(line)) {
        if (line.empty()) continue;
        const auto f = split_tabs(line);
        if (f.size() != 2 && f.size() != 3) r.fail("feature line needs 'node\\tfeature[\\tvalue]'");
        const auto node = static_cast<NodeId>(parse_int(r, f[0]));
        const auto col = static_cast<std::int32_t>(parse_int(r, f[1]));
        const double value = f.size() == 3 ? parse_double(r, f[2]) : 1.0;
        raw.entries.emplace_back(node, col, value);
    }
    if (static_cast<std::int64_t>(raw.entries.size()) != counts[2]) {
        throw ParseError(path.string() + ": header declares " + std::to_string(counts[2]) +
                         " feature entries, file has " + std::to_string(raw.entries.size()));
    }
    return raw;
}

}  // namespace

Graph load_dataset(const DatasetBundle& bundle, BinarizeMode binarize,
                   const ExpectedStats& expected, std::vector<std::string>* warnings) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::int64_t declared_nodes = 0;
    {
        LineReader r(bundle.edges_path);
        std::vector<std::int64_t> counts;
        expect_header(r, "graphite-edges", counts);
        if (counts.size() != 2) r.fail("edges header needs nodes, edges");
        declared_nodes = counts[0];
        std::string line;
        while (r.next(line)) {
            if (line.empty()) continue;
            const auto f = split_tabs(line);
            if (f.size() != 2) r.fail("edge line needs 'u\\tv'");
            edges.emplace_back(static_cast<NodeId>(parse_int(r, f[0])),
                               static_cast<NodeId>(parse_int(r, f[1])));
        }
        if (static_cast<std::int64_t>(edges.size()) != counts[1]) {
            throw ParseError(bundle.edges_path.string() + ": header declares " +
                             std::to_string(counts[1]) + " edges, file has " +
                             std::to_string(edges.size()));
        }
    }

    RawFeatures raw = read_features_file(bundle.features_path);
    if (raw.declared_nodes != declared_nodes) {
        throw ParseError(bundle.features_path.string() + ": node count differs from edges.tsv");
    }

    std::int32_t num_features = static_cast<std::int32_t>(raw.declared_features);
    std::vector<FeatureEntry> entries;
    entries.reserve(raw.entries.size());
    switch (binarize) {
        case BinarizeMode::Reject:
            for (const auto& [node, col, value] : raw.entries) {
                if (value != 0.0 && value != 1.0) {
                    throw ParseError(bundle.features_path.string() + ": non-binary feature value " +
                                     format_real(value) + " (use --binarize)");
                }
                entries.push_back({node, col, value});
            }
            break;
        case BinarizeMode::Threshold:
            for (const auto& [node, col, value] : raw.entries) {
                entries.push_back({node, col, value > 0.0 ? 1.0 : 0.0});
            }
            break;
        case BinarizeMode::OneHot: {
            // Distinct (column, integer value) pairs become indicator columns,
            // in sorted order; zero values carry no feature.
            std::map<std::pair<std::int32_t, std::int64_t>, std::int32_t> expanded;
            for (const auto& [node, col, value] : raw.entries) {
                if (value == 0.0) continue;
                if (value != std::floor(value)) {
                    throw ParseError(bundle.features_path.string() +
                                     ": one-hot binarization needs integer values, got " +
                                     format_real(value));
                }
                expanded[{col, static_cast<std::int64_t>(value)}] = 0;
            }
            std::int32_t next = 0;
            for (auto& [key, ordinal] : expanded) ordinal = next++;
            for (const auto& [node, col, value] : raw.entries) {
                if (value == 0.0) continue;
                entries.push_back({node, expanded[{col, static_cast<std::int64_t>(value)}], 1.0});
            }
            num_features = next;
            break;
        }
    }

    std::vector<std::int32_t> labels;
    std::int32_t num_classes = 0;
    if (!bundle.labels_path.empty()) {
        LineReader r(bundle.labels_path);
        std::vector<std::int64_t> counts;
        expect_header(r, "graphite-labels", counts);
        if (counts.size() != 3) r.fail("labels header needs nodes, classes, labeled");
        if (counts[0] != declared_nodes) r.fail("node count differs from edges.tsv");
        num_classes = static_cast<std::int32_t>(counts[1]);
        labels.assign(static_cast<std::size_t>(declared_nodes), -1);
        std::int64_t labeled = 0;
        std::string line;
        while (r.next(line)) {
            if (line.empty()) continue;
            const auto f = split_tabs(line);
            if (f.size() != 2) r.fail("label line needs 'node\\tclass'");
            const auto node = parse_int(r, f[0]);
            if (node < 0 || node >= declared_nodes) r.fail("node index out of range");
            labels[static_cast<std::size_t>(node)] = static_cast<std::int32_t>(parse_int(r, f[1]));
            ++labeled;
        }
        if (labeled != counts[2]) {
            throw ParseError(bundle.labels_path.string() + ": header declares " +
                             std::to_string(counts[2]) + " labels, file has " +
                             std::to_string(labeled));
        }
    }

    Graph g = build_graph(static_cast<NodeId>(declared_nodes), edges, num_features, entries, labels,
                          num_classes);

    if (warnings) {
        auto warn = [&](const std::string& what, std::int64_t got, std::int64_t want) {
            warnings->push_back(bundle.name + ": " + what + " is " + std::to_string(got) +
                                ", expected " + std::to_string(want));
        };
        if (expected.nodes && g.num_nodes != *expected.nodes) warn("node count", g.num_nodes, *expected.nodes);
        if (expected.edges && g.num_edges() != *expected.edges) warn("edge count", g.num_edges(), *expected.edges);
        if (expected.features && g.num_features != *expected.features) {
            warn("feature count", g.num_features, *expected.features);
        }
        if (expected.classes && g.num_classes != *expected.classes) {
            warn("class count", g.num_classes, *expected.classes);
        }
    }
    return g;
}

void save_graph(const Graph& g, const fs::path& dir) {
    fs::create_directories(dir);
    {
        std::ofstream os(dir / "edges.tsv");
        os << "graphite-edges\t" << g.num_nodes << '\t' << g.num_edges() << '\n';
        for (const Edge& e : g.edges) os << e.u << '\t' << e.v << '\n';
    }
    {
        std::ofstream os(dir / "features.tsv");
        os << "graphite-features\t" << g.num_nodes << '\t' << g.num_features << '\t'
           << g.feature_nnz() << '\n';
        for (NodeId v = 0; v < g.num_nodes; ++v) {
            for (std::int32_t k : g.features[static_cast<std::size_t>(v)]) {
                os << v << '\t' << k << '\n';
            }
        }
    }
    if (g.has_labels()) {
        std::int64_t labeled = 0;
        for (auto m : g.label_mask) labeled += m;
        std::ofstream os(dir / "labels.tsv");
        os << "graphite-labels\t" << g.num_nodes << '\t' << g.num_classes << '\t' << labeled << '\n';
        for (NodeId v = 0; v < g.num_nodes; ++v) {
            if (g.label_mask[static_cast<std::size_t>(v)]) {
                os << v << '\t' << g.labels[static_cast<std::size_t>(v)] << '\n';
            }
        }
    } else if (fs::exists(dir / "labels.tsv")) {
        fs::remove(dir / "labels.tsv");
    }
}

Graph load_graph(const fs::path& dir, BinarizeMode binarize) {
    return load_dataset(DatasetBundle::from_dir(dir), binarize);
}

void save_transformed(const TransformedGraph& t, const fs::path& dir) {
    fs::create_directories(dir);
    save_graph(t.base, dir);
    {
        std::ofstream os(dir / "feature_edges.tsv");
        os << "graphite-feature-edges\t" << t.base.num_nodes << '\t' << t.num_feature_nodes << '\t'
           << t.feature_edges.size() << '\n';
        for (const FeatureEdge& fe : t.feature_edges) {
            os << fe.node << '\t' << fe.feature_node << '\n';
        }
    }
    {
        std::ofstream os(dir / "column_map.tsv");
        os << "graphite-column-map\t" << t.base.num_features << '\t' << t.num_feature_nodes << '\n';
        for (std::int32_t ord = 0; ord < t.num_feature_nodes; ++ord) {
            os << t.retained_columns[static_cast<std::size_t>(ord)] << '\t' << ord << '\n';
        }
    }
    {
        std::ofstream os(dir / "x_star.tsv");
        os << "graphite-xstar\t" << t.x_star.num_rows() << '\t' << t.x_star.num_cols << '\t'
           << t.x_star.nnz() << '\n';
        for (std::int64_t r = 0; r < t.x_star.num_rows(); ++r) {
            for (const SparseEntry& e : t.x_star.rows[static_cast<std::size_t>(r)]) {
                os << r << '\t' << e.col << '\t' << format_real(e.value) << '\n';
            }
        }
    }
}

TransformedGraph load_transformed(const fs::path& dir) {
    TransformedGraph t;
    t.base = load_graph(dir);
    {
        LineReader r(dir / "column_map.tsv");
        std::vector<std::int64_t> counts;
        expect_header(r, "graphite-column-map", counts);
        if (counts.size() != 2) r.fail("column map header needs features, feature_nodes");
        if (counts[0] != t.base.num_features) r.fail("feature count differs from features.tsv");
        t.num_feature_nodes = static_cast<std::int32_t>(counts[1]);
        t.column_map.assign(static_cast<std::size_t>(t.base.num_features), -1);
        t.retained_columns.assign(static_cast<std::size_t>(t.num_feature_nodes), -1);
        std::string line;
        while (r.next(line)) {
            if (line.empty()) continue;
            const auto f = split_tabs(line);
            if (f.size() != 2) r.fail("column map line needs 'column\\tordinal'");
            const auto col = parse_int(r, f[0]);
            const auto ord = parse_int(r, f[1]);
            if (col < 0 || col >= t.base.num_features) r.fail("column out of range");
            if (ord < 0 || ord >= t.num_feature_nodes) r.fail("ordinal out of range");
            t.column_map[static_cast<std::size_t>(col)] = static_cast<std::int32_t>(ord);
            t.retained_columns[static_cast<std::size_t>(ord)] = static_cast<std::int32_t>(col);
        }
    }
    {
        LineReader r(dir / "feature_edges.tsv");
        std::vector<std::int64_t> counts;
        expect_header(r, "graphite-feature-edges", counts);
        if (counts.size() != 3) r.fail("feature edges header needs nodes, feature_nodes, count");
        std::string line;
        while (r.next(line)) {
            if (line.empty()) continue;
            const auto f = split_tabs(line);
            if (f.size() != 2) r.fail("feature edge line needs 'node\\tfeature_node'");
            const auto node = parse_int(r, f[0]);
            const auto ord = parse_int(r, f[1]);
            if (node < 0 || node >= t.base.num_nodes) r.fail("node out of range");
            if (ord < 0 || ord >= t.num_feature_nodes) r.fail("feature node out of range");
            t.feature_edges.push_back({static_cast<NodeId>(node), static_cast<std::int32_t>(ord)});
        }
        if (static_cast<std::int64_t>(t.feature_edges.size()) != counts[2]) {
            r.fail("feature edge count differs from header");
        }
    }
    {
        LineReader r(dir / "x_star.tsv");
        std::vector<std::int64_t> counts;
        expect_header(r, "graphite-xstar", counts);
        if (counts.size() != 3) r.fail("x_star header needs rows, cols, nnz");
        if (counts[0] != t.num_all_nodes()) r.fail("x_star row count differs from graph");
        t.x_star.num_cols = counts[1];
        t.x_star.rows.resize(static_cast<std::size_t>(counts[0]));
        std::int64_t nnz = 0;
        std::string line;
        while (r.next(line)) {
            if (line.empty()) continue;
            const auto f = split_tabs(line);
            if (f.size() != 3) r.fail("x_star line needs 'row\\tcol\\tvalue'");
            const auto row = parse_int(r, f[0]);
            const auto col = parse_int(r, f[1]);
            if (row < 0 || row >= counts[0]) r.fail("row out of range");
            if (col < 0 || col >= t.x_star.num_cols) r.fail("column out of range");
            t.x_star.rows[static_cast<std::size_t>(row)].push_back(
                {static_cast<std::int32_t>(col), static_cast<Real>(parse_double(r, f[2]))});
            ++nnz;
        }
        if (nnz != counts[2]) r.fail("x_star nnz differs from header");
    }
    return t;
}

void write_size_report(std::ostream& os, const SizeReport& r) {
    os << "edges_after\t" << r.edges_after << '\n';
    os << "edges_before\t" << r.edges_before << '\n';
    os << "feature_nnz\t" << r.feature_nnz << '\n';
    os << "nodes_after\t" << r.nodes_after << '\n';
    os << "nodes_before\t" << r.nodes_before << '\n';
}

namespace {

const char* universe_tag(EdgeUniverse u) {
    switch (u) {
        case EdgeUniverse::Original: return "E";
        case EdgeUniverse::Nhb: return "E_dagger";
        case EdgeUniverse::Star: return "E_star";
    }
    return "?";
}

}  // namespace

void write_homophily_report(std::ostream& os, const HomophilyReport& r) {
    const std::string tag = universe_tag(r.edge_universe);
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back(tag + ".h_and", format_real(r.h_and));
    if (r.h_adjusted) kv.emplace_back(tag + ".h_adjusted", format_real(*r.h_adjusted));
    if (r.h_edge) kv.emplace_back(tag + ".h_edge", format_real(*r.h_edge));
    kv.emplace_back(tag + ".h_feature", format_real(r.h_feature));
    std::sort(kv.begin(), kv.end());
    for (const auto& [k, v] : kv) os << k << '\t' << v << '\n';
}

void write_improvement_report(std::ostream& os, const ImprovementReport& r) {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("improvement.adjusted_baseline_nonpositive",
                    r.adjusted_baseline_nonpositive ? "1" : "0");
    kv.emplace_back("improvement.delta_adjusted", format_real(r.delta_adjusted));
    kv.emplace_back("improvement.delta_feature", format_real(r.delta_feature));
    if (r.ratio_adjusted) kv.emplace_back("improvement.ratio_adjusted", format_real(*r.ratio_adjusted));
    if (r.ratio_feature) kv.emplace_back("improvement.ratio_feature", format_real(*r.ratio_feature));
    std::sort(kv.begin(), kv.end());
    for (const auto& [k, v] : kv) os << k << '\t' << v << '\n';
}

void write_train_report(std::ostream& os, const TrainReport& r) {
    os << "graphite-train-report\t1\n";
    os << "seed\t" << r.seed << '\n';
    os << "replicate\t" << r.replicate << '\n';
    os << "config_hash\t" << r.config_hash << '\n';
    os << "metric\t" << (r.metric == EvalMetric::Accuracy ? "accuracy" : "roc_auc") << '\n';
    os << "steps\t" << r.loss_curve.size() << '\n';
    os << "final_val\t" << format_real(r.final_val) << '\n';
    os << "final_test\t" << format_real(r.final_test) << '\n';
    os << "best_val\t" << format_real(r.best_val) << '\n';
    os << "best_val_step\t" << r.best_val_step << '\n';
    os << "test_at_best_val\t" << format_real(r.test_at_best_val) << '\n';
    for (std::size_t i = 0; i < r.loss_curve.size(); ++i) {
        os << "loss\t" << i + 1 << '\t' << format_real(r.loss_curve[i]) << '\n';
    }
}

void write_svg_bars(std::ostream& os, const std::string& title, const std::vector<BarGroup>& groups) {
    const int bar_w = 40, gap = 30, group_gap = 50, height = 260, base_y = 220, left = 60;
    double max_val = 1e-12;
    for (const auto& g : groups) max_val = std::max({max_val, std::abs(g.before), std::abs(g.after)});
    const int width = left + static_cast<int>(groups.size()) * (2 * bar_w + gap + group_gap) + 40;

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\">\n";
    os << "<text x=\"" << left << "\" y=\"24\" font-size=\"16\">" << title << "</text>\n";
    int x = left;
    for (const auto& g : groups) {
        const int h_before = static_cast<int>(160.0 * std::abs(g.before) / max_val);
        const int h_after = static_cast<int>(160.0 * std::abs(g.after) / max_val);
        os << "<rect x=\"" << x << "\" y=\"" << base_y - h_before << "\" width=\"" << bar_w
           << "\" height=\"" << h_before << "\" fill=\"#888888\"/>\n";
        os << "<rect x=\"" << x + bar_w + 8 << "\" y=\"" << base_y - h_after << "\" width=\"" << bar_w
           << "\" height=\"" << h_after << "\" fill=\"#2b6cb0\"/>\n";
        os << "<text x=\"" << x << "\" y=\"" << base_y + 16 << "\" font-size=\"12\">" << g.label
           << "</text>\n";
        os << "<text x=\"" << x << "\" y=\"" << base_y - h_before - 4 << "\" font-size=\"10\">"
           << format_real(g.before) << "</text>\n";
        os << "<text x=\"" << x + bar_w + 8 << "\" y=\"" << base_y - h_after - 4
           << "\" font-size=\"10\">" << format_real(g.after) << "</text>\n";
        x += 2 * bar_w + gap + group_gap;
    }
    os << "<text x=\"" << left << "\" y=\"" << height - 8
       << "\" font-size=\"12\">gray: before, blue: after</text>\n";
    os << "</svg>\n";
}

}  // namespace graphite
