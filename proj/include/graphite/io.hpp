#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "graphite/homophily.hpp"
#include "graphite/train.hpp"
#include "graphite/transform.hpp"

namespace graphite {

// Plain-text dataset layout: edges.tsv, features.tsv and optional labels.tsv
// inside one directory. Each file opens with a tagged header line carrying
// counts; see the README for the exact formats.
struct DatasetBundle {
    std::filesystem::path edges_path;
    std::filesystem::path features_path;
    std::filesystem::path labels_path;  // empty when the dataset is unlabeled
    std::string name;

    static DatasetBundle from_dir(const std::filesystem::path& dir);
};

enum class BinarizeMode {
    Reject,     // non-binary feature values are a parse error
    Threshold,  // value > 0 becomes 1
    OneHot,     // integer value k in column c becomes indicator column (c, k), zeros dropped
};

struct ExpectedStats {
    std::optional<std::int64_t> nodes;
    std::optional<std::int64_t> edges;
    std::optional<std::int64_t> features;
    std::optional<std::int64_t> classes;
};

class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Parses the bundle into a validated Graph. Count mismatches against expected
// stats are warnings (returned in *warnings when given), not errors.
Graph load_dataset(const DatasetBundle& bundle, BinarizeMode binarize = BinarizeMode::Reject,
                   const ExpectedStats& expected = {}, std::vector<std::string>* warnings = nullptr);

void save_graph(const Graph& g, const std::filesystem::path& dir);
Graph load_graph(const std::filesystem::path& dir, BinarizeMode binarize = BinarizeMode::Reject);

void save_transformed(const TransformedGraph& t, const std::filesystem::path& dir);
TransformedGraph load_transformed(const std::filesystem::path& dir);

// 17 significant digits, locale-independent; shared by every emitter so that
// outputs are byte-reproducible.
std::string format_real(double v);

void write_size_report(std::ostream& os, const SizeReport& r);

// Sorted key/value lines for one homophily report; keys are prefixed with the
// edge-universe tag (E, E_dagger, E_star).
void write_homophily_report(std::ostream& os, const HomophilyReport& r);
void write_improvement_report(std::ostream& os, const ImprovementReport& r);

// Line-delimited train report; keys documented in the README.
void write_train_report(std::ostream& os, const TrainReport& r);

// Minimal static SVG bar chart with before/after pairs per labeled group.
struct BarGroup {
    std::string label;
    double before = 0.0;
    double after = 0.0;
};
void write_svg_bars(std::ostream& os, const std::string& title, const std::vector<BarGroup>& groups);

}  // namespace graphite
