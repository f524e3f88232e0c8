#include "graphite/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "graphite/rng.hpp"

namespace graphite {

void ModelConfig::validate() const {
    if (!(w_x > 0.0)) throw std::invalid_argument("ModelConfig: w_x must be positive");
    if (!(w0 > 0.0)) throw std::invalid_argument("ModelConfig: w0 must be positive");
    if (!(tau > 0.0)) throw std::invalid_argument("ModelConfig: tau must be positive");
    if (num_layers < 0) throw std::invalid_argument("ModelConfig: num_layers must be >= 0");
    if (hidden_dim < 1) throw std::invalid_argument("ModelConfig: hidden_dim must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw std::invalid_argument("ModelConfig: dropout_rate must be in [0, 1)");
    }
}

namespace {

Matrix glorot(std::int64_t rows, std::int64_t cols, std::int64_t fan_in, std::int64_t fan_out,
              std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix m(rows, cols);
    for (Real& v : m.data) v = static_cast<Real>((2.0 * canonical_double(rng) - 1.0) * bound);
    return m;
}

}  // namespace

Params Params::init(const ModelConfig& cfg, std::int64_t num_features, std::int64_t num_classes,
                    std::uint64_t seed) {
    cfg.validate();
    if (num_features < 0 || num_classes < 1) {
        throw std::invalid_argument("Params::init: need num_features >= 0 and num_classes >= 1");
    }
    std::mt19937_64 rng(seed);
    const std::int64_t m = cfg.hidden_dim;
    Params p;
    p.encoder_w = glorot(num_features, m, num_features, m, rng);
    p.encoder_b = Matrix(1, m);
    p.layers.resize(static_cast<std::size_t>(cfg.num_layers));
    for (auto& layer : p.layers) {
        layer.gate_a = glorot(1, 2 * m, 2 * m, 1, rng);
        layer.gate_b = Matrix(1, 1);
        layer.mlp_w1 = glorot(m, m, m, m, rng);
        layer.mlp_b1 = Matrix(1, m);
        layer.mlp_w2 = glorot(m, m, m, m, rng);
        layer.mlp_b2 = Matrix(1, m);
    }
    p.decoder_w = glorot(m, num_classes, m, num_classes, rng);
    p.decoder_b = Matrix(1, num_classes);
    return p;
}

Params Params::zeros(const ModelConfig& cfg, std::int64_t num_features, std::int64_t num_classes) {
    cfg.validate();
    const std::int64_t m = cfg.hidden_dim;
    Params p;
    p.encoder_w = Matrix(num_features, m);
    p.encoder_b = Matrix(1, m);
    p.layers.resize(static_cast<std::size_t>(cfg.num_layers));
    for (auto& layer : p.layers) {
        layer.gate_a = Matrix(1, 2 * m);
        layer.gate_b = Matrix(1, 1);
        layer.mlp_w1 = Matrix(m, m);
        layer.mlp_b1 = Matrix(1, m);
        layer.mlp_w2 = Matrix(m, m);
        layer.mlp_b2 = Matrix(1, m);
    }
    p.decoder_w = Matrix(m, num_classes);
    p.decoder_b = Matrix(1, num_classes);
    return p;
}

std::vector<std::pair<std::string, Matrix*>> Params::entries() {
    std::vector<std::pair<std::string, Matrix*>> out;
    out.emplace_back("encoder_w", &encoder_w);
    out.emplace_back("encoder_b", &encoder_b);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        out.emplace_back(prefix + "gate_a", &layers[l].gate_a);
        out.emplace_back(prefix + "gate_b", &layers[l].gate_b);
        out.emplace_back(prefix + "mlp_w1", &layers[l].mlp_w1);
        out.emplace_back(prefix + "mlp_b1", &layers[l].mlp_b1);
        out.emplace_back(prefix + "mlp_w2", &layers[l].mlp_w2);
        out.emplace_back(prefix + "mlp_b2", &layers[l].mlp_b2);
    }
    out.emplace_back("decoder_w", &decoder_w);
    out.emplace_back("decoder_b", &decoder_b);
    return out;
}

std::vector<std::pair<std::string, const Matrix*>> Params::entries() const {
    auto mutable_entries = const_cast<Params*>(this)->entries();
    std::vector<std::pair<std::string, const Matrix*>> out;
    out.reserve(mutable_entries.size());
    for (auto& [name, ptr] : mutable_entries) out.emplace_back(name, ptr);
    return out;
}

namespace {

// Checkpoint container: magic, version, matrix count, then per matrix a
// length-prefixed name, i64 rows, i64 cols and row-major f64 values.
// All integers and floats are little-endian.
constexpr char kMagic[4] = {'G', 'R', 'P', 'C'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_i64(std::ostream& os, std::int64_t v) {
    auto u = static_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& os, double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, 8);
    write_i64(os, static_cast<std::int64_t>(u));
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::int64_t read_i64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return static_cast<std::int64_t>(v);
}

double read_f64(std::istream& is) {
    std::uint64_t u = static_cast<std::uint64_t>(read_i64(is));
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

}  // namespace

void Params::save(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("Params::save: cannot open " + path.string());
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    const auto all = entries();
    write_u32(os, static_cast<std::uint32_t>(all.size()));
    for (const auto& [name, mat] : all) {
        write_u32(os, static_cast<std::uint32_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_i64(os, mat->rows);
        write_i64(os, mat->cols);
        for (Real v : mat->data) write_f64(os, static_cast<double>(v));
    }
    if (!os) throw std::runtime_error("Params::save: write failed for " + path.string());
}

Params Params::load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("Params::load: cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("Params::load: bad magic in " + path.string());
    }
    const std::uint32_t version = read_u32(is);
    if (version != kVersion) {
        throw std::runtime_error("Params::load: unsupported version " + std::to_string(version));
    }
    const std::uint32_t count = read_u32(is);
    std::vector<std::pair<std::string, Matrix>> mats;
    mats.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t len = read_u32(is);
        std::string name(len, '\0');
        is.read(name.data(), len);
        Matrix m;
        m.rows = read_i64(is);
        m.cols = read_i64(is);
        if (m.rows < 0 || m.cols < 0) throw std::runtime_error("Params::load: negative shape");
        m.data.resize(static_cast<std::size_t>(m.rows * m.cols));
        for (Real& v : m.data) v = static_cast<Real>(read_f64(is));
        mats.emplace_back(std::move(name), std::move(m));
    }
    if (!is) throw std::runtime_error("Params::load: truncated file " + path.string());

    Params p;
    std::size_t num_layers = 0;
    for (const auto& [name, _] : mats) {
        if (name.starts_with("layer")) {
            const std::size_t dot = name.find('.');
            num_layers = std::max(num_layers,
                                  static_cast<std::size_t>(std::stoul(name.substr(5, dot - 5))) + 1);
        }
    }
    p.layers.resize(num_layers);
    auto slots = p.entries();
    if (slots.size() != mats.size()) throw std::runtime_error("Params::load: unexpected matrix set");
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (slots[i].first != mats[i].first) {
            throw std::runtime_error("Params::load: unexpected matrix name " + mats[i].first);
        }
        *slots[i].second = std::move(mats[i].second);
    }
    return p;
}

std::vector<double> weighted_degrees(const TransformedGraph& t, const ModelConfig& cfg) {
    cfg.validate();
    std::vector<double> d(static_cast<std::size_t>(t.num_all_nodes()), cfg.w0);
    for (const Edge& e : t.base.edges) {
        d[static_cast<std::size_t>(e.u)] += ModelConfig::w_e;
        d[static_cast<std::size_t>(e.v)] += ModelConfig::w_e;
    }
    for (const FeatureEdge& fe : t.feature_edges) {
        d[static_cast<std::size_t>(fe.node)] += cfg.w_x;
        d[static_cast<std::size_t>(t.feature_node_vertex(fe.feature_node))] += cfg.w_x;
    }
    return d;
}

double gate_score(std::span<const Real> h_u, std::span<const Real> h_v,
                  std::span<const Real> a, Real b, Real tau) {
    if (h_u.size() != h_v.size() || a.size() != 2 * h_u.size()) {
        throw std::invalid_argument("gate_score: dimension mismatch");
    }
    if (!(tau > 0.0)) throw std::invalid_argument("gate_score: tau must be positive");
    double score = b;
    const std::size_t m = h_u.size();
    for (std::size_t j = 0; j < m; ++j) score += a[j] * h_u[j];
    for (std::size_t j = 0; j < m; ++j) score += a[m + j] * h_v[j];
    return std::tanh(score / tau);
}

GatedStructure build_propagation(const TransformedGraph& t, const ModelConfig& cfg) {
    cfg.validate();
    const std::vector<double> d = weighted_degrees(t, cfg);
    std::vector<double> inv_sqrt_d(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) inv_sqrt_d[i] = 1.0 / std::sqrt(d[i]);

    GatedStructure s;
    s.num_rows = t.num_all_nodes();
    s.gates.reserve(d.size() + 2 * t.base.edges.size() + t.feature_edges.size());
    s.entries.reserve(d.size() + 2 * t.base.edges.size() + 2 * t.feature_edges.size());

    auto add_gate = [&s](std::int32_t u, std::int32_t v) {
        s.gates.push_back({u, v});
        return static_cast<std::int32_t>(s.gates.size()) - 1;
    };

    for (std::int32_t u = 0; u < s.num_rows; ++u) {
        const std::int32_t g = add_gate(u, u);
        s.entries.push_back({u, u, g, static_cast<Real>(cfg.w0 / d[static_cast<std::size_t>(u)])});
    }
    for (const Edge& e : t.base.edges) {
        const Real coeff = static_cast<Real>(ModelConfig::w_e * inv_sqrt_d[static_cast<std::size_t>(e.u)] *
                                             inv_sqrt_d[static_cast<std::size_t>(e.v)]);
        s.entries.push_back({e.u, e.v, add_gate(e.u, e.v), coeff});
        s.entries.push_back({e.v, e.u, add_gate(e.v, e.u), coeff});
    }
    for (const FeatureEdge& fe : t.feature_edges) {
        const std::int32_t x = t.feature_node_vertex(fe.feature_node);
        const Real coeff = static_cast<Real>(cfg.w_x * inv_sqrt_d[static_cast<std::size_t>(fe.node)] *
                                             inv_sqrt_d[static_cast<std::size_t>(x)]);
        // One gate per feature edge, graph node first; reused by both directions.
        const std::int32_t g = add_gate(fe.node, x);
        s.entries.push_back({fe.node, x, g, coeff});
        s.entries.push_back({x, fe.node, g, coeff});
    }
    return s;
}

Tensor aggregate(Tape& tape, const GatedStructure& prop, Tensor h, Tensor gate_a, Tensor gate_b,
                 Real tau) {
    return tape.gated_aggregate(h, gate_a, gate_b, prop, tau);
}

std::vector<Tensor> BoundParams::all() const {
    std::vector<Tensor> out;
    out.push_back(encoder_w);
    out.push_back(encoder_b);
    for (const Layer& l : layers) {
        out.push_back(l.gate_a);
        out.push_back(l.gate_b);
        out.push_back(l.mlp_w1);
        out.push_back(l.mlp_b1);
        out.push_back(l.mlp_w2);
        out.push_back(l.mlp_b2);
    }
    out.push_back(decoder_w);
    out.push_back(decoder_b);
    return out;
}

BoundParams bind_params(Tape& tape, const Params& params) {
    BoundParams b;
    b.encoder_w = tape.param(params.encoder_w);
    b.encoder_b = tape.param(params.encoder_b);
    for (const LayerParams& l : params.layers) {
        BoundParams::Layer bl;
        bl.gate_a = tape.param(l.gate_a);
        bl.gate_b = tape.param(l.gate_b);
        bl.mlp_w1 = tape.param(l.mlp_w1);
        bl.mlp_b1 = tape.param(l.mlp_b1);
        bl.mlp_w2 = tape.param(l.mlp_w2);
        bl.mlp_b2 = tape.param(l.mlp_b2);
        b.layers.push_back(bl);
    }
    b.decoder_w = tape.param(params.decoder_w);
    b.decoder_b = tape.param(params.decoder_b);
    return b;
}

Tensor forward(Tape& tape, const TransformedGraph& t, const GatedStructure& prop,
               const BoundParams& bound, const ModelConfig& cfg, bool train_mode,
               std::mt19937_64& rng) {
    Tensor h = tape.add_rowvec(tape.sparse_matmul(t.x_star, bound.encoder_w), bound.encoder_b);
    for (const BoundParams::Layer& layer : bound.layers) {
        Tensor agg = tape.gated_aggregate(h, layer.gate_a, layer.gate_b, prop,
                                          static_cast<Real>(cfg.tau));
        Tensor hidden = tape.gelu(tape.add_rowvec(tape.matmul(agg, layer.mlp_w1), layer.mlp_b1));
        Tensor mlp = tape.add_rowvec(tape.matmul(hidden, layer.mlp_w2), layer.mlp_b2);
        h = tape.add(agg, mlp);
        if (train_mode && cfg.dropout_rate > 0.0) {
            h = tape.dropout(h, cfg.dropout_rate, rng);
        }
    }
    Tensor graph_rows = tape.slice_rows(h, 0, t.base.num_nodes);
    return tape.add_rowvec(tape.matmul(graph_rows, bound.decoder_w), bound.decoder_b);
}

Matrix forward_eval(const TransformedGraph& t, const Params& params, const ModelConfig& cfg) {
    Tape tape;
    const GatedStructure prop = build_propagation(t, cfg);
    const BoundParams bound = bind_params(tape, params);
    std::mt19937_64 rng(0);
    return forward(tape, t, prop, bound, cfg, /*train_mode=*/false, rng).value();
}

}  // namespace graphite
