#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "graphite/tensor.hpp"
#include "graphite/transform.hpp"

namespace graphite {

struct ModelConfig {
    double w_x = 0.6;    // feature-edge weight
    double w0 = 0.5;     // self-loop weight
    double tau = 1.0;    // gate temperature
    int num_layers = 2;  // aggregation + MLP blocks
    int hidden_dim = 64;
    double dropout_rate = 0.2;

    // Graph edges are the reference weight and stay fixed.
    static constexpr double w_e = 1.0;

    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

struct LayerParams {
    Matrix gate_a;  // 1 x 2m
    Matrix gate_b;  // 1 x 1
    Matrix mlp_w1;  // m x m
    Matrix mlp_b1;  // 1 x m
    Matrix mlp_w2;  // m x m
    Matrix mlp_b2;  // 1 x m

    bool operator==(const LayerParams&) const = default;
};

struct Params {
    Matrix encoder_w;  // |X| x m
    Matrix encoder_b;  // 1 x m
    std::vector<LayerParams> layers;
    Matrix decoder_w;  // m x C
    Matrix decoder_b;  // 1 x C

    // Glorot-uniform weights, zero biases, from a seeded generator.
    static Params init(const ModelConfig& cfg, std::int64_t num_features, std::int64_t num_classes,
                       std::uint64_t seed);
    static Params zeros(const ModelConfig& cfg, std::int64_t num_features, std::int64_t num_classes);

    // Matrices in a fixed order with stable names, for the optimizer and the
    // checkpoint container.
    std::vector<std::pair<std::string, Matrix*>> entries();
    std::vector<std::pair<std::string, const Matrix*>> entries() const;

    void save(const std::filesystem::path& path) const;
    static Params load(const std::filesystem::path& path);

    bool operator==(const Params&) const = default;
};

// Weighted degrees of Eqs. for graph nodes (self + graph neighbors + feature
// neighbors) and feature nodes (self + incident feature edges).
std::vector<double> weighted_degrees(const TransformedGraph& t, const ModelConfig& cfg);

// tanh((a^T (h_u || h_v) + b) / tau); strictly inside (-1, 1).
double gate_score(std::span<const Real> h_u, std::span<const Real> h_v,
                  std::span<const Real> a, Real b, Real tau);

// Gates and scatter entries realizing the aggregation rules: self loops with
// weight w0, symmetric graph-edge terms with directional gates, and feature
// edges whose single gate (ordered graph node first) is reused by both
// directions.
GatedStructure build_propagation(const TransformedGraph& t, const ModelConfig& cfg);

// One aggregation step over precomputed structure (Tape op wrapper).
Tensor aggregate(Tape& tape, const GatedStructure& prop, Tensor h, Tensor gate_a, Tensor gate_b,
                 Real tau);

// Tape-side parameter handles for one training step.
struct BoundParams {
    Tensor encoder_w, encoder_b;
    struct Layer {
        Tensor gate_a, gate_b, mlp_w1, mlp_b1, mlp_w2, mlp_b2;
    };
    std::vector<Layer> layers;
    Tensor decoder_w, decoder_b;

    std::vector<Tensor> all() const;
};

BoundParams bind_params(Tape& tape, const Params& params);

// Full forward pass: encode, num_layers x (aggregate, residual MLP, dropout),
// decode. Returns logits for graph nodes only. rng drives dropout and is only
// touched in train mode with a positive dropout rate.
Tensor forward(Tape& tape, const TransformedGraph& t, const GatedStructure& prop,
               const BoundParams& bound, const ModelConfig& cfg, bool train_mode,
               std::mt19937_64& rng);

// Convenience: forward pass on a throwaway tape, returning logits by value.
Matrix forward_eval(const TransformedGraph& t, const Params& params, const ModelConfig& cfg);

}  // namespace graphite
