#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graphite/model.hpp"

namespace graphite {

enum class SplitRatio { R48_32_20, R60_20_20 };

struct SplitSpec {
    std::vector<std::int32_t> train;
    std::vector<std::int32_t> val;
    std::vector<std::int32_t> test;
    std::uint64_t seed = 0;
    int replicate = 0;
    SplitRatio ratio = SplitRatio::R48_32_20;
};

enum class EvalMetric { Accuracy, RocAuc };

struct TrainConfig {
    double learning_rate = 3e-5;
    int steps = 1000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    EvalMetric metric = EvalMetric::Accuracy;

    void validate() const;
};

struct TrainReport {
    std::vector<double> loss_curve;  // length = steps
    double final_val = 0.0;
    double final_test = 0.0;
    double best_val = 0.0;
    int best_val_step = 0;  // step index whose parameters scored best_val
    double test_at_best_val = 0.0;
    std::uint64_t seed = 0;
    int replicate = 0;
    std::string config_hash;
    EvalMetric metric = EvalMetric::Accuracy;
    Params best_params;  // checkpoint at best_val_step
};

// Disjoint per-replicate splits over the labeled nodes, deterministic in seed.
// Throws std::invalid_argument when fewer than 3 labeled nodes are available.
std::vector<SplitSpec> make_splits(const Graph& g, SplitRatio ratio, std::uint64_t seed,
                                   int replicates = 10);

// Adam moment buffers, one pair per parameter matrix, in Params::entries order.
struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::int64_t t = 0;

    static AdamState init(const Params& params);
};

// Standard Adam with bias correction over all parameter matrices.
void adam_step(Params& params, std::span<const Matrix> grads, AdamState& state,
               const TrainConfig& cfg);

double accuracy(const Matrix& logits, std::span<const std::int32_t> labels,
                std::span<const std::int32_t> index_set);

// Mann-Whitney rank statistic; ties contribute 1/2. Scores are per-node
// scalars; labels must contain both classes within index_set.
double roc_auc(std::span<const double> scores, std::span<const std::int32_t> labels,
               std::span<const std::int32_t> index_set);

// Full-graph training with loss masked to the train split. Deterministic
// given seeds; throws NumericsError on divergence (non-finite loss).
TrainReport train(const TransformedGraph& t, const SplitSpec& split, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg);
TrainReport train(const Graph& g, const SplitSpec& split, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg);

// Metric of a logits matrix on an index set, honoring cfg.metric.
double evaluate_metric(const Matrix& logits, std::span<const std::int32_t> labels,
                       std::span<const std::int32_t> index_set, EvalMetric metric);

std::string config_hash(const ModelConfig& m, const TrainConfig& t);

}  // namespace graphite
