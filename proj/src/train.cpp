#include "graphite/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "graphite/rng.hpp"

namespace graphite {

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("TrainConfig: negative learning rate");
    if (steps < 0) throw std::invalid_argument("TrainConfig: negative step count");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("TrainConfig: betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw std::invalid_argument("TrainConfig: epsilon must be positive");
}

std::vector<SplitSpec> make_splits(const Graph& g, SplitRatio ratio, std::uint64_t seed,
                                   int replicates) {
    if (!g.has_labels()) throw std::invalid_argument("make_splits: graph has no labels");
    std::vector<std::int32_t> labeled;
    for (NodeId v = 0; v < g.num_nodes; ++v) {
        if (g.label_mask[static_cast<std::size_t>(v)]) labeled.push_back(v);
    }
    if (labeled.size() < 3) throw std::invalid_argument("make_splits: need at least 3 labeled nodes");

    const double r_train = ratio == SplitRatio::R48_32_20 ? 0.48 : 0.60;
    const double r_val = ratio == SplitRatio::R48_32_20 ? 0.32 : 0.20;
    const auto n = static_cast<std::int64_t>(labeled.size());
    auto n_train = static_cast<std::int64_t>(std::llround(r_train * static_cast<double>(n)));
    auto n_val = static_cast<std::int64_t>(std::llround(r_val * static_cast<double>(n)));
    n_train = std::clamp<std::int64_t>(n_train, 1, n - 2);
    n_val = std::clamp<std::int64_t>(n_val, 1, n - n_train - 1);

    std::vector<SplitSpec> out;
    out.reserve(static_cast<std::size_t>(replicates));
    for (int rep = 0; rep < replicates; ++rep) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(rep)));
        std::vector<std::int32_t> order = labeled;
        shuffle_deterministic(order, rng);
        SplitSpec s;
        s.seed = seed;
        s.replicate = rep + 1;
        s.ratio = ratio;
        s.train.assign(order.begin(), order.begin() + n_train);
        s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
        s.test.assign(order.begin() + n_train + n_val, order.end());
        std::sort(s.train.begin(), s.train.end());
        std::sort(s.val.begin(), s.val.end());
        std::sort(s.test.begin(), s.test.end());
        out.push_back(std::move(s));
    }
    return out;
}

AdamState AdamState::init(const Params& params) {
    AdamState s;
    for (const auto& [name, mat] : params.entries()) {
        s.m.emplace_back(mat->rows, mat->cols);
        s.v.emplace_back(mat->rows, mat->cols);
    }
    return s;
}

void adam_step(Params& params, std::span<const Matrix> grads, AdamState& state,
               const TrainConfig& cfg) {
    auto slots = params.entries();
    if (grads.size() != slots.size() || state.m.size() != slots.size()) {
        throw std::invalid_argument("adam_step: gradient/state count mismatch");
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < slots.size(); ++i) {
        Matrix& p = *slots[i].second;
        const Matrix& g = grads[i];
        if (g.rows != p.rows || g.cols != p.cols) {
            throw std::invalid_argument("adam_step: gradient shape mismatch at " + slots[i].first);
        }
        Matrix& m = state.m[i];
        Matrix& v = state.v[i];
        for (std::size_t j = 0; j < p.data.size(); ++j) {
            m.data[j] = cfg.beta1 * m.data[j] + (1.0 - cfg.beta1) * g.data[j];
            v.data[j] = cfg.beta2 * v.data[j] + (1.0 - cfg.beta2) * g.data[j] * g.data[j];
            const double m_hat = m.data[j] / bc1;
            const double v_hat = v.data[j] / bc2;
            p.data[j] -= static_cast<Real>(cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
        }
    }
}

double accuracy(const Matrix& logits, std::span<const std::int32_t> labels,
                std::span<const std::int32_t> index_set) {
    if (index_set.empty()) throw std::invalid_argument("accuracy: empty index set");
    std::int64_t correct = 0;
    for (std::int32_t r : index_set) {
        const auto row = logits.row(r);
        std::size_t best = 0;  // lowest class index wins ties
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (row[c] > row[best]) best = c;
        }
        if (static_cast<std::int32_t>(best) == labels[static_cast<std::size_t>(r)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(index_set.size());
}

double roc_auc(std::span<const double> scores, std::span<const std::int32_t> labels,
               std::span<const std::int32_t> index_set) {
    if (index_set.empty()) throw std::invalid_argument("roc_auc: empty index set");
    std::vector<std::pair<double, std::int32_t>> items;
    items.reserve(index_set.size());
    std::int64_t n_pos = 0, n_neg = 0;
    for (std::int32_t r : index_set) {
        const std::int32_t y = labels[static_cast<std::size_t>(r)];
        if (y != 0 && y != 1) throw std::invalid_argument("roc_auc: labels must be binary");
        items.emplace_back(scores[static_cast<std::size_t>(r)], y);
        (y == 1 ? n_pos : n_neg)++;
    }
    if (n_pos == 0 || n_neg == 0) {
        throw std::invalid_argument("roc_auc: index set must contain both classes");
    }
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // Average ranks across tied scores, then the Mann-Whitney identity.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < items.size()) {
        std::size_t j = i;
        while (j < items.size() && items[j].first == items[i].first) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) {
            if (items[k].second == 1) rank_sum_pos += avg_rank;
        }
        i = j;
    }
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double evaluate_metric(const Matrix& logits, std::span<const std::int32_t> labels,
                       std::span<const std::int32_t> index_set, EvalMetric metric) {
    if (metric == EvalMetric::Accuracy) return accuracy(logits, labels, index_set);
    if (logits.cols != 2) throw std::invalid_argument("roc_auc metric needs exactly 2 classes");
    std::vector<double> scores(static_cast<std::size_t>(logits.rows));
    for (std::int64_t r = 0; r < logits.rows; ++r) {
        scores[static_cast<std::size_t>(r)] = logits.at(r, 1) - logits.at(r, 0);
    }
    return roc_auc(scores, labels, index_set);
}

std::string config_hash(const ModelConfig& m, const TrainConfig& t) {
    char buf[512];
    std::snprintf(buf, sizeof(buf), "wx=%.17g w0=%.17g tau=%.17g L=%d m=%d p=%.17g lr=%.17g "
                  "steps=%d b1=%.17g b2=%.17g eps=%.17g metric=%d",
                  m.w_x, m.w0, m.tau, m.num_layers, m.hidden_dim, m.dropout_rate, t.learning_rate,
                  t.steps, t.beta1, t.beta2, t.epsilon, static_cast<int>(t.metric));
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (const char* p = buf; *p; ++p) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(*p));
        h *= 1099511628211ULL;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

TrainReport train(const TransformedGraph& t, const SplitSpec& split, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg) {
    model_cfg.validate();
    train_cfg.validate();
    if (!t.base.has_labels()) throw std::invalid_argument("train: graph has no labels");
    if (split.train.empty() || split.val.empty() || split.test.empty()) {
        throw std::invalid_argument("train: split has an empty part");
    }
    if (train_cfg.metric == EvalMetric::RocAuc && t.base.num_classes != 2) {
        throw std::invalid_argument("train: ROC-AUC needs a binary task");
    }

    const GatedStructure prop = build_propagation(t, model_cfg);
    Params params = Params::init(model_cfg, t.base.num_features, t.base.num_classes,
                                 mix_seed(train_cfg.seed, 0));
    AdamState adam = AdamState::init(params);
    std::mt19937_64 dropout_rng(mix_seed(train_cfg.seed, 1));

    TrainReport report;
    report.seed = train_cfg.seed;
    report.replicate = split.replicate;
    report.config_hash = config_hash(model_cfg, train_cfg);
    report.metric = train_cfg.metric;
    report.loss_curve.reserve(static_cast<std::size_t>(train_cfg.steps));
    report.best_val = -1.0;

    const auto& labels = t.base.labels;
    auto eval = [&](const Params& p, std::span<const std::int32_t> index_set) {
        Tape tape;
        const BoundParams bound = bind_params(tape, p);
        std::mt19937_64 eval_rng(0);
        const Matrix& logits =
            forward(tape, t, prop, bound, model_cfg, /*train_mode=*/false, eval_rng).value();
        return evaluate_metric(logits, labels, index_set, train_cfg.metric);
    };

    // Step 0 is the untrained model; checkpoints track the best validation score.
    {
        const double val = eval(params, split.val);
        report.best_val = val;
        report.best_val_step = 0;
        report.best_params = params;
    }

    for (int step = 1; step <= train_cfg.steps; ++step) {
        Tape tape;
        const BoundParams bound = bind_params(tape, params);
        double loss_value;
        try {
            Tensor logits = forward(tape, t, prop, bound, model_cfg, /*train_mode=*/true, dropout_rng);
            Tensor loss = tape.softmax_cross_entropy(logits, labels, split.train);
            loss_value = loss.value().at(0, 0);
            if (!std::isfinite(loss_value)) {
                throw NumericsError("train: loss is not finite");
            }
            tape.backward(loss);
        } catch (const NumericsError& e) {
            throw NumericsError("train: diverged at step " + std::to_string(step) + ": " + e.what());
        }
        report.loss_curve.push_back(loss_value);

        std::vector<Matrix> grads;
        grads.reserve(bound.all().size());
        for (const Tensor& p : bound.all()) grads.push_back(p.grad());
        adam_step(params, grads, adam, train_cfg);

        const double val = eval(params, split.val);
        if (val > report.best_val) {
            report.best_val = val;
            report.best_val_step = step;
            report.best_params = params;
        }
    }

    report.final_val = eval(params, split.val);
    report.final_test = eval(params, split.test);
    report.test_at_best_val = eval(report.best_params, split.test);
    return report;
}

TrainReport train(const Graph& g, const SplitSpec& split, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg) {
    return train(identity_transform(g), split, model_cfg, train_cfg);
}

}  // namespace graphite
