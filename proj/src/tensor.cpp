#include "graphite/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "graphite/rng.hpp"

namespace graphite {

namespace {
constexpr Real kInvSqrt2 = 0.7071067811865475244;
constexpr Real kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

Real gelu_scalar(Real x) {
    return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
}

Real gelu_derivative(Real x) {
    const Real cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    const Real pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    return cdf + x * pdf;
}

std::int64_t Tensor::rows() const { return value().rows; }
std::int64_t Tensor::cols() const { return value().cols; }

const Matrix& Tensor::value() const {
    return tape_->nodes_[static_cast<std::size_t>(id_)].value;
}

const Matrix& Tensor::grad() const {
    return tape_->nodes_[static_cast<std::size_t>(id_)].grad;
}

void Tape::require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void Tape::check_finite(const Matrix& m, const char* where) const {
#ifndef NDEBUG
    for (Real v : m.data) {
        if (!std::isfinite(v)) {
            throw NumericsError(std::string("non-finite value in ") + where);
        }
    }
#else
    (void)m;
    (void)where;
#endif
}

Tensor Tape::emplace(Matrix value, std::function<void(Tape&)> backward) {
    check_finite(value, "forward pass");
    Node node;
    node.grad = Matrix(value.rows, value.cols, 0.0);
    node.value = std::move(value);
    node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Tensor(this, static_cast<std::int32_t>(nodes_.size()) - 1);
}

Tensor Tape::constant(Matrix m) { return emplace(std::move(m)); }

Tensor Tape::param(const Matrix& m) { return emplace(m); }

Tensor Tape::matmul(Tensor a, Tensor b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    const Matrix& av = value_of(a);
    const Matrix& bv = value_of(b);
    Matrix out(av.rows, bv.cols);
    for (std::int64_t i = 0; i < av.rows; ++i) {
        for (std::int64_t k = 0; k < av.cols; ++k) {
            const Real aik = av.at(i, k);
            if (aik == 0.0) continue;
            for (std::int64_t j = 0; j < bv.cols; ++j) {
                out.at(i, j) += aik * bv.at(k, j);
            }
        }
    }
    const std::int32_t out_id = static_cast<std::int32_t>(nodes_.size());
    return emplace(std::move(out), [a, b, out_id](Tape& t) {
        const Matrix& go = t.nodes_[static_cast<std::size_t>(out_id)].grad;
        const Matrix& av = t.value_of(a);
        const Matrix& bv = t.value_of(b);
        Matrix& ga = t.grad_of(a);
        Matrix& gb = t.grad_of(b);
        // dA = dC * B^T
        for (std::int64_t i = 0; i < av.rows; ++i) {
            for (std::int64_t j = 0; j < bv.cols; ++j) {
                const Real g = go.at(i, j);
                if (g == 0.0) continue;
                for (std::int64_t k = 0; k < av.cols; ++k) {
                    ga.at(i, k) += g * bv.at(k, j);
                }
            }
        }
        // dB = A^T * dC
        for (std::int64_t i = 0; i < av.rows; ++i) {
            for (std::int64_t k = 0; k < av.cols; ++k) {
                const Real aik = av.at(i, k);
                if (aik == 0.0) continue;
                for (std::int64_t j = 0; j < bv.cols; ++j) {
                    gb.at(k, j) += aik * go.at(i, j);
                }
            }
        }
    });
}

Tensor Tape::add(Tensor a, Tensor b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
    const Matrix& av = value_of(a);
    const Matrix& bv = value_of(b);
    Matrix out = av;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
    const std::int32_t out_id = static_cast<std::int32_t>(nodes_.size());
    return emplace(std::move(out), [a, b, out_id](Tape& t) {
        const Matrix& go = t.nodes_[static_cast<std::size_t>(out_id)].grad;
        Matrix& ga = t.grad_of(a);
        Matrix& gb = t.grad_of(b);
        for (std::size_t i = 0; i < go.data.size(); ++i) {
            ga.data[i] += go.data[i];
            gb.data[i] += go.data[i];
        }
    });
}

Tensor Tape::add_rowvec(Tensor a, Tensor bias) {
    require(bias.rows() == 1 && bias.cols() == a.cols(), "add_rowvec: bias must be 1 x cols");
    const Matrix& av = value_of(a);
    const Matrix& bv = value_of(bias);
    Matrix out = av;
    for (std::int64_t i = 0; i < out.rows; ++i) {
        for (std::int64_t j = 0; j < out.cols; ++j) out.at(i, j) += bv.at(0, j);
    }
    const std::int32_t out_id = static_cast<std::int32_t>(nodes_.size());
    return emplace(std::move(out), [a, bias, out_id](Tape& t) {
        const Matrix& go = t.nodes_[static_cast<std::size_t>(out_id)].grad;
        Matrix& ga = t.grad_of(a);
        Matrix& gb = t.grad_of(bias);
        for (std::int64_t i = 0; i < go.rows; ++i) {
            for (std::int64_t j = 0; j < go.cols; ++j) {
                ga.at(i, j) += go.at(i, j);
                gb.at(0, j) += go.at(i, j);
            }
        }
    });
}

Tensor Tape::scale(Tensor a, Real factor) {
    Matrix out = value_of(a);
    for (Real& v : out.data) v *= factor;
    const std::int32_t out_id = static_cast<std::int32_t>(nodes_.size());
    return emplace(std::move(out), [a, factor, out_id](Tape& t) {
        const Matrix& go = t.nodes_[static_cast<std::size_t>(out_id)].grad;
        Matrix& ga = t.grad_of(a);
        for (std::size_t i = 0; i < go.data.size(); ++i) ga.data[i] += factor * go.data[i];
    });
}

Tensor Tape::tanh(Tensor a) {
    Matrix out = value_of(a);
    for (Real& v : out.data) v = std::tanh(v);
    const std::int32_t out_id = static_cast<std::int32_t>(nodes_.size());
    return emplace(std::move(out), [a, out_id](Tape& t) {
        const Node& out_node = t.nodes_[static_cast<std::size_t>(out_id)];
        Matrix& ga = t.grad_of(a);
        for (std::size_t i = 0; i < out_node.grad.data.size(); ++i) {
            const Real y = out_node.value.data[i];
            ga.data[i] += (1.0 - y * y) * out_node.grad.data[i];
        }
    });
}

Tensor Tape::gelu(Tensor a) {
    Matrix out = value_of(a);
    for (Real& v : out.data) v = gelu_scalar(v);
    const std::int32_t out_id = static_cast<std::int32_t>(nodes_.size());
    return emplace(std::move(out), [a, out_id](Tape& t) {
        const Matrix& go = t.nodes_[static_cast<std::size_t>(out_id)].grad;
        const Matrix& av = t.value_of(a);
        Matrix& ga = t.grad_of(a);
        for (std::size_t i = 0; i < go.data.size(); ++i) {
            ga.data[i] += gelu_derivative(av.data[i]) * go.data[i];
        }
    });
}

Tensor Tape::slice_rows(Tensor a, std::int64_t begin, std::int64_t end) {
    require(begin >= 0 && begin <= end && end <= a.rows(), "slice_rows: bad range");
    const Matrix& av = value_of(a);
    Matrix out(end - begin, av.cols);
    std::copy(av.data.begin() + begin * av.cols, av.data.begin() + end * av.cols, out.data.begin());
    const std::int32_t out_id = static_cast<std::int32_t>(nodes_.size());
    return emplace(std::move(out), [a, begin, out_id](Tape& t) {
        const Matrix& go = t.nodes_[static_cast<std::size_t>(out_id)].grad;
        Matrix& ga = t.grad_of(a);
        for (std::int64_t i = 0; i < go.rows; ++i) {
            for (std::int64_t j = 0; j < go.cols; ++j) ga.at(begin + i, j) += go.at(i, j);
        }
    });
}

Tensor Tape::sparse_matmul(const SparseRowMatrix& x, Tensor w) {
    require(x.num_cols == w.rows(), "sparse_matmul: inner dimensions differ");
    const Matrix& wv = value_of(w);
    Matrix out(x.num_rows(), wv.cols);
    for (std::int64_t i = 0; i < x.num_rows(); ++i) {
        for (const SparseEntry& e : x.rows[static_cast<std::size_t>(i)]) {
            for (std::int64_t j = 0; j < wv.cols; ++j) {
                out.at(i, j) += e.value * wv.at(e.col, j);
            }
        }
    }
    const std::int32_t out_id = static_cast<std::int32_t>(nodes_.size());
    // x is borrowed; it must outlive the tape (the sparse input is a constant).
    return emplace(std::move(out), [xp = &x, w, out_id](Tape& t) {
        const Matrix& go = t.nodes_[static_cast<std::size_t>(out_id)].grad;
        Matrix& gw = t.grad_of(w);
        for (std::int64_t i = 0; i < xp->num_rows(); ++i) {
            for (const SparseEntry& e : xp->rows[static_cast<std::size_t>(i)]) {
                for (std::int64_t j = 0; j < go.cols; ++j) {
                    gw.at(e.col, j) += e.value * go.at(i, j);
                }
            }
        }
    });
}

Tensor Tape::dropout(Tensor a, double rate, std::mt19937_64& rng) {
    require(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0, 1)");
    if (rate == 0.0) return a;
    const Matrix& av = value_of(a);
    const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate));
    std::vector<Real> mask(av.data.size());
    for (Real& m : mask) m = canonical_double(rng) < rate ? 0.0 : keep_scale;
    Matrix out = av;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= mask[i];
    const std::int32_t out_id = static_cast<std::int32_t>(nodes_.size());
    return emplace(std::move(out), [a, mask = std::move(mask), out_id](Tape& t) {
        const Matrix& go = t.nodes_[static_cast<std::size_t>(out_id)].grad;
        Matrix& ga = t.grad_of(a);
        for (std::size_t i = 0; i < go.data.size(); ++i) ga.data[i] += mask[i] * go.data[i];
    });
}

Tensor Tape::gated_aggregate(Tensor h, Tensor gate_a, Tensor gate_b, const GatedStructure& s, Real tau) {
    require(tau > 0.0, "gated_aggregate: temperature must be positive");
    require(h.rows() == s.num_rows, "gated_aggregate: row count differs from structure");
    require(gate_a.rows() == 1 && gate_a.cols() == 2 * h.cols(),
            "gated_aggregate: gate vector must be 1 x 2m");
    require(gate_b.rows() == 1 && gate_b.cols() == 1, "gated_aggregate: gate bias must be 1 x 1");

    const Matrix& hv = value_of(h);
    const Matrix& av = value_of(gate_a);
    const Real b = value_of(gate_b).at(0, 0);
    const std::int64_t m = hv.cols;

    std::vector<Real> alpha(s.gates.size());
    for (std::size_t g = 0; g < s.gates.size(); ++g) {
        const auto hu = hv.row(s.gates[g].u);
        const auto hw = hv.row(s.gates[g].v);
        Real score = b;
        for (std::int64_t j = 0; j < m; ++j) {
            score += av.at(0, j) * hu[static_cast<std::size_t>(j)];
            score += av.at(0, m + j) * hw[static_cast<std::size_t>(j)];
        }
        alpha[g] = std::tanh(score / tau);
    }

    Matrix out(hv.rows, m);
    for (const auto& e : s.entries) {
        const Real w = e.coeff * alpha[static_cast<std::size_t>(e.gate)];
        const auto src = hv.row(e.src);
        auto dst = out.row(e.dst);
        for (std::int64_t j = 0; j < m; ++j) {
            dst[static_cast<std::size_t>(j)] += w * src[static_cast<std::size_t>(j)];
        }
    }

    const std::int32_t out_id = static_cast<std::int32_t>(nodes_.size());
    // s is borrowed; the caller keeps the structure alive for the tape's lifetime.
    return emplace(std::move(out),
                   [h, gate_a, gate_b, sp = &s, tau, alpha = std::move(alpha), out_id](Tape& t) {
        const GatedStructure& s = *sp;
        const Matrix& go = t.nodes_[static_cast<std::size_t>(out_id)].grad;
        const Matrix& hv = t.value_of(h);
        const Matrix& av = t.value_of(gate_a);
        Matrix& gh = t.grad_of(h);
        Matrix& ga = t.grad_of(gate_a);
        Matrix& gb = t.grad_of(gate_b);
        const std::int64_t m = hv.cols;

        std::vector<Real> galpha(alpha.size(), 0.0);
        for (const auto& e : s.entries) {
            const Real w = e.coeff * alpha[static_cast<std::size_t>(e.gate)];
            const auto gdst = go.row(e.dst);
            const auto src = hv.row(e.src);
            auto gsrc = gh.row(e.src);
            Real dot = 0.0;
            for (std::int64_t j = 0; j < m; ++j) {
                gsrc[static_cast<std::size_t>(j)] += w * gdst[static_cast<std::size_t>(j)];
                dot += gdst[static_cast<std::size_t>(j)] * src[static_cast<std::size_t>(j)];
            }
            galpha[static_cast<std::size_t>(e.gate)] += e.coeff * dot;
        }
        for (std::size_t g = 0; g < s.gates.size(); ++g) {
            const Real a = alpha[g];
            const Real dscore = galpha[g] * (1.0 - a * a) / tau;
            if (dscore == 0.0) continue;
            const auto hu = hv.row(s.gates[g].u);
            const auto hw = hv.row(s.gates[g].v);
            auto gu = gh.row(s.gates[g].u);
            auto gv = gh.row(s.gates[g].v);
            for (std::int64_t j = 0; j < m; ++j) {
                ga.at(0, j) += dscore * hu[static_cast<std::size_t>(j)];
                ga.at(0, m + j) += dscore * hw[static_cast<std::size_t>(j)];
                gu[static_cast<std::size_t>(j)] += dscore * av.at(0, j);
                gv[static_cast<std::size_t>(j)] += dscore * av.at(0, m + j);
            }
            gb.at(0, 0) += dscore;
        }
    });
}

Tensor Tape::softmax_cross_entropy(Tensor logits,
                                   std::span<const std::int32_t> labels,
                                   std::span<const std::int32_t> mask_rows) {
    require(!mask_rows.empty(), "softmax_cross_entropy: empty mask");
    require(static_cast<std::int64_t>(labels.size()) == logits.rows(),
            "softmax_cross_entropy: labels must cover all rows");
    const Matrix& lv = value_of(logits);
    const std::int64_t classes = lv.cols;
    for (std::int32_t r : mask_rows) {
        require(r >= 0 && r < lv.rows, "softmax_cross_entropy: mask row out of range");
        require(labels[static_cast<std::size_t>(r)] >= 0 &&
                    labels[static_cast<std::size_t>(r)] < classes,
                "softmax_cross_entropy: label out of range on masked row");
    }

    double loss = 0.0;
    for (std::int32_t r : mask_rows) {
        const auto row = lv.row(r);
        Real mx = row[0];
        for (Real v : row) mx = std::max(mx, v);
        double lse = 0.0;
        for (Real v : row) lse += std::exp(v - mx);
        lse = mx + std::log(lse);
        loss += lse - row[static_cast<std::size_t>(labels[static_cast<std::size_t>(r)])];
    }
    Matrix out(1, 1);
    out.at(0, 0) = static_cast<Real>(loss / static_cast<double>(mask_rows.size()));

    const std::int32_t out_id = static_cast<std::int32_t>(nodes_.size());
    return emplace(std::move(out),
                   [logits, mask = std::vector<std::int32_t>(mask_rows.begin(), mask_rows.end()),
                    label_copy = std::vector<std::int32_t>(labels.begin(), labels.end()),
                    out_id](Tape& t) {
        const Matrix& lv = t.value_of(logits);
        Matrix& gl = t.grad_of(logits);
        const Real gout = t.nodes_[static_cast<std::size_t>(out_id)].grad.at(0, 0);
        const Real inv = gout / static_cast<Real>(mask.size());
        for (std::int32_t r : mask) {
            const auto row = lv.row(r);
            Real mx = row[0];
            for (Real v : row) mx = std::max(mx, v);
            double denom = 0.0;
            for (Real v : row) denom += std::exp(v - mx);
            for (std::int64_t c = 0; c < lv.cols; ++c) {
                const Real p = static_cast<Real>(std::exp(row[static_cast<std::size_t>(c)] - mx) / denom);
                gl.at(r, c) += inv * p;
            }
            gl.at(r, label_copy[static_cast<std::size_t>(r)]) -= inv;
        }
    });
}

void Tape::backward(Tensor loss) {
    if (!loss.valid() || loss.tape_ != this) throw std::invalid_argument("backward: loss not on this tape");
    require(loss.rows() == 1 && loss.cols() == 1, "backward: loss must be a 1x1 scalar");
    for (Node& n : nodes_) std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
    nodes_[static_cast<std::size_t>(loss.id_)].grad.at(0, 0) = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (nodes_[i].backward) nodes_[i].backward(*this);
    }
#ifndef NDEBUG
    for (const Node& n : nodes_) check_finite(n.grad, "backward pass");
#endif
}

}  // namespace graphite
