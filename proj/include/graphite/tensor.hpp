#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "graphite/matrix.hpp"

namespace graphite {

// Raised when a forward or backward value goes non-finite (active unless
// NDEBUG is defined) or when the training loop detects divergence.
class NumericsError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Sparse gather/scatter pattern for gated aggregation. Each entry adds
// coeff * alpha[gate] * h[src] into out[dst], where alpha[g] is the tanh gate
// computed from rows (gates[g].u, gates[g].v) of the input. Entries may share
// gates; every gate must be referenced by at least one entry.
struct GatedStructure {
    struct Gate {
        std::int32_t u;
        std::int32_t v;
    };
    struct Entry {
        std::int32_t dst;
        std::int32_t src;
        std::int32_t gate;
        Real coeff;
    };
    std::int64_t num_rows = 0;
    std::vector<Gate> gates;
    std::vector<Entry> entries;
};

class Tape;

// Lightweight handle into a Tape; valid while the tape is alive.
class Tensor {
  public:
    Tensor() = default;

    std::int64_t rows() const;
    std::int64_t cols() const;
    const Matrix& value() const;
    const Matrix& grad() const;
    bool valid() const { return tape_ != nullptr; }

  private:
    friend class Tape;
    Tensor(Tape* tape, std::int32_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::int32_t id_ = -1;
};

// Eager reverse-mode tape: values are computed when an op is recorded and the
// record order is a topological order, so backward is a single reverse sweep.
class Tape {
  public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Tensor constant(Matrix m);
    Tensor param(const Matrix& m);

    Tensor matmul(Tensor a, Tensor b);
    Tensor add(Tensor a, Tensor b);
    Tensor add_rowvec(Tensor a, Tensor bias);
    Tensor scale(Tensor a, Real factor);
    Tensor tanh(Tensor a);
    Tensor gelu(Tensor a);
    Tensor slice_rows(Tensor a, std::int64_t begin, std::int64_t end);
    Tensor sparse_matmul(const SparseRowMatrix& x, Tensor w);

    // Inverted dropout: kept entries scale by 1/(1-rate). rate == 0 is the
    // identity (returns the input handle unchanged).
    Tensor dropout(Tensor a, double rate, std::mt19937_64& rng);

    Tensor gated_aggregate(Tensor h, Tensor gate_a, Tensor gate_b, const GatedStructure& s, Real tau);

    // Mean over masked rows of -log softmax(logits)[label]; returns a 1x1 tensor.
    Tensor softmax_cross_entropy(Tensor logits,
                                 std::span<const std::int32_t> labels,
                                 std::span<const std::int32_t> mask_rows);

    // Zeroes all gradients, seeds d(loss)/d(loss) = 1 and sweeps the tape in
    // reverse. loss must be 1x1.
    void backward(Tensor loss);

    std::size_t size() const { return nodes_.size(); }

  private:
    friend class Tensor;

    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Tape&)> backward;
    };

    Tensor emplace(Matrix value, std::function<void(Tape&)> backward = {});
    Matrix& value_of(Tensor t) { return nodes_[static_cast<std::size_t>(t.id_)].value; }
    Matrix& grad_of(Tensor t) { return nodes_[static_cast<std::size_t>(t.id_)].grad; }
    static void require(bool cond, const char* msg);
    void check_finite(const Matrix& m, const char* where) const;

    std::vector<Node> nodes_;
};

// Exact GELU x * Phi(x) via erf and its derivative; shared with tests.
Real gelu_scalar(Real x);
Real gelu_derivative(Real x);

}  // namespace graphite
