#pragma once

// Minimal dense-tensor reverse-mode autodiff. Tensors are row-major f64 with
// at most two axes; the graph is rebuilt eagerly on every forward pass and
// backward() walks it once in reverse topological order. Inner loops go
// through the kernels layer.

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dspnet/errors.hpp"
#include "dspnet/rng.hpp"

namespace dspnet::num {

class Node;
using Var = std::shared_ptr<Node>;

class Node {
  public:
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;  // allocated lazily, same size as value
    bool requires_grad = false;
    std::string name;  // non-empty for named parameters

    std::vector<Var> parents;
    std::function<void()> backward_fn;  // accumulates this->grad into parents

    std::size_t size() const { return value.size(); }
    std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? (shape.empty() ? 1 : shape[0]) : shape[1]; }
    bool is_scalar() const { return value.size() == 1; }

    double scalar() const {
        if (!is_scalar()) throw DimensionError("expected scalar tensor");
        return value[0];
    }

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    }
    void zero_grad() { grad.assign(value.size(), 0.0); }
};

// ---- leaves -------------------------------------------------------------

Var constant(std::vector<std::size_t> shape, std::vector<double> values);
Var scalar_const(double v);
Var zeros(std::vector<std::size_t> shape);
// Trainable leaf (requires_grad = true, carries a name).
Var parameter(std::string name, std::vector<std::size_t> shape, std::vector<double> values);
// Value copy that blocks gradient flow.
Var detach(const Var& x);

// ---- arithmetic ---------------------------------------------------------

Var add(const Var& a, const Var& b);        // same shape
Var sub(const Var& a, const Var& b);        // same shape
Var mul(const Var& a, const Var& b);        // elementwise, same shape
Var scale(const Var& a, double c);
Var neg(const Var& a);
Var matmul(const Var& a, const Var& b);     // [m x k] * [k x n]
Var transpose(const Var& a);
Var add_rowvec(const Var& x, const Var& b); // [m x n] + broadcast [1 x n]
Var dot(const Var& a, const Var& b);        // flat inner product -> scalar
Var sum(const Var& a);                      // -> scalar
Var mean(const Var& a);                     // -> scalar

// ---- shape ---------------------------------------------------------------

Var concat_cols(const std::vector<Var>& parts);  // same row count
Var slice_cols(const Var& a, std::size_t offset, std::size_t width);
Var slice_row(const Var& a, std::size_t row);    // -> [1 x n]
Var slice_rows(const Var& a, std::size_t offset, std::size_t count);

// ---- nonlinear -----------------------------------------------------------

Var sigmoid(const Var& a);  // elementwise
Var gelu(const Var& a);     // exact (erf-based), elementwise
Var log_op(const Var& a);
// Pass-through gradient inside [lo, hi], zero outside.
Var clamp(const Var& a, double lo, double hi);
// Row-wise softmax over columns where allow[j] != 0; disallowed columns get
// probability 0. allow must have at least one nonzero entry.
Var masked_softmax_rows(const Var& a, const std::vector<unsigned char>& allow,
                        double temperature = 1.0);
// Vector softmax with temperature (all columns allowed). temperature > 0.
Var softmax(const Var& a, double temperature = 1.0);
// Row-wise layer normalization with learned gain/bias (width n) and
// epsilon added to the variance.
Var layernorm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
// Gather rows of table by id; backward scatter-adds into the table.
Var embedding_lookup(const Var& table, const std::vector<int>& ids);
// Mean binary cross-entropy over probabilities clamped to
// [1e-12, 1 - 1e-12]; targets are constants in {0, 1}.
Var bce_mean(const Var& probs, const std::vector<double>& targets);

// ---- differentiation -----------------------------------------------------

// Accumulates gradients of `loss` (scalar) into every reachable node's grad.
// Does not zero anything; call zero_grad on persistent parameters first.
void backward(const Var& loss);
void zero_grad(const std::vector<Var>& params);

// ---- misc ----------------------------------------------------------------

bool all_finite(const Var& a);
Var random_normal(Rng& rng, std::vector<std::size_t> shape, double stddev);

}  // namespace dspnet::num
