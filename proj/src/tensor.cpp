#include "dspnet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "dspnet/kernels.hpp"

namespace dspnet::num {
namespace {

const auto& K() { return kernels::active(); }

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << "]";
    return os.str();
}

Var make_node(std::vector<std::size_t> shape, std::vector<double> values,
              std::vector<Var> parents) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(values);
    n->parents = std::move(parents);
    for (const auto& p : n->parents) {
        if (p->requires_grad) n->requires_grad = true;
    }
    return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (a->shape != b->shape) {
        throw DimensionError(std::string(op) + ": shape mismatch " +
                             shape_str(a->shape) + " vs " + shape_str(b->shape));
    }
}

double sigmoid_stable(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

constexpr double kInvSqrt2 = 0.7071067811865476;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kProbLo = 1e-12;
constexpr double kProbHi = 1.0 - 1e-12;

}  // namespace

// ---- leaves -------------------------------------------------------------

Var constant(std::vector<std::size_t> shape, std::vector<double> values) {
    if (shape_product(shape) != values.size()) {
        throw DimensionError("constant: shape " + shape_str(shape) + " does not match " +
                             std::to_string(values.size()) + " values");
    }
    return make_node(std::move(shape), std::move(values), {});
}

Var scalar_const(double v) { return constant({1}, {v}); }

Var zeros(std::vector<std::size_t> shape) {
    std::vector<double> v(shape_product(shape), 0.0);
    return make_node(std::move(shape), std::move(v), {});
}

Var parameter(std::string name, std::vector<std::size_t> shape, std::vector<double> values) {
    Var n = constant(std::move(shape), std::move(values));
    n->requires_grad = true;
    n->name = std::move(name);
    return n;
}

Var detach(const Var& x) {
    return make_node(x->shape, x->value, {});
}

// ---- arithmetic ---------------------------------------------------------

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    std::vector<double> out(a->size());
    K().add(a->size(), a->value.data(), b->value.data(), out.data());
    Var n = make_node(a->shape, std::move(out), {a, b});
    Node* np = n.get();
    Node *ap = a.get(), *bp = b.get();
    n->backward_fn = [np, ap, bp] {
        ap->ensure_grad();
        bp->ensure_grad();
        K().axpy(np->size(), 1.0, np->grad.data(), ap->grad.data());
        K().axpy(np->size(), 1.0, np->grad.data(), bp->grad.data());
    };
    return n;
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] - b->value[i];
    Var n = make_node(a->shape, std::move(out), {a, b});
    Node* np = n.get();
    Node *ap = a.get(), *bp = b.get();
    n->backward_fn = [np, ap, bp] {
        ap->ensure_grad();
        bp->ensure_grad();
        K().axpy(np->size(), 1.0, np->grad.data(), ap->grad.data());
        K().axpy(np->size(), -1.0, np->grad.data(), bp->grad.data());
    };
    return n;
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    std::vector<double> out(a->size());
    K().mul(a->size(), a->value.data(), b->value.data(), out.data());
    Var n = make_node(a->shape, std::move(out), {a, b});
    Node* np = n.get();
    Node *ap = a.get(), *bp = b.get();
    n->backward_fn = [np, ap, bp] {
        ap->ensure_grad();
        bp->ensure_grad();
        for (std::size_t i = 0; i < np->size(); ++i) {
            ap->grad[i] += np->grad[i] * bp->value[i];
            bp->grad[i] += np->grad[i] * ap->value[i];
        }
    };
    return n;
}

Var scale(const Var& a, double c) {
    std::vector<double> out = a->value;
    K().scale(out.size(), c, out.data());
    Var n = make_node(a->shape, std::move(out), {a});
    Node* np = n.get();
    Node* ap = a.get();
    n->backward_fn = [np, ap, c] {
        ap->ensure_grad();
        K().axpy(np->size(), c, np->grad.data(), ap->grad.data());
    };
    return n;
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var matmul(const Var& a, const Var& b) {
    if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[1] != b->shape[0]) {
        throw DimensionError("matmul: incompatible shapes " + shape_str(a->shape) +
                             " and " + shape_str(b->shape));
    }
    const std::size_t m = a->shape[0], k = a->shape[1], p = b->shape[1];
    std::vector<double> out(m * p, 0.0);
    K().matmul_acc(m, k, p, a->value.data(), b->value.data(), out.data());
    Var n = make_node({m, p}, std::move(out), {a, b});
    Node* np = n.get();
    Node *ap = a.get(), *bp = b.get();
    n->backward_fn = [np, ap, bp, m, k, p] {
        ap->ensure_grad();
        bp->ensure_grad();
        // dA = G * B^T ; dA[i,j] = <G[i,:], B[j,:]>
        for (std::size_t i = 0; i < m; ++i) {
            const double* grow = np->grad.data() + i * p;
            for (std::size_t j = 0; j < k; ++j) {
                ap->grad[i * k + j] += K().dot(p, grow, bp->value.data() + j * p);
            }
        }
        // dB = A^T * G ; dB[j,:] += A[i,j] * G[i,:]
        for (std::size_t i = 0; i < m; ++i) {
            const double* grow = np->grad.data() + i * p;
            for (std::size_t j = 0; j < k; ++j) {
                K().axpy(p, ap->value[i * k + j], grow, bp->grad.data() + j * p);
            }
        }
    };
    return n;
}

Var transpose(const Var& a) {
    if (a->shape.size() != 2) throw DimensionError("transpose: need 2-D tensor");
    const std::size_t m = a->shape[0], c = a->shape[1];
    std::vector<double> out(m * c);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < c; ++j) out[j * m + i] = a->value[i * c + j];
    }
    Var n = make_node({c, m}, std::move(out), {a});
    Node* np = n.get();
    Node* ap = a.get();
    n->backward_fn = [np, ap, m, c] {
        ap->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < c; ++j) ap->grad[i * c + j] += np->grad[j * m + i];
        }
    };
    return n;
}

Var add_rowvec(const Var& x, const Var& b) {
    if (x->shape.size() != 2 || b->size() != x->shape[1]) {
        throw DimensionError("add_rowvec: " + shape_str(x->shape) + " + " + shape_str(b->shape));
    }
    const std::size_t m = x->shape[0], c = x->shape[1];
    std::vector<double> out(m * c);
    for (std::size_t i = 0; i < m; ++i) {
        K().add(c, x->value.data() + i * c, b->value.data(), out.data() + i * c);
    }
    Var n = make_node(x->shape, std::move(out), {x, b});
    Node* np = n.get();
    Node *xp = x.get(), *bp = b.get();
    n->backward_fn = [np, xp, bp, m, c] {
        xp->ensure_grad();
        bp->ensure_grad();
        K().axpy(np->size(), 1.0, np->grad.data(), xp->grad.data());
        for (std::size_t i = 0; i < m; ++i) {
            K().axpy(c, 1.0, np->grad.data() + i * c, bp->grad.data());
        }
    };
    return n;
}

Var dot(const Var& a, const Var& b) {
    if (a->size() != b->size()) {
        throw DimensionError("dot: sizes " + std::to_string(a->size()) + " vs " +
                             std::to_string(b->size()));
    }
    const double v = K().dot(a->size(), a->value.data(), b->value.data());
    Var n = make_node({1}, {v}, {a, b});
    Node* np = n.get();
    Node *ap = a.get(), *bp = b.get();
    n->backward_fn = [np, ap, bp] {
        ap->ensure_grad();
        bp->ensure_grad();
        const double g = np->grad[0];
        K().axpy(ap->size(), g, bp->value.data(), ap->grad.data());
        K().axpy(ap->size(), g, ap->value.data(), bp->grad.data());
    };
    return n;
}

Var sum(const Var& a) {
    const double v = K().sum(a->size(), a->value.data());
    Var n = make_node({1}, {v}, {a});
    Node* np = n.get();
    Node* ap = a.get();
    n->backward_fn = [np, ap] {
        ap->ensure_grad();
        const double g = np->grad[0];
        for (std::size_t i = 0; i < ap->size(); ++i) ap->grad[i] += g;
    };
    return n;
}

Var mean(const Var& a) { return scale(sum(a), 1.0 / static_cast<double>(a->size())); }

// ---- shape ---------------------------------------------------------------

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no inputs");
    const std::size_t m = parts[0]->rows();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p->rows() != m) throw DimensionError("concat_cols: row count mismatch");
        total += p->cols();
    }
    std::vector<double> out(m * total);
    std::size_t off = 0;
    for (const auto& p : parts) {
        const std::size_t c = p->cols();
        for (std::size_t i = 0; i < m; ++i) {
            std::copy_n(p->value.data() + i * c, c, out.data() + i * total + off);
        }
        off += c;
    }
    Var n = make_node({m, total}, std::move(out), parts);
    Node* np = n.get();
    n->backward_fn = [np, m, total] {
        std::size_t off2 = 0;
        for (const auto& p : np->parents) {
            p->ensure_grad();
            const std::size_t c = p->cols();
            for (std::size_t i = 0; i < m; ++i) {
                K().axpy(c, 1.0, np->grad.data() + i * total + off2, p->grad.data() + i * c);
            }
            off2 += c;
        }
    };
    return n;
}

Var slice_cols(const Var& a, std::size_t offset, std::size_t width) {
    const std::size_t m = a->rows(), c = a->cols();
    if (offset + width > c) throw DimensionError("slice_cols: out of range");
    std::vector<double> out(m * width);
    for (std::size_t i = 0; i < m; ++i) {
        std::copy_n(a->value.data() + i * c + offset, width, out.data() + i * width);
    }
    Var n = make_node({m, width}, std::move(out), {a});
    Node* np = n.get();
    Node* ap = a.get();
    n->backward_fn = [np, ap, m, c, offset, width] {
        ap->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
            K().axpy(width, 1.0, np->grad.data() + i * width, ap->grad.data() + i * c + offset);
        }
    };
    return n;
}

Var slice_row(const Var& a, std::size_t row) {
    const std::size_t m = a->rows(), c = a->cols();
    if (row >= m) throw DimensionError("slice_row: out of range");
    std::vector<double> out(a->value.begin() + row * c, a->value.begin() + (row + 1) * c);
    Var n = make_node({1, c}, std::move(out), {a});
    Node* np = n.get();
    Node* ap = a.get();
    n->backward_fn = [np, ap, row, c] {
        ap->ensure_grad();
        K().axpy(c, 1.0, np->grad.data(), ap->grad.data() + row * c);
    };
    return n;
}

Var slice_rows(const Var& a, std::size_t offset, std::size_t count) {
    const std::size_t m = a->rows(), c = a->cols();
    if (offset + count > m) throw DimensionError("slice_rows: out of range");
    std::vector<double> out(a->value.begin() + offset * c,
                            a->value.begin() + (offset + count) * c);
    Var n = make_node({count, c}, std::move(out), {a});
    Node* np = n.get();
    Node* ap = a.get();
    n->backward_fn = [np, ap, offset, c] {
        ap->ensure_grad();
        K().axpy(np->size(), 1.0, np->grad.data(), ap->grad.data() + offset * c);
    };
    return n;
}

// ---- nonlinear -----------------------------------------------------------

Var sigmoid(const Var& a) {
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_stable(a->value[i]);
    Var n = make_node(a->shape, std::move(out), {a});
    Node* np = n.get();
    Node* ap = a.get();
    n->backward_fn = [np, ap] {
        ap->ensure_grad();
        for (std::size_t i = 0; i < np->size(); ++i) {
            const double s = np->value[i];
            ap->grad[i] += np->grad[i] * s * (1.0 - s);
        }
    };
    return n;
}

Var gelu(const Var& a) {
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double x = a->value[i];
        out[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
    }
    Var n = make_node(a->shape, std::move(out), {a});
    Node* np = n.get();
    Node* ap = a.get();
    n->backward_fn = [np, ap] {
        ap->ensure_grad();
        for (std::size_t i = 0; i < np->size(); ++i) {
            const double x = ap->value[i];
            const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
            ap->grad[i] += np->grad[i] * (cdf + x * pdf);
        }
    };
    return n;
}

Var log_op(const Var& a) {
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(a->value[i]);
    Var n = make_node(a->shape, std::move(out), {a});
    Node* np = n.get();
    Node* ap = a.get();
    n->backward_fn = [np, ap] {
        ap->ensure_grad();
        for (std::size_t i = 0; i < np->size(); ++i) {
            ap->grad[i] += np->grad[i] / ap->value[i];
        }
    };
    return n;
}

Var clamp(const Var& a, double lo, double hi) {
    std::vector<double> out(a->size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(a->value[i], lo, hi);
    Var n = make_node(a->shape, std::move(out), {a});
    Node* np = n.get();
    Node* ap = a.get();
    n->backward_fn = [np, ap, lo, hi] {
        ap->ensure_grad();
        for (std::size_t i = 0; i < np->size(); ++i) {
            const double x = ap->value[i];
            if (x > lo && x < hi) ap->grad[i] += np->grad[i];
        }
    };
    return n;
}

Var masked_softmax_rows(const Var& a, const std::vector<unsigned char>& allow,
                        double temperature) {
    if (temperature <= 0.0) throw ConfigError("softmax temperature must be positive");
    const std::size_t m = a->rows(), c = a->cols();
    if (allow.size() != c) throw DimensionError("masked_softmax_rows: mask width mismatch");
    bool any = false;
    for (auto v : allow) any = any || (v != 0);
    if (!any) throw DimensionError("masked_softmax_rows: empty mask");

    std::vector<double> out(m * c, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = a->value.data() + i * c;
        double mx = -1e300;
        for (std::size_t j = 0; j < c; ++j) {
            if (allow[j] && row[j] > mx) mx = row[j];
        }
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            if (allow[j]) {
                const double e = std::exp((row[j] - mx) / temperature);
                out[i * c + j] = e;
                z += e;
            }
        }
        K().scale(c, 1.0 / z, out.data() + i * c);
    }
    Var n = make_node(a->shape.size() == 2 ? a->shape : std::vector<std::size_t>{m, c},
                      std::move(out), {a});
    Node* np = n.get();
    Node* ap = a.get();
    n->backward_fn = [np, ap, m, c, temperature] {
        ap->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
            const double* p = np->value.data() + i * c;
            const double* g = np->grad.data() + i * c;
            const double inner = K().dot(c, p, g);
            for (std::size_t j = 0; j < c; ++j) {
                ap->grad[i * c + j] += p[j] * (g[j] - inner) / temperature;
            }
        }
    };
    return n;
}

Var softmax(const Var& a, double temperature) {
    if (a->size() == 0) throw DimensionError("softmax: empty input");
    const std::vector<unsigned char> allow(a->size(), 1);
    // Flatten to one row so any shape behaves as a vector.
    Var flat = a;
    if (a->shape.size() != 2 || a->shape[0] != 1) {
        flat = make_node({1, a->size()}, a->value, {a});
        Node* fp = flat.get();
        Node* ap = a.get();
        flat->backward_fn = [fp, ap] {
            ap->ensure_grad();
            K().axpy(fp->size(), 1.0, fp->grad.data(), ap->grad.data());
        };
    }
    return masked_softmax_rows(flat, allow, temperature);
}

Var layernorm(const Var& x, const Var& gain, const Var& bias, double eps) {
    const std::size_t m = x->rows(), c = x->cols();
    if (gain->size() != c || bias->size() != c) {
        throw DimensionError("layernorm: gain/bias width mismatch");
    }
    std::vector<double> out(m * c);
    std::vector<double> inv_std(m);
    std::vector<double> xhat(m * c);
    for (std::size_t i = 0; i < m; ++i) {
        const double* row = x->value.data() + i * c;
        const double mu = K().sum(c, row) / c;
        double var = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double d = row[j] - mu;
            var += d * d;
        }
        var /= c;
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[i] = is;
        for (std::size_t j = 0; j < c; ++j) {
            const double xh = (row[j] - mu) * is;
            xhat[i * c + j] = xh;
            out[i * c + j] = gain->value[j] * xh + bias->value[j];
        }
    }
    Var n = make_node({m, c}, std::move(out), {x, gain, bias});
    Node* np = n.get();
    Node *xp = x.get(), *gp = gain.get(), *bp = bias.get();
    auto xh = std::make_shared<std::vector<double>>(std::move(xhat));
    auto istd = std::make_shared<std::vector<double>>(std::move(inv_std));
    n->backward_fn = [np, xp, gp, bp, xh, istd, m, c] {
        xp->ensure_grad();
        gp->ensure_grad();
        bp->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
            const double* g = np->grad.data() + i * c;
            const double* h = xh->data() + i * c;
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                gp->grad[j] += g[j] * h[j];
                bp->grad[j] += g[j];
                const double dxh = g[j] * gp->value[j];
                sum_dxhat += dxh;
                sum_dxhat_xhat += dxh * h[j];
            }
            const double is = (*istd)[i];
            for (std::size_t j = 0; j < c; ++j) {
                const double dxh = g[j] * gp->value[j];
                xp->grad[i * c + j] +=
                    is * (dxh - sum_dxhat / c - h[j] * sum_dxhat_xhat / c);
            }
        }
    };
    return n;
}

Var embedding_lookup(const Var& table, const std::vector<int>& ids) {
    const std::size_t v = table->rows(), d = table->cols();
    std::vector<double> out(ids.size() * d);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= v) {
            throw DimensionError("embedding_lookup: id " + std::to_string(ids[i]) +
                                 " out of range for table with " + std::to_string(v) + " rows");
        }
        std::copy_n(table->value.data() + static_cast<std::size_t>(ids[i]) * d, d,
                    out.data() + i * d);
    }
    Var n = make_node({ids.size(), d}, std::move(out), {table});
    Node* np = n.get();
    Node* tp = table.get();
    auto ids_copy = std::make_shared<std::vector<int>>(ids);
    n->backward_fn = [np, tp, ids_copy, d] {
        tp->ensure_grad();
        for (std::size_t i = 0; i < ids_copy->size(); ++i) {
            K().axpy(d, 1.0, np->grad.data() + i * d,
                     tp->grad.data() + static_cast<std::size_t>((*ids_copy)[i]) * d);
        }
    };
    return n;
}

Var bce_mean(const Var& probs, const std::vector<double>& targets) {
    if (probs->size() != targets.size()) {
        throw DimensionError("bce_mean: " + std::to_string(probs->size()) + " probs vs " +
                             std::to_string(targets.size()) + " targets");
    }
    const std::size_t k = probs->size();
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double p = std::clamp(probs->value[i], kProbLo, kProbHi);
        acc -= targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p);
    }
    Var n = make_node({1}, {acc / k}, {probs});
    Node* np = n.get();
    Node* pp = probs.get();
    auto t = std::make_shared<std::vector<double>>(targets);
    n->backward_fn = [np, pp, t, k] {
        pp->ensure_grad();
        const double g = np->grad[0] / k;
        for (std::size_t i = 0; i < k; ++i) {
            const double p = pp->value[i];
            if (p <= kProbLo || p >= kProbHi) continue;  // clamped: constant w.r.t. p
            pp->grad[i] += g * (-(*t)[i] / p + (1.0 - (*t)[i]) / (1.0 - p));
        }
    };
    return n;
}

// ---- differentiation -----------------------------------------------------

void backward(const Var& loss) {
    if (!loss->is_scalar()) {
        throw DimensionError("backward: loss must be scalar, got " + shape_str(loss->shape));
    }
    // Iterative post-order DFS for the topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    // Interior nodes start each pass at zero so re-running backward on the
    // same graph is additive only at the leaves.
    for (Node* n : order) {
        if (n->backward_fn) n->zero_grad();
    }
    loss->ensure_grad();
    loss->grad[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->requires_grad) {
            n->ensure_grad();
            n->backward_fn();
        }
    }
}

void zero_grad(const std::vector<Var>& params) {
    for (const auto& p : params) p->zero_grad();
}

// ---- misc ----------------------------------------------------------------

bool all_finite(const Var& a) {
    for (double v : a->value) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Var random_normal(Rng& rng, std::vector<std::size_t> shape, double stddev) {
    std::vector<double> v(shape_product(shape));
    for (auto& x : v) x = rng.normal() * stddev;
    return constant(std::move(shape), std::move(v));
}

}  // namespace dspnet::num
