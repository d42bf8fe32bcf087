#include "dspnet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "dspnet/model.hpp"
#include "dspnet/objectives.hpp"
#include "dspnet/rng.hpp"
#include "dspnet/tensor.hpp"

namespace dspnet::gradcheck {

using num::Var;

namespace {

// Scalar graph rebuilt from the current leaf values on every call.
using Builder = std::function<Var()>;

struct Case {
    std::string name;
    std::vector<Var> checked;  // leaves whose gradient is compared against FD
    Builder f;
};

Var randn(Rng& rng, std::vector<std::size_t> shape, double scale = 0.5) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal() * scale;
    return num::parameter("", std::move(shape), std::move(v));
}

Var rand_const(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal();
    return num::constant({n}, std::move(v));
}

// Reduce an arbitrary-shape output to a scalar through a fixed random
// functional so every output coordinate contributes to the gradient.
Builder through(Rng& rng, std::size_t out_size, std::function<Var()> op) {
    Var r = rand_const(rng, out_size);
    return [r, op = std::move(op)]() { return num::dot(op(), r); };
}

double check_case(const Case& c, const SuiteOptions& opts) {
    const double h = opts.fd_step;
    const double flip = c.name == opts.inject_sign_flip ? -1.0 : 1.0;
    num::zero_grad(c.checked);
    num::backward(c.f());
    double worst = 0.0;
    for (const auto& leaf : c.checked) {
        for (std::size_t j = 0; j < leaf->value.size(); ++j) {
            const double saved = leaf->value[j];
            leaf->value[j] = saved + h;
            const double fp = c.f()->scalar();
            leaf->value[j] = saved - h;
            const double fm = c.f()->scalar();
            leaf->value[j] = saved;
            const double fd = (fp - fm) / (2.0 * h);
            const double an = flip * leaf->grad[j];
            const double rel =
                std::abs(an - fd) / std::max(1e-6, std::abs(an) + std::abs(fd));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

model::Mlp make_mlp(Rng& rng, std::size_t in, std::size_t hidden, std::size_t out) {
    model::Mlp mlp;
    mlp.weights = {randn(rng, {in, hidden}, 0.3), randn(rng, {hidden, out}, 0.3)};
    mlp.biases = {randn(rng, {1, hidden}, 0.1), randn(rng, {1, out}, 0.1)};
    return mlp;
}

std::vector<Var> mlp_params(const model::Mlp& mlp) {
    std::vector<Var> p = mlp.weights;
    p.insert(p.end(), mlp.biases.begin(), mlp.biases.end());
    return p;
}

std::vector<Case> build_cases(Rng& rng) {
    std::vector<Case> cases;

    {
        Var a = randn(rng, {3, 4}), b = randn(rng, {3, 4});
        cases.push_back({"add", {a, b}, through(rng, 12, [a, b] { return num::add(a, b); })});
    }
    {
        Var a = randn(rng, {3, 4}), b = randn(rng, {3, 4});
        cases.push_back({"sub", {a, b}, through(rng, 12, [a, b] { return num::sub(a, b); })});
    }
    {
        Var a = randn(rng, {3, 4}), b = randn(rng, {3, 4});
        cases.push_back({"mul", {a, b}, through(rng, 12, [a, b] { return num::mul(a, b); })});
    }
    {
        Var a = randn(rng, {2, 5});
        cases.push_back({"scale", {a}, through(rng, 10, [a] { return num::scale(a, -1.7); })});
    }
    {
        Var a = randn(rng, {2, 5});
        cases.push_back({"neg", {a}, through(rng, 10, [a] { return num::neg(a); })});
    }
    {
        Var a = randn(rng, {2, 3}), b = randn(rng, {3, 4});
        cases.push_back(
            {"matmul", {a, b}, through(rng, 8, [a, b] { return num::matmul(a, b); })});
    }
    {
        Var a = randn(rng, {3, 4});
        cases.push_back(
            {"transpose", {a}, through(rng, 12, [a] { return num::transpose(a); })});
    }
    {
        Var x = randn(rng, {3, 4}), b = randn(rng, {1, 4});
        cases.push_back(
            {"add_rowvec", {x, b}, through(rng, 12, [x, b] { return num::add_rowvec(x, b); })});
    }
    {
        Var a = randn(rng, {1, 6}), b = randn(rng, {1, 6});
        cases.push_back({"dot", {a, b}, [a, b] { return num::dot(a, b); }});
    }
    {
        Var a = randn(rng, {3, 4});
        cases.push_back({"sum", {a}, [a] { return num::sum(a); }});
    }
    {
        Var a = randn(rng, {3, 4});
        cases.push_back({"mean", {a}, [a] { return num::mean(a); }});
    }
    {
        Var a = randn(rng, {2, 3}), b = randn(rng, {2, 2});
        cases.push_back({"concat_cols", {a, b},
                         through(rng, 10, [a, b] { return num::concat_cols({a, b}); })});
    }
    {
        Var a = randn(rng, {2, 6});
        cases.push_back(
            {"slice_cols", {a}, through(rng, 6, [a] { return num::slice_cols(a, 1, 3); })});
    }
    {
        Var a = randn(rng, {4, 3});
        cases.push_back(
            {"slice_row", {a}, through(rng, 3, [a] { return num::slice_row(a, 2); })});
    }
    {
        Var a = randn(rng, {5, 3});
        cases.push_back(
            {"slice_rows", {a}, through(rng, 6, [a] { return num::slice_rows(a, 1, 2); })});
    }
    {
        Var a = randn(rng, {2, 5});
        cases.push_back({"sigmoid", {a}, through(rng, 10, [a] { return num::sigmoid(a); })});
    }
    {
        Var a = randn(rng, {2, 5});
        cases.push_back({"gelu", {a}, through(rng, 10, [a] { return num::gelu(a); })});
    }
    {
        std::vector<double> v(8);
        for (auto& x : v) x = 0.3 + rng.next_double();
        Var a = num::parameter("", {2, 4}, std::move(v));
        cases.push_back({"log", {a}, through(rng, 8, [a] { return num::log_op(a); })});
    }
    {
        // values kept away from the clamp edges so FD sees a smooth region
        std::vector<double> v(8);
        for (auto& x : v) {
            x = rng.normal();
            if (std::abs(std::abs(x) - 1.0) < 0.05) x *= 0.8;
        }
        Var a = num::parameter("", {2, 4}, std::move(v));
        cases.push_back(
            {"clamp", {a}, through(rng, 8, [a] { return num::clamp(a, -1.0, 1.0); })});
    }
    {
        Var a = randn(rng, {2, 5}, 1.0);
        std::vector<unsigned char> allow = {1, 0, 1, 1, 0};
        cases.push_back({"masked_softmax_rows", {a}, through(rng, 10, [a, allow] {
                             return num::masked_softmax_rows(a, allow, 0.7);
                         })});
    }
    {
        Var a = randn(rng, {1, 6}, 1.0);
        cases.push_back(
            {"softmax", {a}, through(rng, 6, [a] { return num::softmax(a, 0.5); })});
    }
    {
        Var x = randn(rng, {3, 4}, 1.0);
        Var g = randn(rng, {1, 4}, 0.3);
        Var b = randn(rng, {1, 4}, 0.3);
        for (std::size_t j = 0; j < 4; ++j) g->value[j] += 1.0;
        cases.push_back({"layernorm", {x, g, b},
                         through(rng, 12, [x, g, b] { return num::layernorm(x, g, b); })});
    }
    {
        Var table = randn(rng, {5, 3});
        std::vector<int> ids = {1, 3, 3, 0};
        cases.push_back({"embedding_lookup", {table}, through(rng, 12, [table, ids] {
                             return num::embedding_lookup(table, ids);
                         })});
    }
    {
        Var logits = randn(rng, {1, 6}, 1.0);
        std::vector<double> targets = {1, 0, 0, 1, 0, 1};
        cases.push_back({"bce_mean", {logits}, [logits, targets] {
                             return num::bce_mean(num::sigmoid(logits), targets);
                         }});
    }
    {
        Var o = randn(rng, {1, 4});
        Var cands = randn(rng, {5, 4});
        std::vector<double> targets = {1, 0, 1, 0, 0};
        cases.push_back({"dsl_loss", {o, cands}, [o, cands, targets] {
                             return objectives::dsl_loss(objectives::score(o, cands), targets);
                         }});
    }
    {
        // moderate magnitudes: tau_minus=0.07 divides the scores, and saturated
        // softmax curvature would otherwise dominate the FD estimate
        Var h = randn(rng, {1, 5}, 0.2);
        std::vector<Var> pos = {randn(rng, {1, 5}, 0.2), randn(rng, {1, 5}, 0.2)};
        std::vector<Var> neg = {randn(rng, {1, 5}, 0.2), randn(rng, {1, 5}, 0.2),
                                randn(rng, {1, 5}, 0.2)};
        std::vector<Var> checked = {h};
        checked.insert(checked.end(), pos.begin(), pos.end());
        checked.insert(checked.end(), neg.begin(), neg.end());
        cases.push_back({"ccr_loss", checked, [h, pos, neg] {
                             return objectives::ccr_loss(h, pos, neg, 1.0, 0.07);
                         }});
    }
    {
        // discriminator update: gradient flows into D's parameters only
        model::Mlp disc = make_mlp(rng, 8, 6, 1);  // input is [z, z^2]
        std::vector<Var> prior = {randn(rng, {1, 4}), randn(rng, {1, 4})};
        std::vector<Var> z = {randn(rng, {1, 4}), randn(rng, {1, 4})};
        for (auto& zi : z) zi = num::detach(zi);
        cases.push_back({"apr_discriminator_loss", mlp_params(disc), [disc, prior, z] {
                             return objectives::apr_discriminator_loss(disc, prior, z);
                         }});
    }
    {
        // generator side: D frozen, gradient flows into z only
        model::Mlp disc = make_mlp(rng, 8, 6, 1);
        std::vector<Var> z = {randn(rng, {1, 4}), randn(rng, {1, 4})};
        cases.push_back({"apr_generator_term", z, [disc, z] {
                             return objectives::apr_generator_term(
                                 disc, z, objectives::GeneratorLossForm::kNonSaturating);
                         }});
        model::Mlp disc2 = make_mlp(rng, 8, 6, 1);
        std::vector<Var> z2 = {randn(rng, {1, 4}), randn(rng, {1, 4})};
        cases.push_back({"apr_generator_term_minimax", z2, [disc2, z2] {
                             return objectives::apr_generator_term(
                                 disc2, z2, objectives::GeneratorLossForm::kMinimax);
                         }});
    }
    {
        // weighted sum of all loss terms through one graph
        Var o = randn(rng, {1, 4});
        Var cands = randn(rng, {3, 4});
        std::vector<double> targets = {1, 0, 0};
        Var h = randn(rng, {1, 4});
        std::vector<Var> pos = {randn(rng, {1, 4})};
        std::vector<Var> neg = {randn(rng, {1, 4}), randn(rng, {1, 4})};
        model::Mlp disc = make_mlp(rng, 8, 5, 1);
        std::vector<Var> z = {randn(rng, {1, 4})};
        std::vector<Var> checked = {o, cands, h, z[0]};
        checked.insert(checked.end(), pos.begin(), pos.end());
        checked.insert(checked.end(), neg.begin(), neg.end());
        cases.push_back({"total_loss", checked, [o, cands, targets, h, pos, neg, disc, z] {
                             Var dsl = objectives::dsl_loss(objectives::score(o, cands), targets);
                             Var ccr = objectives::ccr_loss(h, pos, neg, 1.0, 0.07);
                             Var apr = objectives::apr_generator_term(
                                 disc, z, objectives::GeneratorLossForm::kNonSaturating);
                             return num::add(num::add(dsl, num::scale(apr, 0.3)),
                                             num::scale(ccr, 0.2));
                         }});
    }
    return cases;
}

}  // namespace

std::vector<OpResult> run_suite(const SuiteOptions& opts) {
    Rng rng(opts.seed ^ 0x67636b);
    std::vector<OpResult> results;
    for (std::size_t inst = 0; inst < opts.instances_per_op; ++inst) {
        Rng inst_rng = rng.fork(inst);
        std::vector<Case> cases = build_cases(inst_rng);
        if (results.empty()) {
            for (const auto& c : cases) results.push_back({c.name, 0.0, false});
        }
        for (std::size_t i = 0; i < cases.size(); ++i) {
            results[i].worst_rel_err =
                std::max(results[i].worst_rel_err, check_case(cases[i], opts));
        }
    }
    for (auto& r : results) r.pass = r.worst_rel_err < opts.tolerance;
    return results;
}

}  // namespace dspnet::gradcheck
