#include "dspnet/objectives.hpp"

#include <algorithm>
#include <cmath>

namespace dspnet::objectives {

using num::Var;

void CCRConfig::validate() const {
    if (tau_plus <= 0.0 || tau_minus <= 0.0) {
        throw ConfigError("ccr: temperatures must be positive");
    }
    if (num_positives < 1) throw ConfigError("ccr: num_positives must be >= 1");
    if (mask_ratio < 0.0 || mask_ratio >= 1.0) {
        throw ConfigError("ccr: mask_ratio must be in [0,1)");
    }
    if (!use_mask && !use_reorder) throw ConfigError("ccr: no augmentation enabled");
}

PriorKind prior_from_string(const std::string& s) {
    if (s == "standard-gaussian") return PriorKind::kStandardGaussian;
    if (s == "uniform") return PriorKind::kUniform;
    if (s == "laplace") return PriorKind::kLaplace;
    if (s == "lognormal") return PriorKind::kLognormal;
    if (s == "multi-gaussian") return PriorKind::kMultiGaussian;
    throw ConfigError("unknown prior kind: " + s);
}

std::string prior_to_string(PriorKind kind) {
    switch (kind) {
        case PriorKind::kStandardGaussian: return "standard-gaussian";
        case PriorKind::kUniform: return "uniform";
        case PriorKind::kLaplace: return "laplace";
        case PriorKind::kLognormal: return "lognormal";
        case PriorKind::kMultiGaussian: return "multi-gaussian";
    }
    throw ConfigError("unknown prior kind");
}

num::Var score(const num::Var& o, const num::Var& candidate_embeddings) {
    if (o->cols() != candidate_embeddings->cols()) {
        throw DimensionError("score: width " + std::to_string(o->cols()) +
                             " vs embedding width " +
                             std::to_string(candidate_embeddings->cols()));
    }
    // logits[k] = o . e_k
    return num::sigmoid(num::matmul(o, num::transpose(candidate_embeddings)));
}

num::Var dsl_loss(const num::Var& y_hat, const std::vector<double>& y) {
    for (double v : y) {
        if (v != 0.0 && v != 1.0) throw ConfigError("dsl_loss: labels must be 0/1");
    }
    return num::bce_mean(y_hat, y);
}

std::vector<int> augment_mask(const std::vector<int>& ids, double mask_ratio, Rng& rng) {
    std::vector<std::size_t> real;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] != 0) real.push_back(i);
    }
    if (real.empty()) throw ConfigError("augment_mask: no real tokens");
    std::size_t count = static_cast<std::size_t>(mask_ratio * static_cast<double>(real.size()));
    count = std::min(count, real.size() - 1);  // at least one survivor
    std::vector<int> out = ids;
    if (count == 0) return out;
    for (std::size_t pick : rng.sample_without_replacement(real.size(), count)) {
        out[real[pick]] = 0;
    }
    return out;
}

std::vector<int> augment_reorder(const std::vector<int>& ids, Rng& rng) {
    std::vector<std::size_t> real;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] != 0) real.push_back(i);
    }
    const std::size_t n = real.size();
    if (n < 2) return ids;
    const std::size_t size = 2 + rng.uniform(n - 1);         // uniform in [2, n]
    const std::size_t start = rng.uniform(n - size + 1);     // window placement
    std::vector<int> window;
    for (std::size_t i = 0; i < size; ++i) window.push_back(ids[real[start + i]]);
    rng.shuffle(window.begin(), window.end());
    std::vector<int> out = ids;
    for (std::size_t i = 0; i < size; ++i) out[real[start + i]] = window[i];
    return out;
}

num::Var ccr_loss(const num::Var& h, const std::vector<num::Var>& positives,
                  const std::vector<num::Var>& negatives, double tau_plus,
                  double tau_minus) {
    if (positives.empty() || negatives.empty()) {
        throw ConfigError("ccr_loss: need at least one positive and one negative");
    }
    if (tau_plus <= 0.0 || tau_minus <= 0.0) {
        throw ConfigError("ccr_loss: temperatures must be positive");
    }
    // s(h, x) = h^T x / tau; weights are softmax over -s (positives) / +s
    // (negatives) and stay inside the differentiated graph.
    std::vector<Var> pos_scores, neg_scores;
    for (const auto& p : positives) pos_scores.push_back(num::scale(num::dot(h, p), 1.0 / tau_plus));
    for (const auto& q : negatives) neg_scores.push_back(num::scale(num::dot(h, q), 1.0 / tau_minus));
    Var s_pos = num::concat_cols(pos_scores);  // 1 x N+
    Var s_neg = num::concat_cols(neg_scores);  // 1 x N-
    Var w_pos = num::softmax(num::neg(s_pos));
    Var w_neg = num::softmax(s_neg);
    Var pos_term = num::neg(num::sum(num::mul(w_pos, s_pos)));
    Var neg_term = num::sum(num::mul(w_neg, s_neg));
    return num::add(pos_term, neg_term);
}

num::Var apr_discriminator_loss(const model::Mlp& disc,
                                const std::vector<num::Var>& prior_samples,
                                const std::vector<num::Var>& z_detached) {
    if (prior_samples.empty() || z_detached.empty()) {
        throw ConfigError("apr_discriminator_loss: empty batch");
    }
    // Each side is normalized by its own count, so the prior can be sampled
    // more densely than the encoder batch to cut prior-side estimation noise.
    Var real = num::scalar_const(0.0);
    for (const auto& zp : prior_samples) {
        Var d = num::sum(model::discriminate(disc, zp, false));
        real = num::add(real, num::log_op(num::clamp(d, 1e-12, 1.0)));
    }
    Var fake = num::scalar_const(0.0);
    for (const auto& ze : z_detached) {
        Var d = num::sum(model::discriminate(disc, ze, false));
        fake = num::add(fake, num::log_op(num::clamp(
                                  num::sub(num::scalar_const(1.0), d), 1e-12, 1.0)));
    }
    return num::neg(
        num::add(num::scale(real, 1.0 / static_cast<double>(prior_samples.size())),
                 num::scale(fake, 1.0 / static_cast<double>(z_detached.size()))));
}

num::Var apr_generator_term(const model::Mlp& disc, const std::vector<num::Var>& z_batch,
                            GeneratorLossForm form) {
    if (z_batch.empty()) throw ConfigError("apr_generator_term: empty batch");
    Var acc = num::scalar_const(0.0);
    for (const auto& z : z_batch) {
        Var d = num::sum(model::discriminate(disc, z, /*frozen=*/true));
        if (form == GeneratorLossForm::kMinimax) {
            acc = num::add(acc, num::log_op(num::clamp(
                                    num::sub(num::scalar_const(1.0), d), 1e-12, 1.0)));
        } else {
            acc = num::sub(acc, num::log_op(num::clamp(d, 1e-12, 1.0)));
        }
    }
    return num::scale(acc, 1.0 / static_cast<double>(z_batch.size()));
}

std::vector<num::Var> sample_prior(PriorKind kind, std::size_t dim, std::size_t n, Rng& rng) {
    std::vector<Var> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v(dim);
        for (auto& x : v) {
            switch (kind) {
                case PriorKind::kStandardGaussian: x = rng.normal(); break;
                case PriorKind::kUniform: x = rng.next_double(); break;
                case PriorKind::kLaplace: x = rng.laplace(); break;
                case PriorKind::kLognormal: x = std::exp(rng.normal()); break;
                case PriorKind::kMultiGaussian:
                    x = rng.next_double() < 0.5 ? rng.normal() : 3.0 + rng.normal();
                    break;
            }
        }
        out.push_back(num::constant({1, dim}, std::move(v)));
    }
    return out;
}

LossBundle total_loss(double dsl_item, double dsl_scene, double apr, double ccr,
                      double lambda, double alpha, double beta) {
    for (auto [v, name] : {std::pair{dsl_item, "dsl_item"}, {dsl_scene, "dsl_scene"},
                           {apr, "apr"}, {ccr, "ccr"}}) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("total_loss: non-finite term ") + name);
        }
    }
    LossBundle b;
    b.dsl_item = dsl_item;
    b.dsl_scene = dsl_scene;
    b.apr = apr;
    b.ccr = ccr;
    b.lambda = lambda;
    b.alpha = alpha;
    b.beta = beta;
    b.total = dsl_item + lambda * dsl_scene + alpha * apr + beta * ccr;
    return b;
}

}  // namespace dspnet::objectives
