#include "dspnet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <json.hpp>

namespace dspnet::train {

using num::Var;
using objectives::LossBundle;

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw ConfigError("train: learning_rate must be positive");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
    if (patience < 1) throw ConfigError("train: patience must be >= 1");
    if (disc_steps_per_gen_step < 1) throw ConfigError("train: disc steps must be >= 1");
    if (lr_decay <= 0.0 || lr_decay > 1.0) {
        throw ConfigError("train: lr_decay must be in (0, 1]");
    }
    if (enable_ccr) ccr.validate();
}

Adam::Adam(std::vector<num::Var> params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& p = *params_[i];
        if (p.grad.size() != p.value.size()) continue;  // unreachable this step
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double g = p.grad[j];
            m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
            v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
            const double mhat = m_[i][j] / bc1;
            const double vhat = v_[i][j] / bc2;
            p.value[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

namespace {

struct Snapshot {
    std::vector<std::vector<double>> values;
};

Snapshot snapshot(const model::DualModel& m) {
    Snapshot s;
    for (const auto& p : m.all_params) s.values.push_back(p->value);
    return s;
}

void restore(model::DualModel& m, const Snapshot& s) {
    for (std::size_t i = 0; i < m.all_params.size(); ++i) {
        m.all_params[i]->value = s.values[i];
    }
}

// Views re-encoded from augmented id sequences; one mask view and one reorder
// view when both are enabled and two positives are requested.
std::vector<std::vector<int>> augmented_views(const std::vector<int>& ids,
                                              const objectives::CCRConfig& ccr, Rng& rng) {
    std::vector<std::vector<int>> views;
    for (std::size_t i = 0; i < ccr.num_positives; ++i) {
        const bool pick_mask =
            ccr.use_mask && (!ccr.use_reorder || i % 2 == 0);
        if (pick_mask) {
            views.push_back(objectives::augment_mask(ids, ccr.mask_ratio, rng));
        } else {
            views.push_back(objectives::augment_reorder(ids, rng));
        }
    }
    return views;
}

Var encode_view(const model::DualModel& m, const data::LabeledExample& ex,
                const std::vector<int>& view_ids, bool item_branch) {
    if (m.config.variant == model::Variant::kDual) {
        return model::encode_branch(m, view_ids, ex.mask, item_branch);
    }
    return item_branch ? model::encode_one_to_one(m, view_ids, ex.scene_ids, ex.mask)
                       : model::encode_one_to_one(m, ex.item_ids, view_ids, ex.mask);
}

}  // namespace

std::pair<model::DualModel, TrainReport> train(const data::Dataset& train_ds,
                                               const data::Dataset& val_ds,
                                               const model::EncoderConfig& enc_cfg,
                                               const TrainConfig& cfg) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();

    Rng init_rng(cfg.seed);
    model::DualModel m = model::DualModel::init(enc_cfg, init_rng);
    Adam opt_enc(m.encoder_params, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                 cfg.adam_eps);
    const double disc_lr =
        cfg.disc_learning_rate > 0.0 ? cfg.disc_learning_rate : cfg.learning_rate;
    Adam opt_disc(m.disc_params, disc_lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);

    Rng master(cfg.seed ^ 0x7261696eULL);
    TrainReport report;
    report.seed = cfg.seed;

    const std::size_t n = train_ds.examples.size();
    if (n == 0) throw ConfigError("train: empty training set");

    double best_val = -1.0;
    Snapshot best = snapshot(m);
    std::size_t stale = 0;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        if (cfg.lr_decay < 1.0) {
            // Anneal the encoder/generator only: its step size sets the
            // adversarial equilibrium jitter, while the discriminator must
            // stay adaptive to keep pointing at the prior throughout.
            const double decay = std::pow(cfg.lr_decay, static_cast<double>(epoch));
            opt_enc.set_lr(cfg.learning_rate * decay);
        }
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        Rng shuffle_rng = master.fork(1000 + epoch);
        shuffle_rng.shuffle(order.begin(), order.end());

        LossBundle epoch_mean;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t bsz = std::min(cfg.batch_size, n - start);
            std::vector<const data::LabeledExample*> batch(bsz);
            for (std::size_t b = 0; b < bsz; ++b) {
                batch[b] = &train_ds.examples[order[start + b]];
            }

            std::vector<model::ForwardOutputs> outs(bsz);
            Var dsl_item_sum = num::scalar_const(0.0);
            Var dsl_scene_sum = num::scalar_const(0.0);
            for (std::size_t b = 0; b < bsz; ++b) {
                const auto& ex = *batch[b];
                outs[b] = model::forward(m, ex.item_ids, ex.scene_ids, ex.mask);
                Var probs_i = objectives::score(
                    outs[b].o_item, num::embedding_lookup(m.item_emb, ex.item_candidates));
                Var probs_s = objectives::score(
                    outs[b].o_scene, num::embedding_lookup(m.scene_emb, ex.scene_candidates));
                dsl_item_sum = num::add(dsl_item_sum,
                                        objectives::dsl_loss(probs_i, ex.item_labels));
                dsl_scene_sum = num::add(dsl_scene_sum,
                                         objectives::dsl_loss(probs_s, ex.scene_labels));
            }
            Var dsl_item = num::scale(dsl_item_sum, 1.0 / static_cast<double>(bsz));
            Var dsl_scene = num::scale(dsl_scene_sum, 1.0 / static_cast<double>(bsz));

            Var ccr_term;  // null unless CCR is active on this batch
            if (cfg.enable_ccr && bsz >= 2) {
                Var acc = num::scalar_const(0.0);
                for (std::size_t b = 0; b < bsz; ++b) {
                    const auto& ex = *batch[b];
                    const std::size_t gi = order[start + b];
                    for (const bool item_branch : {false, true}) {
                        Rng aug_rng = master.fork((epoch << 24) ^ (gi << 1) ^
                                                  (item_branch ? 1u : 0u));
                        const auto& ids = item_branch ? ex.item_ids : ex.scene_ids;
                        std::vector<Var> positives;
                        for (const auto& view : augmented_views(ids, cfg.ccr, aug_rng)) {
                            positives.push_back(encode_view(m, ex, view, item_branch));
                        }
                        std::vector<Var> negatives;
                        for (std::size_t j = 0; j < bsz; ++j) {
                            if (j == b) continue;
                            negatives.push_back(item_branch ? outs[j].h_item
                                                            : outs[j].h_scene);
                        }
                        const Var& h = item_branch ? outs[b].h_item : outs[b].h_scene;
                        acc = num::add(acc, objectives::ccr_loss(h, positives, negatives,
                                                                 cfg.ccr.tau_plus,
                                                                 cfg.ccr.tau_minus));
                    }
                }
                ccr_term = num::scale(acc, 1.0 / static_cast<double>(bsz));
            }

            Var apr_term;  // generator-side term
            if (cfg.enable_apr) {
                Rng prior_rng = master.fork(0x4b0 + epoch * 10000 + start);
                const std::size_t n_prior =
                    cfg.apr_prior_samples > 0 ? cfg.apr_prior_samples : bsz;
                auto jitter = [&](const Var& v) {
                    if (cfg.apr_instance_noise <= 0.0) return v;
                    std::vector<double> noise(v->cols());
                    for (auto& x : noise) x = prior_rng.normal() * cfg.apr_instance_noise;
                    return num::add(v, num::constant({1, v->cols()}, std::move(noise)));
                };
                const std::size_t jitter_draws =
                    cfg.apr_instance_noise > 0.0 ? std::max<std::size_t>(cfg.apr_noise_samples, 1)
                                                 : 1;
                // Discriminator updates on detached z vs fresh prior samples.
                for (std::size_t step = 0; step < cfg.disc_steps_per_gen_step; ++step) {
                    std::vector<Var> zs_det, zv_det;
                    for (const auto& o : outs) {
                        for (std::size_t k = 0; k < jitter_draws; ++k) {
                            zs_det.push_back(jitter(num::detach(o.z_scene)));
                            zv_det.push_back(jitter(num::detach(o.z_item)));
                        }
                    }
                    auto jittered_prior = [&](std::size_t dim) {
                        auto prior = objectives::sample_prior(cfg.apr.prior, dim, n_prior,
                                                              prior_rng);
                        for (auto& pz : prior) pz = jitter(pz);
                        return prior;
                    };
                    Var d_loss = num::add(
                        objectives::apr_discriminator_loss(
                            m.disc_scene, jittered_prior(outs[0].z_scene->cols()), zs_det),
                        objectives::apr_discriminator_loss(
                            m.disc_item, jittered_prior(outs[0].z_item->cols()), zv_det));
                    num::zero_grad(m.disc_params);
                    num::backward(d_loss);
                    opt_disc.step();
                }
                std::vector<Var> zs, zv;
                for (const auto& o : outs) {
                    for (std::size_t k = 0; k < jitter_draws; ++k) {
                        zs.push_back(jitter(o.z_scene));
                        zv.push_back(jitter(o.z_item));
                    }
                }
                apr_term = num::add(
                    objectives::apr_generator_term(m.disc_scene, zs, cfg.apr.generator_loss),
                    objectives::apr_generator_term(m.disc_item, zv, cfg.apr.generator_loss));
            }

            Var total = num::add(dsl_item, num::scale(dsl_scene, cfg.lambda));
            if (apr_term) total = num::add(total, num::scale(apr_term, cfg.alpha));
            if (ccr_term) total = num::add(total, num::scale(ccr_term, cfg.beta));

            LossBundle bundle;
            try {
                bundle = objectives::total_loss(
                    dsl_item->scalar(), dsl_scene->scalar(),
                    apr_term ? apr_term->scalar() : 0.0,
                    ccr_term ? ccr_term->scalar() : 0.0, cfg.lambda, cfg.alpha, cfg.beta);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " (epoch " +
                                   std::to_string(epoch) + ", batch " +
                                   std::to_string(start / cfg.batch_size) + ")");
            }

            num::zero_grad(m.encoder_params);
            num::backward(total);
            opt_enc.step();

            epoch_mean.dsl_item += bundle.dsl_item;
            epoch_mean.dsl_scene += bundle.dsl_scene;
            epoch_mean.apr += bundle.apr;
            epoch_mean.ccr += bundle.ccr;
            epoch_mean.total += bundle.total;
            ++batches;
        }
        const double inv = 1.0 / static_cast<double>(batches);
        epoch_mean.dsl_item *= inv;
        epoch_mean.dsl_scene *= inv;
        epoch_mean.apr *= inv;
        epoch_mean.ccr *= inv;
        epoch_mean.total *= inv;
        epoch_mean.lambda = cfg.lambda;
        epoch_mean.alpha = cfg.alpha;
        epoch_mean.beta = cfg.beta;
        report.epoch_losses.push_back(epoch_mean);

        eval::EvalOptions vopts;
        vopts.ks = {10};
        const double val =
            eval::evaluate(m, val_ds, eval::Task::kNextItem, vopts).overall.recall[10];
        report.val_recall10.push_back(val);
        report.epochs_run = epoch + 1;

        if (val > best_val) {
            best_val = val;
            best = snapshot(m);
            report.best_epoch = epoch;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }

    if (cfg.restore_best) restore(m, best);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return {std::move(m), std::move(report)};
}

data::Dataset blind_scenes(data::Dataset ds) {
    for (auto& ex : ds.examples) {
        for (std::size_t i = 0; i < ex.scene_ids.size(); ++i) {
            if (ex.mask[i]) ex.scene_ids[i] = 1;
        }
    }
    return ds;
}

std::vector<AblationRun> ablation_grid(const model::EncoderConfig& base_enc,
                                       const TrainConfig& base_train,
                                       const std::vector<std::string>& variant_names) {
    std::vector<AblationRun> runs;
    for (const auto& name : variant_names) {
        AblationRun run{name, base_enc, base_train};
        if (name == "full") {
            // base as-is
        } else if (name == "wo_apr") {
            run.trainer.enable_apr = false;
            run.trainer.alpha = 0.0;
        } else if (name == "wo_ccr") {
            run.trainer.enable_ccr = false;
            run.trainer.beta = 0.0;
        } else if (name == "wo_both") {
            run.trainer.enable_apr = false;
            run.trainer.alpha = 0.0;
            run.trainer.enable_ccr = false;
            run.trainer.beta = 0.0;
        } else if (name == "one-to-one") {
            run.encoder.variant = model::Variant::kOneToOne;
        } else if (name == "wo_concat") {
            run.encoder.fusion_mode = model::FusionMode::kOwnBranchOnly;
        } else if (name == "wo_mlp") {
            run.encoder.fusion_mlp_layers = 0;
        } else if (name == "mlp1" || name == "mlp2" || name == "mlp3") {
            run.encoder.fusion_mlp_layers = static_cast<std::size_t>(name.back() - '0');
        } else {
            throw ConfigError("unknown ablation variant: " + name);
        }
        runs.push_back(std::move(run));
    }
    return runs;
}

std::vector<AblationResult> run_ablation_grid(const data::Dataset& train_ds,
                                              const data::Dataset& val_ds,
                                              const data::Dataset& test_ds,
                                              const std::vector<AblationRun>& runs) {
    std::vector<AblationResult> results;
    for (const auto& run : runs) {
        auto [trained, report] = train(train_ds, val_ds, run.encoder, run.trainer);
        AblationResult res;
        res.name = run.name;
        res.metrics = eval::evaluate(trained, test_ds, eval::Task::kNextItem);
        res.report = std::move(report);
        results.push_back(std::move(res));
    }
    return results;
}

std::string report_to_json(const TrainReport& r) {
    nlohmann::json j;
    j["seed"] = r.seed;
    j["best_epoch"] = r.best_epoch;
    j["epochs_run"] = r.epochs_run;
    j["val_recall10"] = r.val_recall10;
    nlohmann::json losses = nlohmann::json::array();
    for (const auto& b : r.epoch_losses) {
        losses.push_back({{"dsl_item", b.dsl_item},
                          {"dsl_scene", b.dsl_scene},
                          {"apr", b.apr},
                          {"ccr", b.ccr},
                          {"total", b.total}});
    }
    j["epoch_losses"] = std::move(losses);
    j["timing"] = {{"wall_seconds", r.wall_seconds}};
    return j.dump(2);
}

}  // namespace dspnet::train
