#pragma once

// Optimization loop: Adam over the autograd graph, alternating adversarial
// updates, early stopping on validation Recall@10, and the ablation grid.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dspnet/data.hpp"
#include "dspnet/eval.hpp"
#include "dspnet/model.hpp"
#include "dspnet/objectives.hpp"

namespace dspnet::train {

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 100;
    std::size_t patience = 10;
    double lambda = 1.0;
    double alpha = 0.0;
    double beta = 0.0;
    std::uint64_t seed = 0;
    std::size_t disc_steps_per_gen_step = 1;
    // Discriminator step size; 0 means "same as learning_rate". A faster
    // discriminator keeps the adversarial prior signal sharp.
    double disc_learning_rate = 0.0;
    // Per-epoch multiplicative decay applied to both step sizes; 1 = constant.
    // Annealing damps the adversarial equilibrium jitter late in training.
    double lr_decay = 1.0;
    // Prior draws per discriminator step; 0 means "one per batch example".
    // More draws cut the noise in the discriminator's view of the prior.
    std::size_t apr_prior_samples = 0;
    // Stddev of Gaussian instance noise added to both discriminator inputs.
    // Smoothing both distributions keeps the discriminator from memorizing
    // the finite set of encoder outputs instead of comparing distributions.
    double apr_instance_noise = 0.0;
    // Independent jitter draws per encoder output in the adversarial terms;
    // averaging several draws is a lower-variance estimate of the smoothed
    // objective on the small per-batch set of encoder outputs.
    std::size_t apr_noise_samples = 1;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    bool enable_apr = false;
    bool enable_ccr = false;
    // Return the best-validation snapshot (default) or the final-epoch model.
    bool restore_best = true;
    objectives::CCRConfig ccr;
    objectives::APRConfig apr;

    void validate() const;
};

struct TrainReport {
    std::vector<objectives::LossBundle> epoch_losses;  // per-epoch batch means
    std::vector<double> val_recall10;
    std::size_t best_epoch = 0;  // index into the vectors above
    std::size_t epochs_run = 0;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
};

class Adam {
  public:
    Adam(std::vector<num::Var> params, double lr, double beta1, double beta2, double eps);
    void step();
    void set_lr(double lr) { lr_ = lr; }

  private:
    std::vector<num::Var> params_;
    std::vector<std::vector<double>> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
};

std::pair<model::DualModel, TrainReport> train(const data::Dataset& train_ds,
                                               const data::Dataset& val_ds,
                                               const model::EncoderConfig& enc_cfg,
                                               const TrainConfig& cfg);

// Named configuration variants for the ablation grid.
struct AblationRun {
    std::string name;
    model::EncoderConfig encoder;
    TrainConfig trainer;
};

std::vector<AblationRun> ablation_grid(const model::EncoderConfig& base_enc,
                                       const TrainConfig& base_train,
                                       const std::vector<std::string>& variant_names);

struct AblationResult {
    std::string name;
    eval::MetricsReport metrics;
    TrainReport report;
};

std::vector<AblationResult> run_ablation_grid(const data::Dataset& train_ds,
                                              const data::Dataset& val_ds,
                                              const data::Dataset& test_ds,
                                              const std::vector<AblationRun>& runs);

// Replace every scene id (inputs and candidates) with a single constant so the
// scene sequence carries no information; control arm for the interplay study.
data::Dataset blind_scenes(data::Dataset ds);

std::string report_to_json(const TrainReport& r);

}  // namespace dspnet::train
