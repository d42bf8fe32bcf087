#pragma once

// Loss stack: candidate scoring + dual BCE prediction losses, sequence
// augmentation, conditionally weighted contrastive loss, adversarial prior
// regularization, and the weighted total.

#include <cstdint>
#include <string>
#include <vector>

#include "dspnet/errors.hpp"
#include "dspnet/model.hpp"
#include "dspnet/rng.hpp"
#include "dspnet/tensor.hpp"

namespace dspnet::objectives {

struct CCRConfig {
    double tau_plus = 1.0;
    double tau_minus = 0.07;
    std::size_t num_positives = 2;  // one masked view + one reordered view
    double mask_ratio = 0.3;
    bool use_mask = true;
    bool use_reorder = true;

    void validate() const;
};

enum class PriorKind { kStandardGaussian, kUniform, kLaplace, kLognormal, kMultiGaussian };
enum class GeneratorLossForm { kMinimax, kNonSaturating };

struct APRConfig {
    PriorKind prior = PriorKind::kStandardGaussian;
    GeneratorLossForm generator_loss = GeneratorLossForm::kNonSaturating;
};

struct LossBundle {
    double dsl_item = 0.0;
    double dsl_scene = 0.0;
    double apr = 0.0;
    double ccr = 0.0;
    double total = 0.0;
    double lambda = 1.0;
    double alpha = 0.0;
    double beta = 0.0;
};

PriorKind prior_from_string(const std::string& s);
std::string prior_to_string(PriorKind kind);

// sigma(o . e_k) over the candidate embedding rows.
num::Var score(const num::Var& o, const num::Var& candidate_embeddings);

// Mean binary cross-entropy with probability clamping.
num::Var dsl_loss(const num::Var& y_hat, const std::vector<double>& y);

// floor(ratio * L) uniformly chosen real positions set to MASK id 0, at least
// one real token survives.
std::vector<int> augment_mask(const std::vector<int>& ids, double mask_ratio, Rng& rng);

// Shuffle one contiguous window of size uniform in [2, L].
std::vector<int> augment_reorder(const std::vector<int>& ids, Rng& rng);

// Conditionally weighted contrastive loss on h (1 x d) vs positives/negatives.
num::Var ccr_loss(const num::Var& h, const std::vector<num::Var>& positives,
                  const std::vector<num::Var>& negatives, double tau_plus,
                  double tau_minus);

// Discriminator loss (to minimize): -(mean log D(prior) + mean log(1 - D(z))).
// Encoder outputs must be detached by the caller.
num::Var apr_discriminator_loss(const model::Mlp& disc,
                                const std::vector<num::Var>& prior_samples,
                                const std::vector<num::Var>& z_detached);

// Encoder-side term with the discriminator frozen.
num::Var apr_generator_term(const model::Mlp& disc, const std::vector<num::Var>& z_batch,
                            GeneratorLossForm form);

std::vector<num::Var> sample_prior(PriorKind kind, std::size_t dim, std::size_t n, Rng& rng);

// total = dsl_item + lambda*dsl_scene + alpha*apr + beta*ccr
LossBundle total_loss(double dsl_item, double dsl_scene, double apr, double ccr,
                      double lambda, double alpha, double beta);

}  // namespace dspnet::objectives
