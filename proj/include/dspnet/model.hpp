#pragma once

// DSPnet forward path: embedding tables, the two transformer branch encoders,
// concat-then-MLP sequence feature enhancement, feature selection heads, the
// prior discriminators, and the one-to-one ablation encoder.

#include <cstdint>
#include <string>
#include <vector>

#include "dspnet/errors.hpp"
#include "dspnet/rng.hpp"
#include "dspnet/tensor.hpp"

namespace dspnet::model {

enum class Variant { kDual, kOneToOne };
enum class SelectorMode { kSharedLinear, kSeparateMlp };
enum class FusionMode { kConcat, kOwnBranchOnly };  // OwnBranchOnly = "w/o concat" ablation

struct EncoderConfig {
    std::size_t item_vocab = 0;   // incl. PAD and UNK rows
    std::size_t scene_vocab = 0;
    std::size_t item_dim = 16;
    std::size_t scene_dim = 8;
    std::size_t num_layers = 2;
    std::size_t num_heads = 2;
    std::size_t hidden_mult = 2;       // position-wise feed-forward width multiplier
    std::size_t fusion_mlp_layers = 2; // 0 = passthrough ("w/o MLP" ablation)
    SelectorMode selector_mode = SelectorMode::kSharedLinear;
    FusionMode fusion_mode = FusionMode::kConcat;
    std::size_t max_len = 50;
    Variant variant = Variant::kDual;
    bool causal_attention = false;
    std::size_t disc_hidden = 16;

    void validate() const;
    // Width of the branch representations that enter fusion.
    std::size_t item_repr_dim() const { return item_dim; }
    std::size_t scene_repr_dim() const {
        return variant == Variant::kOneToOne ? item_dim : scene_dim;
    }
};

// One transformer branch's parameters.
struct BranchParams {
    num::Var pos_emb;  // max_len x dim
    struct Layer {
        std::vector<num::Var> wq, wk, wv;  // per head: dim x head_dim
        num::Var wo, bo;                   // dim x dim, dim
        num::Var ln1_gain, ln1_bias;
        num::Var w1, b1, w2, b2;           // feed-forward
        num::Var ln2_gain, ln2_bias;
    };
    std::vector<Layer> layers;
};

struct Mlp {
    // affine chain; gelu between layers, none after the last
    std::vector<num::Var> weights;  // in x out each
    std::vector<num::Var> biases;
};

struct DualModel {
    EncoderConfig config;
    num::Var item_emb;    // item_vocab x item_dim, row 0 = PAD/MASK
    num::Var scene_emb;   // scene_vocab x scene_dim
    BranchParams item_branch;
    BranchParams scene_branch;
    num::Var onetoone_proj_w, onetoone_proj_b;  // (item_dim+scene_dim) -> item_dim
    Mlp fuse_scene, fuse_item;        // g_S, g_V
    num::Var sel_shared_w, sel_shared_b;        // shared-linear first projection
    Mlp sel_scene, sel_item;          // r_S, r_V output heads
    Mlp disc_scene, disc_item;        // D_S, D_V (sigmoid applied at use site)

    std::vector<num::Var> all_params;          // uniquely named
    std::vector<num::Var> encoder_params;      // everything except discriminators
    std::vector<num::Var> disc_params;

    static DualModel init(const EncoderConfig& config, Rng& rng);
};

struct ForwardOutputs {
    num::Var h_scene, h_item;  // 1 x repr_dim
    num::Var z_scene, z_item;  // 1 x scene_dim / 1 x item_dim
    num::Var o_scene, o_item;
};

// Single branch transformer encoder; h = output at the last real position.
num::Var encode_branch(const DualModel& m, const std::vector<int>& ids,
                       const std::vector<unsigned char>& mask, bool item_branch);

// One-to-one ablation: per-position concat of item+scene embeddings projected
// into item_dim, one transformer (the item branch's stack); both downstream
// branches receive the same h.
num::Var encode_one_to_one(const DualModel& m, const std::vector<int>& item_ids,
                           const std::vector<int>& scene_ids,
                           const std::vector<unsigned char>& mask);

std::pair<num::Var, num::Var> fuse(const DualModel& m, const num::Var& h_scene,
                                   const num::Var& h_item);
std::pair<num::Var, num::Var> select(const DualModel& m, const num::Var& z_scene,
                                     const num::Var& z_item);

// Full forward for one example (dispatches on variant).
ForwardOutputs forward(const DualModel& m, const std::vector<int>& item_ids,
                       const std::vector<int>& scene_ids,
                       const std::vector<unsigned char>& mask);

// MLP helper used by fusion/selector/discriminator paths.
num::Var mlp_forward(const Mlp& mlp, const num::Var& x, bool frozen = false);

// Discriminator probability in (0,1); frozen detaches its parameters so no
// gradient reaches them.
num::Var discriminate(const Mlp& disc, const num::Var& z, bool frozen);

}  // namespace dspnet::model
