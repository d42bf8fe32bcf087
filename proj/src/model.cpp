#include "dspnet/model.hpp"

#include <cmath>
#include <unordered_set>

namespace dspnet::model {

using num::Var;

void EncoderConfig::validate() const {
    if (item_vocab < 2 || scene_vocab < 2) {
        throw ConfigError("encoder: vocab sizes must include PAD and UNK");
    }
    if (num_heads == 0 || item_dim % num_heads != 0 || scene_dim % num_heads != 0) {
        throw ConfigError("encoder: dims must be divisible by num_heads");
    }
    if (num_layers < 1) throw ConfigError("encoder: num_layers must be >= 1");
    if (max_len < 1) throw ConfigError("encoder: max_len must be >= 1");
    if (hidden_mult < 1) throw ConfigError("encoder: hidden_mult must be >= 1");
}

namespace {

// Embedding/position tables get O(1) rows; weight matrices are fan-in scaled
// so activations keep unit-order variance through the network at init.
constexpr double kTableStd = 0.5;

Var normal_param(Rng& rng, const std::string& name, std::vector<std::size_t> shape,
                 double stddev) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal() * stddev;
    return num::parameter(name, std::move(shape), std::move(v));
}

// {fan_in, fan_out} weight matrix for the row-vector x*W convention. Columns
// are rescaled to exactly `gain` norm so every output coordinate starts at the
// same scale instead of drawing a chi-squared column-norm lottery; layers
// feeding a GELU pass gain > 1 to compensate the activation's contraction.
Var fanin_param(Rng& rng, const std::string& name, std::vector<std::size_t> shape,
                double gain = 1.0) {
    const std::size_t fan_in = shape.front();
    const std::size_t fan_out = shape.back();
    std::vector<double> v(fan_in * fan_out);
    for (auto& x : v) x = rng.normal();
    for (std::size_t j = 0; j < fan_out; ++j) {
        double norm2 = 0.0;
        for (std::size_t i = 0; i < fan_in; ++i) norm2 += v[i * fan_out + j] * v[i * fan_out + j];
        const double inv = norm2 > 0.0 ? gain / std::sqrt(norm2) : 0.0;
        for (std::size_t i = 0; i < fan_in; ++i) v[i * fan_out + j] *= inv;
    }
    return num::parameter(name, std::move(shape), std::move(v));
}

// Var(gelu(x)) is roughly a quarter of Var(x) for unit-scale inputs.
constexpr double kGeluGain = 2.0;

Var const_param(const std::string& name, std::vector<std::size_t> shape, double fill) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    return num::parameter(name, std::move(shape), std::vector<double>(n, fill));
}

BranchParams init_branch(Rng& rng, const std::string& prefix, std::size_t dim,
                         const EncoderConfig& cfg, std::vector<Var>& sink) {
    BranchParams b;
    b.pos_emb = normal_param(rng, prefix + ".pos_emb", {cfg.max_len, dim}, kTableStd);
    sink.push_back(b.pos_emb);
    const std::size_t hd = dim / cfg.num_heads;
    const std::size_t ff = dim * cfg.hidden_mult;
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        const std::string lp = prefix + ".l" + std::to_string(l);
        BranchParams::Layer layer;
        for (std::size_t h = 0; h < cfg.num_heads; ++h) {
            const std::string hp = lp + ".h" + std::to_string(h);
            layer.wq.push_back(fanin_param(rng, hp + ".wq", {dim, hd}));
            layer.wk.push_back(fanin_param(rng, hp + ".wk", {dim, hd}));
            layer.wv.push_back(fanin_param(rng, hp + ".wv", {dim, hd}));
        }
        layer.wo = fanin_param(rng, lp + ".wo", {dim, dim});
        layer.bo = const_param(lp + ".bo", {1, dim}, 0.0);
        layer.ln1_gain = const_param(lp + ".ln1_gain", {1, dim}, 1.0);
        layer.ln1_bias = const_param(lp + ".ln1_bias", {1, dim}, 0.0);
        layer.w1 = fanin_param(rng, lp + ".w1", {dim, ff}, kGeluGain);
        layer.b1 = const_param(lp + ".b1", {1, ff}, 0.0);
        layer.w2 = fanin_param(rng, lp + ".w2", {ff, dim});
        layer.b2 = const_param(lp + ".b2", {1, dim}, 0.0);
        layer.ln2_gain = const_param(lp + ".ln2_gain", {1, dim}, 1.0);
        layer.ln2_bias = const_param(lp + ".ln2_bias", {1, dim}, 0.0);
        for (const auto& heads : {layer.wq, layer.wk, layer.wv}) {
            for (const auto& p : heads) sink.push_back(p);
        }
        for (const auto& p : {layer.wo, layer.bo, layer.ln1_gain, layer.ln1_bias, layer.w1,
                              layer.b1, layer.w2, layer.b2, layer.ln2_gain, layer.ln2_bias}) {
            sink.push_back(p);
        }
        b.layers.push_back(std::move(layer));
    }
    return b;
}

Mlp init_mlp(Rng& rng, const std::string& prefix, const std::vector<std::size_t>& widths,
             std::vector<Var>& sink) {
    Mlp m;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const bool feeds_gelu = i + 2 < widths.size();
        m.weights.push_back(fanin_param(rng, prefix + ".w" + std::to_string(i),
                                        {widths[i], widths[i + 1]},
                                        feeds_gelu ? kGeluGain : 1.0));
        m.biases.push_back(const_param(prefix + ".b" + std::to_string(i), {1, widths[i + 1]}, 0.0));
        sink.push_back(m.weights.back());
        sink.push_back(m.biases.back());
    }
    return m;
}

// widths of an n-layer fusion MLP: in, in, ..., out
std::vector<std::size_t> fusion_widths(std::size_t in, std::size_t out, std::size_t layers) {
    std::vector<std::size_t> w(layers + 1, in);
    if (layers > 0) w.back() = out;
    return w;
}

std::size_t last_real_position(const std::vector<unsigned char>& mask) {
    for (std::size_t i = mask.size(); i > 0; --i) {
        if (mask[i - 1]) return i - 1;
    }
    throw DimensionError("encode: all-pad input");
}

}  // namespace

DualModel DualModel::init(const EncoderConfig& config, Rng& rng) {
    config.validate();
    DualModel m;
    m.config = config;
    auto& enc = m.encoder_params;

    m.item_emb = normal_param(rng, "item_emb", {config.item_vocab, config.item_dim}, kTableStd);
    m.scene_emb = normal_param(rng, "scene_emb", {config.scene_vocab, config.scene_dim}, kTableStd);
    enc.push_back(m.item_emb);
    enc.push_back(m.scene_emb);

    m.item_branch = init_branch(rng, "item", config.item_dim, config, enc);
    if (config.variant == Variant::kDual) {
        m.scene_branch = init_branch(rng, "scene", config.scene_dim, config, enc);
    } else {
        m.onetoone_proj_w = fanin_param(rng, "onetoone.proj_w",
                                        {config.item_dim + config.scene_dim, config.item_dim});
        m.onetoone_proj_b = const_param("onetoone.proj_b", {1, config.item_dim}, 0.0);
        enc.push_back(m.onetoone_proj_w);
        enc.push_back(m.onetoone_proj_b);
    }

    const std::size_t hs = config.scene_repr_dim();
    const std::size_t hv = config.item_repr_dim();
    const std::size_t fuse_in_s = config.fusion_mode == FusionMode::kConcat ? hs + hv : hs;
    const std::size_t fuse_in_v = config.fusion_mode == FusionMode::kConcat ? hs + hv : hv;
    m.fuse_scene = init_mlp(rng, "g_scene",
                            fusion_widths(fuse_in_s, config.scene_dim, config.fusion_mlp_layers),
                            enc);
    m.fuse_item = init_mlp(rng, "g_item",
                           fusion_widths(fuse_in_v, config.item_dim, config.fusion_mlp_layers),
                           enc);

    // passthrough fusion hands the raw branch outputs to the selector
    const std::size_t zs = config.fusion_mlp_layers == 0 ? hs : config.scene_dim;
    const std::size_t zv = config.fusion_mlp_layers == 0 ? hv : config.item_dim;
    const std::size_t sel_in = zs + zv;
    if (config.selector_mode == SelectorMode::kSharedLinear) {
        m.sel_shared_w = fanin_param(rng, "sel.shared_w", {sel_in, sel_in});
        m.sel_shared_b = const_param("sel.shared_b", {1, sel_in}, 0.0);
        enc.push_back(m.sel_shared_w);
        enc.push_back(m.sel_shared_b);
        m.sel_scene = init_mlp(rng, "r_scene", {sel_in, config.scene_dim}, enc);
        m.sel_item = init_mlp(rng, "r_item", {sel_in, config.item_dim}, enc);
    } else {
        m.sel_scene = init_mlp(rng, "r_scene", {sel_in, sel_in, config.scene_dim}, enc);
        m.sel_item = init_mlp(rng, "r_item", {sel_in, sel_in, config.item_dim}, enc);
    }

    // sized by the actual z widths (passthrough fusion changes them); the
    // discriminators see [z, z^2] so first and second moments are linearly
    // separable features
    m.disc_scene = init_mlp(rng, "d_scene", {2 * zs, config.disc_hidden, 1}, m.disc_params);
    m.disc_item = init_mlp(rng, "d_item", {2 * zv, config.disc_hidden, 1}, m.disc_params);

    m.all_params = m.encoder_params;
    m.all_params.insert(m.all_params.end(), m.disc_params.begin(), m.disc_params.end());
    std::unordered_set<std::string> names;
    for (const auto& p : m.all_params) {
        if (!names.insert(p->name).second) {
            throw ConfigError("duplicate parameter name: " + p->name);
        }
    }
    return m;
}

num::Var mlp_forward(const Mlp& mlp, const num::Var& x, bool frozen) {
    Var out = x;
    for (std::size_t i = 0; i < mlp.weights.size(); ++i) {
        const Var w = frozen ? num::detach(mlp.weights[i]) : mlp.weights[i];
        const Var b = frozen ? num::detach(mlp.biases[i]) : mlp.biases[i];
        out = num::add_rowvec(num::matmul(out, w), b);
        if (i + 1 < mlp.weights.size()) out = num::gelu(out);
    }
    return out;
}

namespace {

Var run_transformer(const BranchParams& branch, Var x,
                    const std::vector<unsigned char>& mask, const EncoderConfig& cfg) {
    const std::size_t len = x->rows();
    const std::size_t dim = x->cols();
    const std::size_t hd = dim / cfg.num_heads;
    const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));

    x = num::add(x, num::slice_rows(branch.pos_emb, 0, len));

    // Causal masking (optional) as an additive score penalty; padded columns
    // are excluded by the softmax mask itself.
    Var causal;
    if (cfg.causal_attention) {
        std::vector<double> c(len * len, 0.0);
        for (std::size_t i = 0; i < len; ++i) {
            for (std::size_t j = i + 1; j < len; ++j) c[i * len + j] = -1e30;
        }
        causal = num::constant({len, len}, std::move(c));
    }

    for (const auto& layer : branch.layers) {
        std::vector<Var> heads;
        for (std::size_t h = 0; h < cfg.num_heads; ++h) {
            Var q = num::matmul(x, layer.wq[h]);
            Var k = num::matmul(x, layer.wk[h]);
            Var v = num::matmul(x, layer.wv[h]);
            Var scores = num::scale(num::matmul(q, num::transpose(k)), inv_sqrt_hd);
            if (causal) scores = num::add(scores, causal);
            Var probs = num::masked_softmax_rows(scores, mask);
            heads.push_back(num::matmul(probs, v));
        }
        Var att = num::add_rowvec(num::matmul(num::concat_cols(heads), layer.wo), layer.bo);
        x = num::layernorm(num::add(x, att), layer.ln1_gain, layer.ln1_bias);
        Var ff = num::gelu(num::add_rowvec(num::matmul(x, layer.w1), layer.b1));
        ff = num::add_rowvec(num::matmul(ff, layer.w2), layer.b2);
        x = num::layernorm(num::add(x, ff), layer.ln2_gain, layer.ln2_bias);
    }
    return num::slice_row(x, last_real_position(mask));
}

}  // namespace

num::Var encode_branch(const DualModel& m, const std::vector<int>& ids,
                       const std::vector<unsigned char>& mask, bool item_branch) {
    if (ids.size() != mask.size()) throw DimensionError("encode_branch: ids/mask length mismatch");
    if (ids.size() > m.config.max_len) throw DimensionError("encode_branch: sequence too long");
    const Var& table = item_branch ? m.item_emb : m.scene_emb;
    const BranchParams& branch = item_branch ? m.item_branch : m.scene_branch;
    Var x = num::embedding_lookup(table, ids);
    return run_transformer(branch, x, mask, m.config);
}

num::Var encode_one_to_one(const DualModel& m, const std::vector<int>& item_ids,
                           const std::vector<int>& scene_ids,
                           const std::vector<unsigned char>& mask) {
    if (item_ids.size() != scene_ids.size()) {
        throw DimensionError("encode_one_to_one: item/scene id length mismatch");
    }
    Var iv = num::embedding_lookup(m.item_emb, item_ids);
    Var sv = num::embedding_lookup(m.scene_emb, scene_ids);
    Var x = num::concat_cols({iv, sv});
    x = num::add_rowvec(num::matmul(x, m.onetoone_proj_w), m.onetoone_proj_b);
    return run_transformer(m.item_branch, x, mask, m.config);
}

std::pair<num::Var, num::Var> fuse(const DualModel& m, const num::Var& h_scene,
                                   const num::Var& h_item) {
    if (m.config.fusion_mlp_layers == 0) {
        // "w/o MLP": the concatenation only reaches prediction via the selector.
        return {h_scene, h_item};
    }
    Var in_s, in_v;
    if (m.config.fusion_mode == FusionMode::kConcat) {
        in_s = num::concat_cols({h_scene, h_item});
        in_v = in_s;
    } else {
        in_s = h_scene;
        in_v = h_item;
    }
    return {mlp_forward(m.fuse_scene, in_s), mlp_forward(m.fuse_item, in_v)};
}

std::pair<num::Var, num::Var> select(const DualModel& m, const num::Var& z_scene,
                                     const num::Var& z_item) {
    Var zcat = num::concat_cols({z_scene, z_item});
    if (m.config.selector_mode == SelectorMode::kSharedLinear) {
        Var shared = num::add_rowvec(num::matmul(zcat, m.sel_shared_w), m.sel_shared_b);
        return {mlp_forward(m.sel_scene, shared), mlp_forward(m.sel_item, shared)};
    }
    return {mlp_forward(m.sel_scene, zcat), mlp_forward(m.sel_item, zcat)};
}

ForwardOutputs forward(const DualModel& m, const std::vector<int>& item_ids,
                       const std::vector<int>& scene_ids,
                       const std::vector<unsigned char>& mask) {
    ForwardOutputs out;
    if (m.config.variant == Variant::kDual) {
        out.h_scene = encode_branch(m, scene_ids, mask, /*item_branch=*/false);
        out.h_item = encode_branch(m, item_ids, mask, /*item_branch=*/true);
    } else {
        out.h_item = encode_one_to_one(m, item_ids, scene_ids, mask);
        out.h_scene = out.h_item;
    }
    std::tie(out.z_scene, out.z_item) = fuse(m, out.h_scene, out.h_item);
    std::tie(out.o_scene, out.o_item) = select(m, out.z_scene, out.z_item);
    return out;
}

num::Var discriminate(const Mlp& disc, const num::Var& z, bool frozen) {
    Var features = num::concat_cols({z, num::mul(z, z)});
    return num::sigmoid(mlp_forward(disc, features, frozen));
}

}  // namespace dspnet::model
