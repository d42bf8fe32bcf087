#include "dspnet/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace dspnet::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long long n = std::stoll(v, &pos);
        if (pos != v.size() || n < 0) throw std::invalid_argument(v);
        return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected non-negative integer, got '" + v + "'");
    }
}

std::int64_t parse_i64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        long long n = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected integer, got '" + v + "'");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected number, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected boolean, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string part;
    while (std::getline(ss, part, ',')) {
        part = trim(part);
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        // synthetic generator
        {"gen.num_users", [](RunConfig& c, const std::string& k, const std::string& v) { c.gen.num_users = parse_size(k, v); }},
        {"gen.num_items", [](RunConfig& c, const std::string& k, const std::string& v) { c.gen.num_items = parse_size(k, v); }},
        {"gen.num_scenes", [](RunConfig& c, const std::string& k, const std::string& v) { c.gen.num_scenes = parse_size(k, v); }},
        {"gen.seq_len_min", [](RunConfig& c, const std::string& k, const std::string& v) { c.gen.seq_len_min = parse_size(k, v); }},
        {"gen.seq_len_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.gen.seq_len_max = parse_size(k, v); }},
        {"gen.interplay", [](RunConfig& c, const std::string& k, const std::string& v) { c.gen.interplay = parse_double(k, v); }},
        {"gen.misalignment_rate", [](RunConfig& c, const std::string& k, const std::string& v) { c.gen.misalignment_rate = parse_double(k, v); }},
        {"gen.well_separated", [](RunConfig& c, const std::string& k, const std::string& v) { c.gen.well_separated = parse_bool(k, v); }},
        {"gen.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.gen.seed = static_cast<std::uint64_t>(parse_i64(k, v)); }},
        // dataset preparation
        {"data.split_ts", [](RunConfig& c, const std::string& k, const std::string& v) { c.data.split_ts = parse_i64(k, v); }},
        {"data.min_hist", [](RunConfig& c, const std::string& k, const std::string& v) { c.data.min_hist = parse_size(k, v); }},
        {"data.min_future", [](RunConfig& c, const std::string& k, const std::string& v) { c.data.min_future = parse_size(k, v); }},
        {"data.val_frac", [](RunConfig& c, const std::string& k, const std::string& v) { c.data.val_frac = parse_double(k, v); }},
        {"data.test_frac", [](RunConfig& c, const std::string& k, const std::string& v) { c.data.test_frac = parse_double(k, v); }},
        {"data.num_negatives", [](RunConfig& c, const std::string& k, const std::string& v) { c.data.num_negatives = parse_size(k, v); }},
        {"data.popularity_negatives", [](RunConfig& c, const std::string& k, const std::string& v) { c.data.popularity_negatives = parse_bool(k, v); }},
        {"data.max_len", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.data.max_len = parse_size(k, v);
             c.encoder.max_len = c.data.max_len;
         }},
        {"data.label_mode", [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "next") c.data.label_mode = data::LabelMode::kNext;
             else if (v == "period") c.data.label_mode = data::LabelMode::kPeriod;
             else throw ConfigError(k + ": expected next|period, got '" + v + "'");
         }},
        {"data.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.data.seed = static_cast<std::uint64_t>(parse_i64(k, v)); }},
        // encoder
        {"model.item_dim", [](RunConfig& c, const std::string& k, const std::string& v) { c.encoder.item_dim = parse_size(k, v); }},
        {"model.scene_dim", [](RunConfig& c, const std::string& k, const std::string& v) { c.encoder.scene_dim = parse_size(k, v); }},
        {"model.num_layers", [](RunConfig& c, const std::string& k, const std::string& v) { c.encoder.num_layers = parse_size(k, v); }},
        {"model.num_heads", [](RunConfig& c, const std::string& k, const std::string& v) { c.encoder.num_heads = parse_size(k, v); }},
        {"model.hidden_mult", [](RunConfig& c, const std::string& k, const std::string& v) { c.encoder.hidden_mult = parse_size(k, v); }},
        {"model.fusion_mlp_layers", [](RunConfig& c, const std::string& k, const std::string& v) { c.encoder.fusion_mlp_layers = parse_size(k, v); }},
        {"model.selector_mode", [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "shared-linear") c.encoder.selector_mode = model::SelectorMode::kSharedLinear;
             else if (v == "separate-mlp") c.encoder.selector_mode = model::SelectorMode::kSeparateMlp;
             else throw ConfigError(k + ": expected shared-linear|separate-mlp, got '" + v + "'");
         }},
        {"model.fusion_mode", [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "concat") c.encoder.fusion_mode = model::FusionMode::kConcat;
             else if (v == "own-branch") c.encoder.fusion_mode = model::FusionMode::kOwnBranchOnly;
             else throw ConfigError(k + ": expected concat|own-branch, got '" + v + "'");
         }},
        {"model.variant", [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "dual") c.encoder.variant = model::Variant::kDual;
             else if (v == "one-to-one") c.encoder.variant = model::Variant::kOneToOne;
             else throw ConfigError(k + ": expected dual|one-to-one, got '" + v + "'");
         }},
        {"model.causal_attention", [](RunConfig& c, const std::string& k, const std::string& v) { c.encoder.causal_attention = parse_bool(k, v); }},
        {"model.disc_hidden", [](RunConfig& c, const std::string& k, const std::string& v) { c.encoder.disc_hidden = parse_size(k, v); }},
        // trainer
        {"train.learning_rate", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.learning_rate = parse_double(k, v); }},
        {"train.batch_size", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.batch_size = parse_size(k, v); }},
        {"train.max_epochs", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.max_epochs = parse_size(k, v); }},
        {"train.patience", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.patience = parse_size(k, v); }},
        {"train.lambda", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.lambda = parse_double(k, v); }},
        {"train.alpha", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.alpha = parse_double(k, v); }},
        {"train.beta", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.beta = parse_double(k, v); }},
        {"train.seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.seed = static_cast<std::uint64_t>(parse_i64(k, v)); }},
        {"train.disc_steps", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.disc_steps_per_gen_step = parse_size(k, v); }},
        {"train.disc_learning_rate", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.disc_learning_rate = parse_double(k, v); }},
        {"train.lr_decay", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.lr_decay = parse_double(k, v); }},
        {"train.restore_best", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.restore_best = parse_bool(k, v); }},
        {"train.enable_apr", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.enable_apr = parse_bool(k, v); }},
        {"train.enable_ccr", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.enable_ccr = parse_bool(k, v); }},
        // contrastive term
        {"ccr.tau_plus", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.ccr.tau_plus = parse_double(k, v); }},
        {"ccr.tau_minus", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.ccr.tau_minus = parse_double(k, v); }},
        {"ccr.num_positives", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.ccr.num_positives = parse_size(k, v); }},
        {"ccr.mask_ratio", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.ccr.mask_ratio = parse_double(k, v); }},
        {"ccr.use_mask", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.ccr.use_mask = parse_bool(k, v); }},
        {"ccr.use_reorder", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.ccr.use_reorder = parse_bool(k, v); }},
        // adversarial term
        {"apr.prior", [](RunConfig& c, const std::string& k, const std::string& v) { c.trainer.apr.prior = objectives::prior_from_string(v); }},
        {"apr.generator_loss", [](RunConfig& c, const std::string& k, const std::string& v) {
             if (v == "minimax") c.trainer.apr.generator_loss = objectives::GeneratorLossForm::kMinimax;
             else if (v == "non-saturating") c.trainer.apr.generator_loss = objectives::GeneratorLossForm::kNonSaturating;
             else throw ConfigError(k + ": expected minimax|non-saturating, got '" + v + "'");
         }},
        // evaluation
        {"eval.ks", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.eval.ks.clear();
             for (const auto& part : split_list(v)) c.eval.ks.push_back(parse_size(k, part));
             if (c.eval.ks.empty()) throw ConfigError(k + ": expected at least one k");
         }},
        {"eval.recall_denominator_min_k", [](RunConfig& c, const std::string& k, const std::string& v) { c.eval.recall_denominator_min_k = parse_bool(k, v); }},
        {"eval.full_vocab", [](RunConfig& c, const std::string& k, const std::string& v) { c.eval.full_vocab = parse_bool(k, v); }},
        {"eval.task", [](RunConfig& c, const std::string& k, const std::string& v) {
             eval::task_from_string(v);  // validates
             c.task = v;
         }},
        // paths and grids
        {"paths.data", [](RunConfig& c, const std::string&, const std::string& v) { c.data_path = v; }},
        {"paths.checkpoint", [](RunConfig& c, const std::string&, const std::string& v) { c.checkpoint_path = v; }},
        {"paths.report", [](RunConfig& c, const std::string&, const std::string& v) { c.report_path = v; }},
        {"paths.metrics", [](RunConfig& c, const std::string&, const std::string& v) { c.metrics_path = v; }},
        {"ablate.variants", [](RunConfig& c, const std::string& k, const std::string& v) {
             c.ablate_variants = split_list(v);
             if (c.ablate_variants.empty()) throw ConfigError(k + ": expected at least one variant");
         }},
    };
    return table;
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
    RunConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto it = setters().find(key);
        if (it == setters().end()) {
            throw ConfigError("unknown config key '" + key + "' (line " +
                              std::to_string(lineno) + ")");
        }
        it->second(cfg, key, value);
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    return parse_run_config(in);
}

}  // namespace dspnet::config
