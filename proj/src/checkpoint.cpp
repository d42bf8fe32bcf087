#include "dspnet/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dspnet::checkpoint {

using nlohmann::json;
using model::DualModel;
using model::EncoderConfig;

namespace {

json config_json(const EncoderConfig& c) {
    return json{
        {"item_vocab", c.item_vocab},
        {"scene_vocab", c.scene_vocab},
        {"item_dim", c.item_dim},
        {"scene_dim", c.scene_dim},
        {"num_layers", c.num_layers},
        {"num_heads", c.num_heads},
        {"hidden_mult", c.hidden_mult},
        {"fusion_mlp_layers", c.fusion_mlp_layers},
        {"selector_mode",
         c.selector_mode == model::SelectorMode::kSharedLinear ? "shared-linear"
                                                               : "separate-mlp"},
        {"fusion_mode",
         c.fusion_mode == model::FusionMode::kConcat ? "concat" : "own-branch"},
        {"max_len", c.max_len},
        {"variant", c.variant == model::Variant::kDual ? "dual" : "one-to-one"},
        {"causal_attention", c.causal_attention},
        {"disc_hidden", c.disc_hidden},
    };
}

EncoderConfig config_from(const json& j) {
    EncoderConfig c;
    try {
        c.item_vocab = j.at("item_vocab").get<std::size_t>();
        c.scene_vocab = j.at("scene_vocab").get<std::size_t>();
        c.item_dim = j.at("item_dim").get<std::size_t>();
        c.scene_dim = j.at("scene_dim").get<std::size_t>();
        c.num_layers = j.at("num_layers").get<std::size_t>();
        c.num_heads = j.at("num_heads").get<std::size_t>();
        c.hidden_mult = j.at("hidden_mult").get<std::size_t>();
        c.fusion_mlp_layers = j.at("fusion_mlp_layers").get<std::size_t>();
        const auto sel = j.at("selector_mode").get<std::string>();
        c.selector_mode = sel == "shared-linear" ? model::SelectorMode::kSharedLinear
                                                 : model::SelectorMode::kSeparateMlp;
        const auto fm = j.at("fusion_mode").get<std::string>();
        c.fusion_mode =
            fm == "concat" ? model::FusionMode::kConcat : model::FusionMode::kOwnBranchOnly;
        c.max_len = j.at("max_len").get<std::size_t>();
        c.variant = j.at("variant").get<std::string>() == "dual" ? model::Variant::kDual
                                                                 : model::Variant::kOneToOne;
        c.causal_attention = j.at("causal_attention").get<bool>();
        c.disc_hidden = j.at("disc_hidden").get<std::size_t>();
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("bad checkpoint config: ") + e.what());
    }
    return c;
}

}  // namespace

std::string config_to_json(const EncoderConfig& cfg) { return config_json(cfg).dump(); }

EncoderConfig config_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw CheckpointError("bad config JSON");
    return config_from(j);
}

std::string to_json(const DualModel& m) {
    json j;
    j["format"] = "dspnet-checkpoint-v1";
    j["config"] = config_json(m.config);
    json params = json::object();
    for (const auto& p : m.all_params) {
        params[p->name] = {{"shape", p->shape}, {"values", p->value}};
    }
    j["params"] = std::move(params);
    return j.dump();
}

DualModel from_json(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw CheckpointError("checkpoint is not valid JSON");
    if (!j.contains("format") || j["format"] != "dspnet-checkpoint-v1") {
        throw CheckpointError("unrecognized checkpoint format");
    }
    EncoderConfig cfg = config_from(j.at("config"));
    Rng rng(0);  // values are overwritten below
    DualModel m = DualModel::init(cfg, rng);
    const auto& params = j.at("params");
    for (const auto& p : m.all_params) {
        if (!params.contains(p->name)) {
            throw CheckpointError("checkpoint missing parameter " + p->name);
        }
        const auto& entry = params.at(p->name);
        std::vector<std::size_t> shape;
        std::vector<double> values;
        try {
            shape = entry.at("shape").get<std::vector<std::size_t>>();
            values = entry.at("values").get<std::vector<double>>();
        } catch (const json::exception& e) {
            throw CheckpointError("bad tensor for " + p->name + ": " + e.what());
        }
        if (shape != p->shape || values.size() != p->value.size()) {
            throw CheckpointError("shape mismatch for " + p->name);
        }
        p->value = std::move(values);
    }
    return m;
}

void save(const DualModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << to_json(m);
    if (!out) throw std::runtime_error("write failed: " + path);
}

DualModel load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

}  // namespace dspnet::checkpoint
