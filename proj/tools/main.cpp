// Command-line driver: generate / train / evaluate / ablate / gradcheck.
//
// Exit codes: 0 success, 1 check failure, 2 config error, 3 I/O error,
// 4 numeric abort, 5 checkpoint mismatch.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dspnet/checkpoint.hpp"
#include "dspnet/config.hpp"
#include "dspnet/eval.hpp"
#include "dspnet/gradcheck.hpp"
#include "dspnet/pipeline.hpp"
#include "dspnet/synthgen.hpp"
#include "dspnet/train.hpp"

namespace {

using namespace dspnet;

constexpr int kOk = 0;
constexpr int kCheckFailure = 1;
constexpr int kConfigError = 2;
constexpr int kIoError = 3;
constexpr int kNumericError = 4;
constexpr int kCheckpointError = 5;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path);
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text << "\n";
    } else {
        write_text(out_path, text);
    }
}

std::vector<data::Interaction> read_log(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return data::parse_interactions(in);
}

void fill_vocab_sizes(model::EncoderConfig& enc, const pipeline::Prepared& p) {
    enc.item_vocab = p.items.size();
    enc.scene_vocab = p.scenes.size();
}

int cmd_generate(const std::string& config_path, const std::string& out_path,
                 std::int64_t seed_override) {
    config::RunConfig cfg = config::load_run_config(config_path);
    if (seed_override >= 0) cfg.gen.seed = static_cast<std::uint64_t>(seed_override);
    cfg.gen.validate();
    const std::string log_path = out_path.empty() ? cfg.data_path : out_path;
    if (log_path.empty()) throw ConfigError("no output path: set paths.data or --out");
    synth::SynthResult result = synth::generate(cfg.gen);
    std::ostringstream buf;
    data::serialize_interactions(result.events, buf);
    write_text(log_path, buf.str());
    write_text(log_path + ".truth.json", synth::ground_truth_to_json(result.truth));
    std::cout << result.events.size() << " events -> " << log_path << "\n";
    return kOk;
}

int cmd_train(const std::string& config_path, std::int64_t seed_override,
              const std::string& out_path, const std::string& variant_override) {
    config::RunConfig cfg = config::load_run_config(config_path);
    if (seed_override >= 0) {
        cfg.trainer.seed = static_cast<std::uint64_t>(seed_override);
        cfg.data.seed = static_cast<std::uint64_t>(seed_override);
    }
    if (!variant_override.empty()) {
        cfg.encoder.variant = variant_override == "one-to-one" ? model::Variant::kOneToOne
                                                               : model::Variant::kDual;
    }
    if (cfg.data_path.empty()) throw ConfigError("paths.data is required for train");
    pipeline::Prepared p = pipeline::prepare(read_log(cfg.data_path), cfg.data);
    fill_vocab_sizes(cfg.encoder, p);
    cfg.encoder.validate();
    auto [m, report] = train::train(p.train, p.val, cfg.encoder, cfg.trainer);
    const std::string ckpt = out_path.empty() ? cfg.checkpoint_path : out_path;
    if (!ckpt.empty()) checkpoint::save(m, ckpt);
    emit(cfg.report_path, train::report_to_json(report));
    return kOk;
}

int cmd_evaluate(const std::string& config_path, const std::string& checkpoint_path,
                 const std::string& task_flag, const std::string& out_path) {
    config::RunConfig cfg = config::load_run_config(config_path);
    const std::string task_name = task_flag.empty() ? cfg.task : task_flag;
    eval::Task task = eval::task_from_string(task_name);
    cfg.data.label_mode =
        task == eval::Task::kPeriodItem ? data::LabelMode::kPeriod : data::LabelMode::kNext;
    if (cfg.data_path.empty()) throw ConfigError("paths.data is required for evaluate");
    pipeline::Prepared p = pipeline::prepare(read_log(cfg.data_path), cfg.data);
    const std::string ckpt = checkpoint_path.empty() ? cfg.checkpoint_path : checkpoint_path;
    if (ckpt.empty()) throw ConfigError("no checkpoint path: set paths.checkpoint or --checkpoint");
    model::DualModel m = checkpoint::load(ckpt);
    if (m.config.item_vocab != p.items.size() || m.config.scene_vocab != p.scenes.size()) {
        throw CheckpointError("checkpoint vocabulary does not match dataset");
    }
    eval::MetricsReport r = eval::evaluate(m, p.test, task, cfg.eval);
    emit(out_path.empty() ? cfg.metrics_path : out_path, eval::metrics_to_json(r));
    return kOk;
}

int cmd_gradcheck(std::int64_t seed_override) {
    gradcheck::SuiteOptions opts;
    if (seed_override >= 0) opts.seed = static_cast<std::uint64_t>(seed_override);
    bool all_pass = true;
    for (const auto& r : gradcheck::run_suite(opts)) {
        std::printf("%-28s worst_rel_err=%.3e  %s\n", r.op.c_str(), r.worst_rel_err,
                    r.pass ? "PASS" : "FAIL");
        all_pass = all_pass && r.pass;
    }
    return all_pass ? kOk : kCheckFailure;
}

int cmd_ablate(const std::string& config_path, std::int64_t seed_override,
               const std::string& out_path) {
    config::RunConfig cfg = config::load_run_config(config_path);
    if (seed_override >= 0) {
        cfg.trainer.seed = static_cast<std::uint64_t>(seed_override);
        cfg.data.seed = static_cast<std::uint64_t>(seed_override);
    }
    if (cfg.data_path.empty()) throw ConfigError("paths.data is required for ablate");
    pipeline::Prepared p = pipeline::prepare(read_log(cfg.data_path), cfg.data);
    fill_vocab_sizes(cfg.encoder, p);
    cfg.encoder.validate();
    std::vector<train::AblationRun> runs =
        train::ablation_grid(cfg.encoder, cfg.trainer, cfg.ablate_variants);
    std::vector<train::AblationResult> results =
        train::run_ablation_grid(p.train, p.val, p.test, runs);
    nlohmann::json table;
    table["seed"] = cfg.trainer.seed;
    table["rows"] = nlohmann::json::array();
    for (const auto& res : results) {
        nlohmann::json row;
        row["variant"] = res.name;
        row["metrics"] = nlohmann::json::parse(eval::metrics_to_json(res.metrics));
        row["best_epoch"] = res.report.best_epoch;
        row["epochs_run"] = res.report.epochs_run;
        table["rows"].push_back(std::move(row));
    }
    emit(out_path.empty() ? cfg.metrics_path : out_path, table.dump(2));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dual sequence prediction network toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path, checkpoint_path, task_flag, variant_flag;
    std::int64_t seed = -1;
    int workers = 1;  // accepted for interface stability; execution is single-threaded

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", config_path, "run configuration file");
        if (needs_config) opt->required();
        cmd->add_option("--seed", seed, "seed override");
        cmd->add_option("--workers", workers, "worker count (currently single-threaded)");
    };

    auto* gen = app.add_subcommand("generate", "write a synthetic interaction log");
    add_common(gen, true);
    gen->add_option("--out", out_path, "output log path (overrides paths.data)");

    auto* tr = app.add_subcommand("train", "train a model from a config");
    add_common(tr, true);
    tr->add_option("--out", out_path, "checkpoint path (overrides paths.checkpoint)");
    tr->add_option("--variant", variant_flag, "dual|one-to-one")
        ->check(CLI::IsMember({"dual", "one-to-one"}));

    auto* ev = app.add_subcommand("evaluate", "score a checkpoint on the test split");
    add_common(ev, true);
    ev->add_option("--checkpoint", checkpoint_path, "checkpoint path");
    ev->add_option("--task", task_flag, "next-item|period-item|next-scene")
        ->check(CLI::IsMember({"next-item", "period-item", "next-scene"}));
    ev->add_option("--out", out_path, "metrics output path (default stdout)");

    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient audit");
    add_common(gc, false);

    auto* ab = app.add_subcommand("ablate", "run the ablation grid");
    add_common(ab, true);
    ab->add_option("--out", out_path, "table output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    try {
        if (gen->parsed()) return cmd_generate(config_path, out_path, seed);
        if (tr->parsed()) return cmd_train(config_path, seed, out_path, variant_flag);
        if (ev->parsed()) return cmd_evaluate(config_path, checkpoint_path, task_flag, out_path);
        if (gc->parsed()) return cmd_gradcheck(seed);
        if (ab->parsed()) return cmd_ablate(config_path, seed, out_path);
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kNumericError;
    } catch (const CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return kCheckpointError;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    }
    return kConfigError;
}
