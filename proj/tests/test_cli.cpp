#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string cli() {
    const char* p = std::getenv("DSPNET_CLI");
    REQUIRE_MESSAGE(p != nullptr, "DSPNET_CLI must point at the tool binary");
    return p;
}

int run(const std::string& args) {
    const int rc = std::system((cli() + " " + args + " >cli_stdout.txt 2>cli_stderr.txt").c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

const char* kBaseConfig = R"(
gen.num_users = 48
gen.num_items = 24
gen.num_scenes = 3
gen.seq_len_min = 8
gen.seq_len_max = 12
gen.interplay = 1.0
gen.seed = 11

data.min_hist = 3
data.num_negatives = 6
data.max_len = 10
data.seed = 11

model.item_dim = 8
model.scene_dim = 4
model.num_layers = 1
model.num_heads = 2

train.batch_size = 16
train.max_epochs = 2
train.patience = 3
train.seed = 11

paths.data = cli_log.jsonl
paths.checkpoint = cli_ckpt.json
paths.report = cli_report.json
)";

}  // namespace

TEST_CASE("generate writes the log and truth sidecar deterministically") {
    write_file("cli_run.cfg", kBaseConfig);
    CHECK(run("generate --config cli_run.cfg") == 0);
    auto first = slurp("cli_log.jsonl");
    CHECK(!first.empty());
    CHECK(!slurp("cli_log.jsonl.truth.json").empty());
    CHECK(run("generate --config cli_run.cfg") == 0);
    CHECK(slurp("cli_log.jsonl") == first);  // same seed, same bytes
}

TEST_CASE("config errors exit 2 and name the key") {
    write_file("cli_bad.cfg", "gen.num_users = -3\n");
    CHECK(run("generate --config cli_bad.cfg") == 2);
    CHECK(slurp("cli_stderr.txt").find("gen.num_users") != std::string::npos);

    write_file("cli_unknown.cfg", "gen.numm_users = 5\n");
    CHECK(run("generate --config cli_unknown.cfg") == 2);
    CHECK(slurp("cli_stderr.txt").find("gen.numm_users") != std::string::npos);

    CHECK(run("train") == 2);  // missing required --config
}

TEST_CASE("train writes a loadable checkpoint and a report") {
    write_file("cli_run.cfg", kBaseConfig);
    REQUIRE(run("generate --config cli_run.cfg") == 0);
    CHECK(run("train --config cli_run.cfg") == 0);
    CHECK(slurp("cli_ckpt.json").find("dspnet-checkpoint-v1") != std::string::npos);
    auto report = slurp("cli_report.json");
    CHECK(report.find("val_recall10") != std::string::npos);

    // --seed override changes the trajectory; repeating it reproduces it
    CHECK(run("train --config cli_run.cfg --seed 99") == 0);
    auto seed99 = slurp("cli_report.json");
    CHECK(seed99 != report);
    CHECK(run("train --config cli_run.cfg --seed 99") == 0);
    auto strip_timing = [](const std::string& s) { return s.substr(0, s.find("\"timing\"")); };
    CHECK(strip_timing(slurp("cli_report.json")) == strip_timing(seed99));
}

TEST_CASE("missing dataset path exits 3 before training") {
    write_file("cli_run.cfg", kBaseConfig);
    std::remove("cli_log.jsonl");
    CHECK(run("train --config cli_run.cfg") == 3);
}

TEST_CASE("evaluate emits metrics and flags checkpoint mismatches") {
    write_file("cli_run.cfg", kBaseConfig);
    REQUIRE(run("generate --config cli_run.cfg") == 0);
    REQUIRE(run("train --config cli_run.cfg") == 0);
    CHECK(run("evaluate --config cli_run.cfg --checkpoint cli_ckpt.json --task next-item") == 0);
    CHECK(slurp("cli_stdout.txt").find("\"recall\"") != std::string::npos);

    CHECK(run("evaluate --config cli_run.cfg --checkpoint cli_ckpt.json --task next-scene") == 0);
    CHECK(slurp("cli_stdout.txt").find("next-scene") != std::string::npos);

    CHECK(run("evaluate --config cli_run.cfg --checkpoint cli_ckpt.json --task period-item") == 0);

    write_file("cli_corrupt.json", "{\"format\":\"dspnet-checkpoint-v1\",\"config\":{}}");
    CHECK(run("evaluate --config cli_run.cfg --checkpoint cli_corrupt.json") == 5);

    // a checkpoint trained on a different vocabulary is a mismatch, not a crash
    write_file("cli_other.cfg", std::string(kBaseConfig) +
                                    "gen.num_items = 60\ngen.seed = 12\n"
                                    "paths.data = cli_log2.jsonl\n"
                                    "paths.checkpoint = cli_ckpt2.json\n");
    REQUIRE(run("generate --config cli_other.cfg") == 0);
    REQUIRE(run("train --config cli_other.cfg") == 0);
    CHECK(run("evaluate --config cli_run.cfg --checkpoint cli_ckpt2.json") == 5);
}

TEST_CASE("gradcheck lists every op and exits zero") {
    CHECK(run("gradcheck") == 0);
    auto out = slurp("cli_stdout.txt");
    for (const char* op : {"matmul", "softmax", "layernorm", "embedding_lookup", "bce_mean",
                           "dsl_loss", "ccr_loss", "apr_discriminator_loss",
                           "apr_generator_term", "total_loss"}) {
        CHECK(out.find(op) != std::string::npos);
    }
    CHECK(out.find("FAIL") == std::string::npos);
}

TEST_CASE("ablate emits one row per variant and reproduces itself") {
    write_file("cli_ablate.cfg", std::string(kBaseConfig) +
                                     "train.max_epochs = 1\n"
                                     "ablate.variants = full, wo_both, one-to-one\n");
    REQUIRE(run("generate --config cli_ablate.cfg") == 0);
    CHECK(run("ablate --config cli_ablate.cfg --out cli_table.json") == 0);
    auto table = slurp("cli_table.json");
    CHECK(table.find("\"full\"") != std::string::npos);
    CHECK(table.find("\"wo_both\"") != std::string::npos);
    CHECK(table.find("\"one-to-one\"") != std::string::npos);
    CHECK(table.find("\"seed\"") != std::string::npos);
    CHECK(run("ablate --config cli_ablate.cfg --out cli_table2.json") == 0);
    CHECK(slurp("cli_table2.json") == table);
}

TEST_CASE("variant flag overrides the config") {
    write_file("cli_run.cfg", kBaseConfig);
    REQUIRE(run("generate --config cli_run.cfg") == 0);
    CHECK(run("train --config cli_run.cfg --variant one-to-one") == 0);
    CHECK(slurp("cli_ckpt.json").find("one-to-one") != std::string::npos);
    CHECK(run("train --config cli_run.cfg --variant bogus") == 2);
}
