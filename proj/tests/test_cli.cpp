#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <string>
#include <vector>

#include <json.hpp>
#include <sys/wait.h>

#include "kgalign/embedding_io.hpp"
#include "kgalign/sequence_io.hpp"
#include "test_util.hpp"

// Drives the installed binary end to end over a tiny corpus. The binary path
// comes from $KGALIGN_BIN (set by ctest); tests are skipped without it.

namespace {

using testutil::TempDir;

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string binary() {
    const char* bin = std::getenv("KGALIGN_BIN");
    return bin ? bin : "";
}

RunResult run_cli(const TempDir& dir, const std::string& args) {
    static int run_id = 0;
    const std::string out_path = dir.file("run_" + std::to_string(run_id) + ".out");
    const std::string err_path = dir.file("run_" + std::to_string(run_id) + ".err");
    ++run_id;
    const std::string cmd =
        "'" + binary() + "' " + args + " >'" + out_path + "' 2>'" + err_path + "'";
    const int status = std::system(cmd.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = testutil::read_file(out_path);
    result.err = testutil::read_file(err_path);
    return result;
}

// Minimal corpus around the worked HIV-1 example.
struct Corpus {
    TempDir dir;
    std::string vocab, lm, kge, entities, contexts, defs;

    Corpus() {
        vocab = testutil::write_file(dir, "vocab.txt",
            "[CLS]\n[SEP]\n[UNK]\n/\nwhat\nis\nthe\nmain\ncause\nof\nhiv\n-\n1\ninfection\n"
            "in\nchildren\n?\ncy\n##stein\n##e\nvirus\naffects\nlungs\ncell\nentry\n");
        lm = testutil::write_file(dir, "lm.vec",
            "14 4\n"
            "main 0.1 0.2 0.3 0.4\n"
            "cause 0.5 -0.1 0.2 0.0\n"
            "hiv 1.0 0.0 -0.5 0.25\n"
            "1 0.0 1.0 0.5 -0.25\n"
            "infection -0.3 0.6 0.1 0.9\n"
            "children 0.7 0.7 -0.7 0.1\n"
            "virus 0.2 -0.2 0.4 0.6\n"
            "affects -0.1 0.3 0.8 -0.4\n"
            "lungs 0.9 0.1 0.0 0.3\n"
            "cell 0.25 0.5 -0.25 0.0\n"
            "entry -0.5 0.25 0.5 1.0\n"
            "cy 0.4 0.4 0.4 0.4\n"
            "##stein -0.2 0.1 0.6 0.2\n"
            "##e 0.1 -0.3 0.2 0.5\n");
        kge = testutil::write_file(dir, "kge.vec",
            "5 3\n"
            "main 0.5 0.1 -0.2\n"
            "cause -0.3 0.8 0.1\n"
            "hiv_1_infection 0.9 -0.4 0.3\n"
            "children 0.2 0.6 0.7\n"
            "unlinked -1.0 0.0 1.0\n");
        entities = testutil::write_file(dir, "entities.jsonl",
            R"({"id":"hiv","question":"What is the main cause of HIV-1 infection in children?",)"
            R"("entities":[)"
            R"({"key":"main","preferred_name":"main","start":12,"end":16},)"
            R"({"key":"cause","preferred_name":"cause","start":17,"end":22,"definition_key":"D1"},)"
            R"({"key":"hiv_1_infection","preferred_name":"hiv 1 infection","start":26,"end":41,"definition_key":"D2"},)"
            R"({"key":"children","preferred_name":"children","start":45,"end":53}]})"
            "\n"
            R"({"id":"plain","question":"what is hiv ?","entities":[]})" "\n");
        contexts = testutil::write_file(dir, "contexts.jsonl",
            R"({"id":"hiv","context":"virus affects lungs"})" "\n"
            R"({"id":"plain","tokens":["cell","entry"]})" "\n");
        defs = testutil::write_file(dir, "defs.jsonl",
            R"({"key":"main","text":"hiv infection"})" "\n"
            R"({"key":"cause","text":"virus affects children"})" "\n");
    }
};

}  // namespace

TEST_CASE("cli pipeline end to end") {
    if (binary().empty()) {
        SKIP("KGALIGN_BIN not set");
    }
    Corpus c;
    const auto& dir = c.dir;

    // build-targets
    auto r = run_cli(dir, "build-targets --entities " + c.entities + " --kge " + c.kge +
                              " --lm " + c.lm + " --vocab " + c.vocab + " --out-sources " +
                              dir.file("src.vec") + " --out-targets " + dir.file("tgt.vec"));
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    const auto sources = kgalign::load_embeddings(dir.file("src.vec"));
    const auto targets = kgalign::load_embeddings(dir.file("tgt.vec"));
    REQUIRE(sources.size() == 4);
    REQUIRE(targets.size() == 4);
    REQUIRE(sources.dim() == 3);
    REQUIRE(targets.dim() == 4);

    // the filtered variant keeps only entities with definitions
    r = run_cli(dir, "build-targets --entities " + c.entities + " --kge " + c.kge + " --lm " +
                         c.lm + " --vocab " + c.vocab + " --require-definition --out-sources " +
                         dir.file("src_def.vec") + " --out-targets " + dir.file("tgt_def.vec"));
    REQUIRE(r.exit_code == 0);
    REQUIRE(kgalign::load_embeddings(dir.file("src_def.vec")).size() == 2);

    // fit linear
    r = run_cli(dir, "fit --method linear --sources " + dir.file("src.vec") + " --targets " +
                         dir.file("tgt.vec") + " --out " + dir.file("linear.json"));
    INFO(r.err);
    REQUIRE(r.exit_code == 0);

    // fit mlp with explicit defaults echoed
    r = run_cli(dir, "fit --method mlp --sources " + dir.file("src.vec") + " --targets " +
                         dir.file("tgt.vec") + " --epochs 3 --holdout 0.25 --seed 7 --out " +
                         dir.file("mlp.json"));
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.err.find("batch_size = 256") != std::string::npos);
    REQUIRE(r.err.find("dropout_p = 0.25") != std::string::npos);
    REQUIRE(r.err.find("weight_decay = 0.001") != std::string::npos);
    REQUIRE(r.err.find("seed = 7") != std::string::npos);

    // default config echo without overrides
    r = run_cli(dir, "fit --method mlp --sources " + dir.file("src.vec") + " --targets " +
                         dir.file("tgt.vec") + " --holdout 0.25 --out " + dir.file("mlp_d.json"));
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.err.find("epochs = 30") != std::string::npos);

    // determinism: identical runs give byte-identical model files
    r = run_cli(dir, "fit --method mlp --sources " + dir.file("src.vec") + " --targets " +
                         dir.file("tgt.vec") + " --epochs 3 --holdout 0.25 --seed 7 --out " +
                         dir.file("mlp2.json"));
    REQUIRE(r.exit_code == 0);
    REQUIRE(testutil::read_file(dir.file("mlp.json")) ==
            testutil::read_file(dir.file("mlp2.json")));

    // orthogonal on unequal dims is a validation error (exit 1)
    r = run_cli(dir, "fit --method orthogonal --sources " + dir.file("src.vec") +
                         " --targets " + dir.file("tgt.vec") + " --out " + dir.file("o.json"));
    REQUIRE(r.exit_code == 1);
    REQUIRE(r.err.find("common dimensionality") != std::string::npos);

    // apply the mlp model
    r = run_cli(dir, "apply --model " + dir.file("mlp.json") + " --table " + c.kge + " --out " +
                         dir.file("homog.vec"));
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    const auto homog = kgalign::load_embeddings(dir.file("homog.vec"));
    REQUIRE(homog.dim() == 4);
    REQUIRE(homog.size() == 5);

    // embed definitions via the static proxy
    r = run_cli(dir, "embed-defs --definitions " + c.defs + " --lm " + c.lm + " --vocab " +
                         c.vocab + " --out " + dir.file("defs.vec"));
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.err.find("pooler proxy") != std::string::npos);
    REQUIRE(kgalign::load_embeddings(dir.file("defs.vec")).size() == 2);

    // fuse
    r = run_cli(dir, "fuse --homogenized " + dir.file("homog.vec") + " --definitions " +
                         dir.file("defs.vec") + " --out " + dir.file("fused.vec"));
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    const auto fused = kgalign::load_embeddings(dir.file("fused.vec"));
    REQUIRE(fused.size() == 5);
    REQUIRE(r.err.find("2 averaged") != std::string::npos);

    // random baseline is key-order invariant (same seed, same vectors)
    r = run_cli(dir, "fuse --homogenized " + dir.file("homog.vec") +
                         " --random-seed 9 --out " + dir.file("rand.vec"));
    REQUIRE(r.exit_code == 0);
    const auto rand_table = kgalign::load_embeddings(dir.file("rand.vec"));
    REQUIRE(rand_table.dim() == 4);
    for (const auto& [name, vec] : rand_table.entries())
        for (double v : vec) {
            REQUIRE(v >= -1.0);
            REQUIRE(v <= 1.0);
        }

    // augment, both layouts
    for (const std::string layout : {"bertram", "dekcor"}) {
        r = run_cli(dir, "augment --layout " + layout + " --entities " + c.entities +
                             " --fused " + dir.file("fused.vec") + " --vocab " + c.vocab +
                             " --contexts " + c.contexts + " --out " +
                             dir.file(layout + ".jsonl"));
        INFO(r.err);
        REQUIRE(r.exit_code == 0);
        const auto file = kgalign::read_sequences(dir.file(layout + ".jsonl"));
        REQUIRE(file.sequences.size() == 2);
        REQUIRE(file.sequences[0].id == "hiv");
        REQUIRE(kgalign::vector_unit_count(file.sequences[0]) == 4);
        REQUIRE(kgalign::vector_unit_count(file.sequences[1]) == 0);
    }

    // the dekcor token stream preserves the original question tokens
    {
        const auto file = kgalign::read_sequences(dir.file("dekcor.jsonl"));
        const std::vector<std::string> expect{"what", "is",        "the", "main", "cause",
                                              "of",   "hiv",       "-",   "1",    "infection",
                                              "in",   "children", "?"};
        const auto& seq = file.sequences[0];
        REQUIRE(seq.question_unit_count == expect.size());
        for (std::size_t i = 0; i < expect.size(); ++i)
            REQUIRE(std::get<kgalign::TokenUnit>(seq.units[1 + i]).text == expect[i]);
    }

    // eval produces a parseable report
    r = run_cli(dir, "eval --predicted " + dir.file("tgt.vec") + " --targets " +
                         dir.file("tgt.vec") + " --k 1");
    INFO(r.err);
    REQUIRE(r.exit_code == 0);
    const auto report = nlohmann::json::parse(r.out);
    REQUIRE(report.at("mse").get<double>() == 0.0);
    REQUIRE(report.at("precision_at_k").get<double>() == 1.0);
    REQUIRE(report.at("n").get<int>() == 4);

    // eval to a file
    r = run_cli(dir, "eval --predicted " + dir.file("homog.vec") + " --targets " +
                         dir.file("homog.vec") + " --k 2 --out " + dir.file("report.json"));
    REQUIRE(r.exit_code == 0);
    REQUIRE(nlohmann::json::parse(testutil::read_file(dir.file("report.json")))
                .at("mean_cosine")
                .get<double>() == Catch::Approx(1.0));
}

TEST_CASE("cli rejects bad invocations with exit code 1") {
    if (binary().empty()) {
        SKIP("KGALIGN_BIN not set");
    }
    TempDir dir;
    REQUIRE(run_cli(dir, "frobnicate").exit_code == 1);
    REQUIRE(run_cli(dir, "fit --method warp --sources a --targets b --out c").exit_code != 0);
    REQUIRE(run_cli(dir, "").exit_code == 1);  // a subcommand is required
}

TEST_CASE("cli reports io failures with exit code 2") {
    if (binary().empty()) {
        SKIP("KGALIGN_BIN not set");
    }
    TempDir dir;
    const auto r = run_cli(dir, "apply --model " + dir.file("absent.json") + " --table " +
                                    dir.file("absent.vec") + " --out " + dir.file("x.vec"));
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.err.find("cannot open") != std::string::npos);
}

TEST_CASE("selfcheck subcommand passes and exits zero") {
    if (binary().empty()) {
        SKIP("KGALIGN_BIN not set");
    }
    TempDir dir;
    const auto r = run_cli(dir, "selfcheck");
    INFO(r.out);
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.out.find("FAIL") == std::string::npos);
    REQUIRE(r.out.find("PASS  gradient-check") != std::string::npos);
}

TEST_CASE("KGALIGN_DATA_DIR resolves relative paths") {
    if (binary().empty()) {
        SKIP("KGALIGN_BIN not set");
    }
    Corpus c;
    const std::string cmd = "KGALIGN_DATA_DIR='" + c.dir.path.string() +
                            "' '" + binary() +
                            "' eval --predicted lm.vec --targets lm.vec --k 1 > '" +
                            c.dir.file("env.out") + "' 2>'" + c.dir.file("env.err") + "'";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    REQUIRE(WEXITSTATUS(status) == 0);
    const auto report = nlohmann::json::parse(testutil::read_file(c.dir.file("env.out")));
    REQUIRE(report.at("mse").get<double>() == 0.0);
}
