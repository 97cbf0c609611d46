// kgalign: homogenize knowledge-graph entity embeddings into a language
// model's token-embedding space and build knowledge-augmented sequences.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kgalign/embedding_io.hpp"
#include "kgalign/error.hpp"
#include "kgalign/eval.hpp"
#include "kgalign/fusion.hpp"
#include "kgalign/model_io.hpp"
#include "kgalign/normalize.hpp"
#include "kgalign/selfcheck.hpp"
#include "kgalign/sequence_io.hpp"
#include "kgalign/targets.hpp"
#include "kgalign/train.hpp"

namespace {

using namespace kgalign;

// Relative paths resolve under $KGALIGN_DATA_DIR when it is set; absolute
// paths always pass through.
std::string resolve_path(const std::string& path) {
    if (path.empty() || std::filesystem::path(path).is_absolute()) return path;
    if (const char* base = std::getenv("KGALIGN_DATA_DIR"); base && *base)
        return (std::filesystem::path(base) / path).string();
    return path;
}

struct ConfigEcho {
    std::string command;
    std::vector<std::pair<std::string, std::string>> items;

    void add(const std::string& key, const std::string& value) { items.emplace_back(key, value); }
    void add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }
    void add(const std::string& key, double value) { add(key, format_double17(value)); }
    void add(const std::string& key, bool value) { add(key, value ? std::string("true") : std::string("false")); }

    void print() const {
        std::cerr << "[kgalign " << command << "] effective config:\n";
        for (const auto& [k, v] : items) std::cerr << "  " << k << " = " << v << "\n";
    }
};

std::vector<std::string> load_key_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open key file '" + path + "'");
    std::vector<std::string> keys;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) keys.push_back(line);
    }
    return keys;
}

void add_train_flags(CLI::App* cmd, TrainConfig& cfg) {
    cmd->add_option("--epochs", cfg.epochs, "Training epochs");
    cmd->add_option("--batch-size", cfg.batch_size, "Minibatch size");
    cmd->add_option("--dropout", cfg.dropout_p, "Input dropout probability");
    cmd->add_option("--weight-decay", cfg.weight_decay, "Coupled L2 penalty on weight matrices");
    cmd->add_option("--lr", cfg.learning_rate, "Adam learning rate");
    cmd->add_option("--beta1", cfg.adam_beta1, "Adam beta1");
    cmd->add_option("--beta2", cfg.adam_beta2, "Adam beta2");
    cmd->add_option("--adam-eps", cfg.adam_eps, "Adam epsilon");
    cmd->add_option("--holdout", cfg.holdout_fraction, "Holdout fraction in (0,1)");
    cmd->add_option("--hidden-dim", cfg.hidden_dim, "Hidden layer width");
    cmd->add_option("--ln-eps", cfg.ln_eps, "Layer-norm epsilon");
}

void echo_train_config(ConfigEcho& echo, const TrainConfig& cfg) {
    echo.add("epochs", static_cast<std::uint64_t>(cfg.epochs));
    echo.add("batch_size", static_cast<std::uint64_t>(cfg.batch_size));
    echo.add("dropout_p", cfg.dropout_p);
    echo.add("weight_decay", cfg.weight_decay);
    echo.add("learning_rate", cfg.learning_rate);
    echo.add("adam_beta1", cfg.adam_beta1);
    echo.add("adam_beta2", cfg.adam_beta2);
    echo.add("adam_eps", cfg.adam_eps);
    echo.add("holdout_fraction", cfg.holdout_fraction);
    echo.add("hidden_dim", static_cast<std::uint64_t>(cfg.hidden_dim));
    echo.add("ln_eps", cfg.ln_eps);
    echo.add("seed", cfg.seed);
}

// ---------------------------------------------------------------- build-targets

struct BuildTargetsArgs {
    std::string entities, kge, lm, vocab, out_sources, out_targets;
    bool lowercase = true;
    bool require_definition = false;
    std::uint64_t sample = 0;  // 0 = keep all
    std::uint64_t seed = 0;
};

int run_build_targets(const BuildTargetsArgs& args) {
    ConfigEcho echo{"build-targets", {}};
    echo.add("entities", args.entities);
    echo.add("kge", args.kge);
    echo.add("lm", args.lm);
    echo.add("vocab", args.vocab);
    echo.add("lowercase", args.lowercase);
    echo.add("require_definition", args.require_definition);
    echo.add("sample", args.sample);
    echo.add("out_sources", args.out_sources);
    echo.add("out_targets", args.out_targets);
    echo.add("seed", args.seed);
    echo.print();

    const auto questions = load_entities(resolve_path(args.entities));
    const auto kge = load_embeddings(resolve_path(args.kge));
    const auto lm = load_embeddings(resolve_path(args.lm));
    const auto vocab = load_vocab(resolve_path(args.vocab));

    // unique entities by key, first occurrence wins
    std::vector<std::pair<std::string, std::string>> entities;
    {
        std::map<std::string, bool> seen;
        for (const auto& q : questions)
            for (const auto& e : q.entities) {
                if (args.require_definition && !e.definition_key) continue;
                if (!seen.emplace(e.key, true).second) continue;
                entities.emplace_back(e.key, e.preferred_name);
            }
    }
    if (args.sample > 0 && args.sample < entities.size()) {
        SplitRng rng = SplitRng(args.seed).split("sample");
        shuffle(entities, rng);
        entities.resize(args.sample);
    }
    std::cerr << "building targets for " << entities.size() << " entities\n";

    const TargetSetResult result = build_target_set(entities, kge, lm, vocab, args.lowercase);
    for (const auto& skip : result.skipped)
        std::cerr << "skipped '" << skip.key << "': " << skip.reason << "\n";
    std::cerr << "paired " << result.pairs.size() << " entities, skipped "
              << result.skipped.size() << "\n";

    const auto [sources, targets] = tables_from_pairs(result.pairs);
    save_embeddings(sources, resolve_path(args.out_sources));
    save_embeddings(targets, resolve_path(args.out_targets));
    return 0;
}

// ---------------------------------------------------------------------- fit

struct FitArgs {
    std::string method, sources, targets, out;
    std::optional<double> ridge;
    bool no_auto_ridge = false;
    std::uint64_t normalize_iters = 0;
    double normalize_tol = 1e-6;
    bool normalize_targets = false;
    TrainConfig train;
};

int run_fit(const FitArgs& args) {
    ConfigEcho echo{"fit", {}};
    echo.add("method", args.method);
    echo.add("sources", args.sources);
    echo.add("targets", args.targets);
    echo.add("out", args.out);
    echo.add("normalize_iters", args.normalize_iters);
    echo.add("normalize_tol", args.normalize_tol);
    echo.add("normalize_targets", args.normalize_targets);
    if (args.method == "linear") {
        echo.add("ridge", args.ridge ? format_double17(*args.ridge) : std::string("auto"));
        echo.add("seed", args.train.seed);
    } else if (args.method == "orthogonal") {
        echo.add("seed", args.train.seed);
    } else {
        echo_train_config(echo, args.train);
    }
    echo.print();

    auto sources = load_embeddings(resolve_path(args.sources));
    auto targets = load_embeddings(resolve_path(args.targets));
    if (args.normalize_iters > 0) {
        const auto ns = iterative_normalize(sources, args.normalize_tol, args.normalize_iters);
        std::cerr << "normalized sources: converged=" << (ns.converged ? "yes" : "no") << " in "
                  << ns.iterations << " iterations\n";
        if (!ns.converged) std::cerr << "warning: source normalization hit max_iter\n";
        sources = ns.table;
        if (args.normalize_targets) {
            const auto nt = iterative_normalize(targets, args.normalize_tol, args.normalize_iters);
            std::cerr << "normalized targets: converged=" << (nt.converged ? "yes" : "no")
                      << " in " << nt.iterations << " iterations\n";
            if (!nt.converged) std::cerr << "warning: target normalization hit max_iter\n";
            targets = nt.table;
        }
    }
    const PairedDataset pairs = pairs_from_tables(sources, targets);
    std::cerr << "fitting " << args.method << " on " << pairs.size() << " pairs, "
              << pairs.d_src() << " -> " << pairs.d_tgt() << "\n";

    const std::string out = resolve_path(args.out);
    if (args.method == "linear") {
        LinearMap map;
        if (args.ridge) {
            map = fit_linear(pairs, *args.ridge);
        } else {
            try {
                map = fit_linear(pairs, 0.0);
            } catch (const SingularMatrixError&) {
                if (args.no_auto_ridge) throw;
                std::cerr << "rank-deficient normal equations; retrying with ridge 1e-6\n";
                map = fit_linear(pairs, 1e-6);
            }
        }
        save_linear(map, out);
        std::cerr << "residual sum of squares: " << residual_sum_squares(map.w, pairs) << "\n";
    } else if (args.method == "orthogonal") {
        const OrthogonalMap map = fit_orthogonal(pairs);
        save_orthogonal(map, out);
        std::cerr << "residual sum of squares: " << residual_sum_squares(map.w, pairs) << "\n";
    } else if (args.method == "mlp") {
        const TrainResult result = train(pairs, args.train);
        MlpModelFile file{result.model, args.train, result.best_epoch, result.history};
        save_mlp(file, out);
        if (!result.history.empty()) {
            std::cerr << "holdout mse by epoch:";
            for (const auto& h : result.history) std::cerr << ' ' << h.holdout_mse;
            std::cerr << "\nbest epoch " << *result.best_epoch << " holdout mse "
                      << result.history[*result.best_epoch].holdout_mse << "\n";
        }
    } else {
        throw ValidationError("unknown fit method '" + args.method + "'");
    }
    std::cerr << "wrote " << out << "\n";
    return 0;
}

// -------------------------------------------------------------------- apply

struct ApplyArgs {
    std::string model, table, out, keys_file;
};

int run_apply(const ApplyArgs& args) {
    ConfigEcho echo{"apply", {}};
    echo.add("model", args.model);
    echo.add("table", args.table);
    echo.add("keys", args.keys_file.empty() ? std::string("(all)") : args.keys_file);
    echo.add("out", args.out);
    echo.add("seed", std::uint64_t{0});
    echo.print();

    const auto model = load_model(resolve_path(args.model));
    const auto table = load_embeddings(resolve_path(args.table));
    std::vector<std::string> keys;
    if (!args.keys_file.empty()) {
        keys = load_key_file(resolve_path(args.keys_file));
    } else {
        for (const auto& [name, vec] : table.entries()) keys.push_back(name);
    }
    const auto out_table = apply_model(model, table, keys);
    save_embeddings(out_table, resolve_path(args.out));
    std::cerr << "homogenized " << out_table.size() << " vectors to dimension "
              << out_table.dim() << "\n";
    return 0;
}

// --------------------------------------------------------------------- fuse

struct FuseArgs {
    std::string homogenized, definitions, out, keys_file;
    std::optional<std::uint64_t> random_seed;
    std::uint64_t random_dim = 0;
};

int run_fuse(const FuseArgs& args) {
    ConfigEcho echo{"fuse", {}};
    echo.add("homogenized", args.homogenized.empty() ? std::string("(none)") : args.homogenized);
    echo.add("definitions", args.definitions.empty() ? std::string("(none)") : args.definitions);
    echo.add("keys", args.keys_file.empty() ? std::string("(all)") : args.keys_file);
    echo.add("random_baseline", static_cast<bool>(args.random_seed));
    echo.add("out", args.out);
    echo.add("seed", args.random_seed.value_or(0));
    echo.print();

    std::optional<EmbeddingTable> homog, defs;
    if (!args.homogenized.empty()) homog = load_embeddings(resolve_path(args.homogenized));
    if (!args.definitions.empty()) defs = load_embeddings(resolve_path(args.definitions));
    if (!homog && !defs)
        throw ValidationError("fuse: need --homogenized and/or --definitions");

    std::vector<std::string> keys;
    if (!args.keys_file.empty()) {
        keys = load_key_file(resolve_path(args.keys_file));
    } else {
        std::map<std::string, bool> seen;
        if (homog)
            for (const auto& [name, vec] : homog->entries())
                if (seen.emplace(name, true).second) keys.push_back(name);
        if (defs)
            for (const auto& [name, vec] : defs->entries())
                if (seen.emplace(name, true).second) keys.push_back(name);
    }

    const std::string out = resolve_path(args.out);
    if (args.random_seed) {
        const std::size_t dim = args.random_dim > 0 ? args.random_dim
                                : homog              ? homog->dim()
                                : defs               ? defs->dim()
                                                     : 0;
        const auto table = random_table(keys, dim, *args.random_seed);
        save_embeddings(table, out);
        std::cerr << "wrote random baseline table: " << table.size() << " x " << table.dim()
                  << "\n";
        return 0;
    }

    if (!homog || !defs)
        throw ValidationError("fuse: averaging needs both --homogenized and --definitions "
                              "(or use --random-seed for the random baseline)");
    const FuseResult result = fuse(*homog, *defs, keys);
    std::size_t both = 0, h_only = 0, d_only = 0;
    for (const auto s : result.sources) {
        both += s == FuseSource::kBoth;
        h_only += s == FuseSource::kHomogenizedOnly;
        d_only += s == FuseSource::kDefinitionOnly;
    }
    save_embeddings(result.table, out);
    std::cerr << "fused " << result.table.size() << " keys: " << both << " averaged, " << h_only
              << " homogenized-only, " << d_only << " definition-only\n";
    return 0;
}

// ------------------------------------------------------------------ augment

struct AugmentArgs {
    std::string layout, entities, fused, vocab, contexts, out;
    std::uint64_t max_len = 512;
    bool inline_vectors = false;
    bool lowercase = true;
};

int run_augment(const AugmentArgs& args) {
    ConfigEcho echo{"augment", {}};
    echo.add("layout", args.layout);
    echo.add("entities", args.entities);
    echo.add("fused", args.fused);
    echo.add("vocab", args.vocab);
    echo.add("contexts", args.contexts.empty() ? std::string("(none)") : args.contexts);
    echo.add("max_len", args.max_len);
    echo.add("inline_vectors", args.inline_vectors);
    echo.add("lowercase", args.lowercase);
    echo.add("out", args.out);
    echo.add("seed", std::uint64_t{0});
    echo.print();

    if (args.layout != "bertram" && args.layout != "dekcor")
        throw ValidationError("augment: layout must be bertram or dekcor");
    const auto questions = load_entities(resolve_path(args.entities));
    const auto fused = load_embeddings(resolve_path(args.fused));
    const auto vocab = load_vocab(resolve_path(args.vocab));

    // context file: JSON-lines {"id", "context"} or {"id", "tokens": [...]}
    std::map<std::string, std::vector<std::string>> contexts;
    if (!args.contexts.empty()) {
        const std::string path = resolve_path(args.contexts);
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open context file '" + path + "'");
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            bool blank = true;
            for (unsigned char c : line) blank = blank && std::isspace(c);
            if (blank) continue;
            try {
                const auto j = nlohmann::json::parse(line);
                const auto id = j.at("id").get<std::string>();
                if (j.contains("tokens"))
                    contexts[id] = j.at("tokens").get<std::vector<std::string>>();
                else
                    contexts[id] = tokenize(j.at("context").get<std::string>(), vocab,
                                            args.lowercase);
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
    }

    std::vector<AugmentedSequence> sequences;
    sequences.reserve(questions.size());
    for (const auto& q : questions) {
        const auto ctx_it = contexts.find(q.id);
        const std::vector<std::string> ctx =
            ctx_it != contexts.end() ? ctx_it->second : std::vector<std::string>{};
        AugmentedSequence seq =
            args.layout == "bertram"
                ? build_bertram(q.question, q.entities, ctx, fused, vocab, args.max_len,
                                args.lowercase)
                : build_dekcor(q.question, q.entities, ctx, fused, vocab, args.max_len,
                               args.lowercase);
        seq.id = q.id;
        sequences.push_back(std::move(seq));
    }
    write_sequences(sequences, fused, resolve_path(args.out), args.inline_vectors);
    std::cerr << "wrote " << sequences.size() << " sequences (" << args.layout << ")\n";
    return 0;
}

// --------------------------------------------------------------------- eval

struct EvalArgs {
    std::string predicted, targets, out, keys_file;
    std::uint64_t k = 1;
    std::string metric = "cosine";
};

int run_eval(const EvalArgs& args) {
    ConfigEcho echo{"eval", {}};
    echo.add("predicted", args.predicted);
    echo.add("targets", args.targets);
    echo.add("keys", args.keys_file.empty() ? std::string("(all predicted)") : args.keys_file);
    echo.add("k", args.k);
    echo.add("metric", args.metric);
    echo.add("out", args.out.empty() ? std::string("(stdout)") : args.out);
    echo.add("seed", std::uint64_t{0});
    echo.print();

    if (args.metric != "cosine" && args.metric != "euclidean")
        throw ValidationError("eval: metric must be cosine or euclidean");
    const auto predicted = load_embeddings(resolve_path(args.predicted));
    const auto targets = load_embeddings(resolve_path(args.targets));
    std::vector<std::string> keys;
    if (!args.keys_file.empty()) {
        keys = load_key_file(resolve_path(args.keys_file));
    } else {
        for (const auto& [name, vec] : predicted.entries()) keys.push_back(name);
    }

    const RetrievalMetric metric =
        args.metric == "cosine" ? RetrievalMetric::kCosine : RetrievalMetric::kEuclidean;
    const double mse_value = mse(predicted, targets, keys);
    const double cosine_value = mean_cosine(predicted, targets, keys);
    // retrieval needs at least two candidates; reported as null below that
    const std::string precision =
        keys.size() >= 2
            ? json_num(retrieval_precision_at_k(predicted, targets, keys, args.k, metric))
            : "null";

    std::ostringstream os;
    os << "{\"mse\":" << json_num(mse_value) << ",\"mean_cosine\":" << json_num(cosine_value)
       << ",\"precision_at_k\":" << precision << ",\"n\":" << keys.size()
       << ",\"k\":" << args.k << ",\"settings\":{\"metric\":" << json_str(args.metric)
       << ",\"predicted\":" << json_str(args.predicted)
       << ",\"targets\":" << json_str(args.targets) << "}}\n";
    if (args.out.empty()) {
        std::cout << os.str();
    } else {
        std::ofstream out(resolve_path(args.out), std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + args.out + "' for writing");
        out << os.str();
    }
    return 0;
}

// --------------------------------------------------------------- embed-defs

struct EmbedDefsArgs {
    std::string definitions, lm, vocab, out;
    bool lowercase = true;
};

int run_embed_defs(const EmbedDefsArgs& args) {
    ConfigEcho echo{"embed-defs", {}};
    echo.add("definitions", args.definitions);
    echo.add("lm", args.lm);
    echo.add("vocab", args.vocab);
    echo.add("lowercase", args.lowercase);
    echo.add("out", args.out);
    echo.add("seed", std::uint64_t{0});
    echo.print();
    std::cerr << "note: static pooler proxy (mean of static token embeddings), "
                 "not a transformer pooler output\n";

    const auto lm = load_embeddings(resolve_path(args.lm));
    const auto vocab = load_vocab(resolve_path(args.vocab));
    const std::string path = resolve_path(args.definitions);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open definitions file '" + path + "'");

    std::vector<EmbeddingTable::Entry> entries;
    std::string line;
    std::size_t line_no = 0, skipped = 0;
    while (std::getline(in, line)) {
        ++line_no;
        bool blank = true;
        for (unsigned char c : line) blank = blank && std::isspace(c);
        if (blank) continue;
        std::string key, text;
        try {
            const auto j = nlohmann::json::parse(line);
            key = j.at("key").get<std::string>();
            text = j.at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        try {
            entries.emplace_back(key, pooler_proxy(text, lm, vocab, args.lowercase));
        } catch (const ValidationError& e) {
            std::cerr << "skipped '" << key << "': " << e.what() << "\n";
            ++skipped;
        }
    }
    if (entries.empty()) throw ValidationError("embed-defs: no definition produced a vector");
    const auto table = EmbeddingTable::from_entries(std::move(entries), lm.dim());
    save_embeddings(table, resolve_path(args.out));
    std::cerr << "embedded " << table.size() << " definitions, skipped " << skipped << "\n";
    return 0;
}

// ---------------------------------------------------------------- selfcheck

int run_selfcheck_cmd(std::uint64_t seed) {
    ConfigEcho echo{"selfcheck", {}};
    echo.add("seed", seed);
    echo.print();
    bool all = true;
    for (const auto& r : run_selfcheck(seed)) {
        std::cout << (r.passed ? "PASS" : "FAIL") << "  " << r.name << ": " << r.detail << "\n";
        all = all && r.passed;
    }
    if (!all) std::cerr << "selfcheck failed\n";
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge-graph embedding homogenization pipeline"};
    app.require_subcommand(1);

    BuildTargetsArgs bt;
    auto* bt_cmd = app.add_subcommand(
        "build-targets", "Pair KGE vectors with subword-mean LM targets from entity annotations");
    bt_cmd->add_option("--entities", bt.entities, "Entity annotations (JSON-lines)")->required();
    bt_cmd->add_option("--kge", bt.kge, "KGE table (word2vec text)")->required();
    bt_cmd->add_option("--lm", bt.lm, "LM token-embedding table (word2vec text)")->required();
    bt_cmd->add_option("--vocab", bt.vocab, "Vocabulary file, one token per line")->required();
    bt_cmd->add_option("--out-sources", bt.out_sources, "Output source table")->required();
    bt_cmd->add_option("--out-targets", bt.out_targets, "Output target table")->required();
    bt_cmd->add_flag("!--no-lowercase", bt.lowercase, "Disable lowercasing");
    bt_cmd->add_flag("--require-definition", bt.require_definition,
                     "Keep only entities that reference a definition");
    bt_cmd->add_option("--sample", bt.sample, "Uniform seeded sample of this many entities");
    bt_cmd->add_option("--seed", bt.seed, "Sampling seed");

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "Fit an alignment model on a paired dataset");
    fit_cmd->add_option("--method", fit_args.method, "mlp | linear | orthogonal")->required();
    fit_cmd->add_option("--sources", fit_args.sources, "Source table")->required();
    fit_cmd->add_option("--targets", fit_args.targets, "Target table")->required();
    fit_cmd->add_option("--out", fit_args.out, "Output model file (JSON)")->required();
    double ridge_value = 0.0;
    auto* ridge_opt = fit_cmd->add_option("--ridge", ridge_value, "Ridge penalty (linear)");
    fit_cmd->add_flag("--no-auto-ridge", fit_args.no_auto_ridge,
                      "Fail instead of retrying a rank-deficient fit with ridge 1e-6");
    fit_cmd->add_option("--normalize-iters", fit_args.normalize_iters,
                        "Iterative-normalization passes over the sources before fitting");
    fit_cmd->add_option("--normalize-tol", fit_args.normalize_tol,
                        "Iterative-normalization tolerance");
    fit_cmd->add_flag("--normalize-targets", fit_args.normalize_targets,
                      "Also normalize the target table");
    fit_cmd->add_option("--seed", fit_args.train.seed, "Training seed");
    add_train_flags(fit_cmd, fit_args.train);

    ApplyArgs apply_args;
    auto* apply_cmd = app.add_subcommand("apply", "Apply a fitted model to an embedding table");
    apply_cmd->add_option("--model", apply_args.model, "Model file")->required();
    apply_cmd->add_option("--table", apply_args.table, "Input table")->required();
    apply_cmd->add_option("--out", apply_args.out, "Output table")->required();
    apply_cmd->add_option("--keys", apply_args.keys_file, "Key file (default: every table key)");

    FuseArgs fuse_args;
    auto* fuse_cmd =
        app.add_subcommand("fuse", "Average homogenized and definition tables per key");
    fuse_cmd->add_option("--homogenized", fuse_args.homogenized, "Homogenized KGE table");
    fuse_cmd->add_option("--definitions", fuse_args.definitions, "Definition-embedding table");
    fuse_cmd->add_option("--out", fuse_args.out, "Output table")->required();
    fuse_cmd->add_option("--keys", fuse_args.keys_file, "Key file (default: union of inputs)");
    std::uint64_t random_seed_value = 0;
    auto* random_seed_opt = fuse_cmd->add_option(
        "--random-seed", random_seed_value, "Swap in the random baseline with this seed");
    fuse_cmd->add_option("--random-dim", fuse_args.random_dim,
                         "Dimension for the random baseline (default: input dimension)");

    AugmentArgs aug;
    auto* aug_cmd =
        app.add_subcommand("augment", "Emit knowledge-augmented sequences as JSON-lines");
    aug_cmd->add_option("--layout", aug.layout, "bertram | dekcor")->required();
    aug_cmd->add_option("--entities", aug.entities, "Entity annotations (JSON-lines)")->required();
    aug_cmd->add_option("--fused", aug.fused, "Fused external-knowledge table")->required();
    aug_cmd->add_option("--vocab", aug.vocab, "Vocabulary file")->required();
    aug_cmd->add_option("--contexts", aug.contexts,
                        "Context file (JSON-lines {id, context} or {id, tokens})");
    aug_cmd->add_option("--max-len", aug.max_len, "Maximum sequence length");
    aug_cmd->add_flag("--inline-vectors", aug.inline_vectors,
                      "Store vectors inline on each unit instead of a side table");
    aug_cmd->add_flag("!--no-lowercase", aug.lowercase, "Disable lowercasing");
    aug_cmd->add_option("--out", aug.out, "Output JSON-lines file")->required();

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Score predictions against targets");
    eval_cmd->add_option("--predicted", eval_args.predicted, "Predicted table")->required();
    eval_cmd->add_option("--targets", eval_args.targets, "Target table")->required();
    eval_cmd->add_option("--keys", eval_args.keys_file, "Key file (default: predicted keys)");
    eval_cmd->add_option("--k", eval_args.k, "Retrieval cutoff");
    eval_cmd->add_option("--metric", eval_args.metric, "cosine | euclidean");
    eval_cmd->add_option("--out", eval_args.out, "Report file (default: stdout)");

    EmbedDefsArgs defs_args;
    auto* defs_cmd = app.add_subcommand(
        "embed-defs", "Static pooler proxy: mean static token embedding per definition text");
    defs_cmd->add_option("--definitions", defs_args.definitions,
                         "JSON-lines {key, text} definitions")->required();
    defs_cmd->add_option("--lm", defs_args.lm, "LM token-embedding table")->required();
    defs_cmd->add_option("--vocab", defs_args.vocab, "Vocabulary file")->required();
    defs_cmd->add_option("--out", defs_args.out, "Output table")->required();
    defs_cmd->add_flag("!--no-lowercase", defs_args.lowercase, "Disable lowercasing");

    std::uint64_t selfcheck_seed = 20240500;
    auto* check_cmd =
        app.add_subcommand("selfcheck", "Run the gradient and oracle-recovery suites");
    check_cmd->add_option("--seed", selfcheck_seed, "Suite seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*bt_cmd) return run_build_targets(bt);
        if (*fit_cmd) {
            if (ridge_opt->count() > 0) fit_args.ridge = ridge_value;
            return run_fit(fit_args);
        }
        if (*apply_cmd) return run_apply(apply_args);
        if (*fuse_cmd) {
            if (random_seed_opt->count() > 0) fuse_args.random_seed = random_seed_value;
            return run_fuse(fuse_args);
        }
        if (*aug_cmd) return run_augment(aug);
        if (*eval_cmd) return run_eval(eval_args);
        if (*defs_cmd) return run_embed_defs(defs_args);
        if (*check_cmd) return run_selfcheck_cmd(selfcheck_seed);
        std::cerr << "error: no subcommand selected\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
