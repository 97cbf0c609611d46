#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "kgalign/eval.hpp"
#include "kgalign/selfcheck.hpp"
#include "kgalign/train.hpp"
#include "test_util.hpp"

using namespace kgalign;

TEST_CASE("mse basics") {
    const auto a = EmbeddingTable::from_entries({{"k", {1.0, 1.0}}});
    const auto zero = EmbeddingTable::from_entries({{"k", {0.0, 0.0}}});
    REQUIRE(mse(a, a, {"k"}) == 0.0);
    REQUIRE(mse(a, zero, {"k"}) == 1.0);
    REQUIRE_THROWS_AS(mse(a, zero, {}), ValidationError);
}

TEST_CASE("mse is invariant under key reordering") {
    const auto pred = testutil::random_table({"a", "b", "c", "d"}, 6, 31);
    const auto tgt = testutil::random_table({"a", "b", "c", "d"}, 6, 32);
    const double forward = mse(pred, tgt, {"a", "b", "c", "d"});
    const double backward = mse(pred, tgt, {"d", "c", "b", "a"});
    REQUIRE(forward == Catch::Approx(backward).epsilon(1e-15));
}

TEST_CASE("mean_cosine hits its landmark values") {
    const auto t = testutil::random_table({"a", "b"}, 8, 33);
    REQUIRE(mean_cosine(t, t, {"a", "b"}) == Catch::Approx(1.0).margin(1e-12));

    std::vector<EmbeddingTable::Entry> neg;
    for (const auto& [name, vec] : t.entries()) {
        std::vector<double> v(vec);
        for (double& x : v) x = -x;
        neg.emplace_back(name, std::move(v));
    }
    const auto negated = EmbeddingTable::from_entries(std::move(neg), 8);
    REQUIRE(mean_cosine(negated, t, {"a", "b"}) == Catch::Approx(-1.0).margin(1e-12));

    const auto ex = EmbeddingTable::from_entries({{"k", {1.0, 0.0}}});
    const auto ey = EmbeddingTable::from_entries({{"k", {0.0, 1.0}}});
    REQUIRE(mean_cosine(ex, ey, {"k"}) == Catch::Approx(0.0).margin(1e-12));

    const auto zero = EmbeddingTable::from_entries({{"k", {0.0, 0.0}}});
    REQUIRE_THROWS_AS(mean_cosine(zero, ex, {"k"}), ValidationError);
}

TEST_CASE("mean_cosine ignores uniform positive scaling of predictions") {
    const auto pred = testutil::random_table({"a", "b", "c"}, 5, 34);
    const auto tgt = testutil::random_table({"a", "b", "c"}, 5, 35);
    std::vector<EmbeddingTable::Entry> scaled;
    for (const auto& [name, vec] : pred.entries()) {
        std::vector<double> v(vec);
        for (double& x : v) x *= 7.5;
        scaled.emplace_back(name, std::move(v));
    }
    const auto pred_scaled = EmbeddingTable::from_entries(std::move(scaled), 5);
    REQUIRE(mean_cosine(pred, tgt, {"a", "b", "c"}) ==
            Catch::Approx(mean_cosine(pred_scaled, tgt, {"a", "b", "c"})).epsilon(1e-12));
}

TEST_CASE("retrieval precision landmarks") {
    const std::vector<std::string> keys{"a", "b", "c", "d", "e"};
    const auto t = testutil::random_table(keys, 12, 36);
    REQUIRE(retrieval_precision_at_k(t, t, keys, 1) == 1.0);
    REQUIRE(retrieval_precision_at_k(t, t, keys, keys.size()) == 1.0);

    // cyclic shift of predictions: nobody's own target is nearest
    std::vector<EmbeddingTable::Entry> shifted;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const auto v = t.vector_for(keys[(i + 1) % keys.size()]);
        shifted.emplace_back(keys[i], std::vector<double>(v.begin(), v.end()));
    }
    const auto deranged = EmbeddingTable::from_entries(std::move(shifted), 12);
    REQUIRE(retrieval_precision_at_k(deranged, t, keys, 1) == 0.0);
    REQUIRE(retrieval_precision_at_k(deranged, t, keys, keys.size()) == 1.0);
}

TEST_CASE("retrieval precision is non-decreasing in k") {
    const std::vector<std::string> keys{"a", "b", "c", "d", "e", "f", "g", "h"};
    const auto pred = testutil::random_table(keys, 10, 37);
    const auto tgt = testutil::random_table(keys, 10, 38);
    double prev = 0.0;
    for (std::size_t k = 1; k <= keys.size(); ++k) {
        const double pk = retrieval_precision_at_k(pred, tgt, keys, k, RetrievalMetric::kCosine);
        REQUIRE(pk >= prev);
        prev = pk;
    }
    REQUIRE(prev == 1.0);
}

TEST_CASE("euclidean retrieval is available and sane") {
    const std::vector<std::string> keys{"a", "b", "c"};
    const auto t = testutil::random_table(keys, 6, 39);
    REQUIRE(retrieval_precision_at_k(t, t, keys, 1, RetrievalMetric::kEuclidean) == 1.0);
}

TEST_CASE("retrieval validates its inputs") {
    const auto t = testutil::random_table({"a", "b"}, 4, 40);
    REQUIRE_THROWS_AS(retrieval_precision_at_k(t, t, {"a"}, 1), ValidationError);
    REQUIRE_THROWS_AS(retrieval_precision_at_k(t, t, {"a", "b"}, 0), ValidationError);
}

TEST_CASE("eval mse agrees exactly with the recorded holdout loss") {
    // cross-module consistency: export the trained model and recompute
    SplitRng rng(41);
    Matrix x = checks::random_matrix(200, 5, rng);
    const Matrix a = checks::random_matrix(5, 9, rng, -1.5, 1.5);
    const Matrix b = checks::random_matrix(9, 3, rng);
    Matrix h = matmul(x, a);
    for (double& v : h.flat()) v = std::tanh(v);
    const Matrix z = matmul(h, b);
    const PairedDataset pairs = checks::make_pairs(std::move(x), z);

    TrainConfig cfg;
    cfg.hidden_dim = 16;
    cfg.epochs = 8;
    cfg.batch_size = 32;
    cfg.dropout_p = 0.1;
    cfg.seed = 5;
    const TrainResult result = train(pairs, cfg);

    const auto [src_table, tgt_table] = tables_from_pairs(pairs);
    std::vector<std::string> holdout_keys;
    for (std::size_t idx : result.holdout_indices) holdout_keys.push_back(pairs.keys[idx]);

    const auto exported = export_homogenized(result.model, src_table, holdout_keys);
    const double recomputed = mse(exported, tgt_table, holdout_keys);
    REQUIRE(recomputed == result.history[*result.best_epoch].holdout_mse);
}
