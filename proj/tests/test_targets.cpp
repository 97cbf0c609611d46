#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "kgalign/targets.hpp"
#include "test_util.hpp"

using namespace kgalign;

namespace {

EmbeddingTable lm_table() {
    return EmbeddingTable::from_entries({
        {"cy", {1.0, 2.0, 3.0}},
        {"##stein", {4.0, -1.0, 0.0}},
        {"##e", {-2.0, 5.0, 6.0}},
        {"children", {0.5, 0.5, 0.5}},
        {"virus", {1.0, 0.0, 0.0}},
        {"swab", {2.0, 2.0, 2.0}},
        {"test", {-2.0, -2.0, -2.0}},
    });
}

}  // namespace

TEST_CASE("target is the mean of the subword vectors") {
    const auto vocab = testutil::example_vocab();
    const auto target = build_target("cysteine", lm_table(), vocab);
    REQUIRE(target.size() == 3);
    REQUIRE(target[0] == Catch::Approx((1.0 + 4.0 - 2.0) / 3.0).margin(1e-15));
    REQUIRE(target[1] == Catch::Approx((2.0 - 1.0 + 5.0) / 3.0).margin(1e-15));
    REQUIRE(target[2] == Catch::Approx((3.0 + 0.0 + 6.0) / 3.0).margin(1e-15));
}

TEST_CASE("single-token entity returns that vector unchanged") {
    const auto vocab = testutil::example_vocab();
    const auto target = build_target("children", lm_table(), vocab);
    REQUIRE(target == std::vector<double>{0.5, 0.5, 0.5});
}

TEST_CASE("opposite subword vectors cancel to zero") {
    const auto vocab = testutil::example_vocab();
    const auto target = build_target("swab test", lm_table(), vocab);
    for (double v : target) REQUIRE(v == 0.0);
}

TEST_CASE("missing subword vector is an error") {
    const auto vocab = testutil::example_vocab();
    // "what" tokenizes fine but has no LM vector
    REQUIRE_THROWS_AS(build_target("what", lm_table(), vocab), ValidationError);
}

TEST_CASE("target infinity norm never exceeds the subword bound") {
    const auto vocab = testutil::example_vocab();
    const auto table = lm_table();
    for (const std::string name : {"cysteine", "swab test", "children virus"}) {
        const auto target = build_target(name, table, vocab);
        double target_max = 0.0;
        for (double v : target) target_max = std::max(target_max, std::abs(v));
        double subword_max = 0.0;
        for (const auto& tok : tokenize(name, vocab))
            for (double v : table.vector_for(tok)) subword_max = std::max(subword_max, std::abs(v));
        REQUIRE(target_max <= subword_max + 1e-12);
    }
}

TEST_CASE("build_target_set pairs sources with targets in input order") {
    const auto vocab = testutil::example_vocab();
    const auto kge = EmbeddingTable::from_entries(
        {{"K1", {1.0, 0.0}}, {"K2", {0.0, 1.0}}, {"K3", {1.0, 1.0}}});
    SECTION("all resolvable") {
        const auto result = build_target_set({{"K1", "cysteine"}, {"K2", "children"}}, kge,
                                             lm_table(), vocab);
        REQUIRE(result.pairs.size() == 2);
        REQUIRE(result.skipped.empty());
        REQUIRE(result.pairs.keys == std::vector<std::string>{"K1", "K2"});
        REQUIRE(result.pairs.d_src() == 2);
        REQUIRE(result.pairs.d_tgt() == 3);
        REQUIRE(result.pairs.x.at(0, 0) == 1.0);
        REQUIRE(result.pairs.z.at(1, 0) == 0.5);
    }
    SECTION("unresolvable target is skipped and reported") {
        const auto result = build_target_set(
            {{"K1", "cysteine"}, {"K2", "what"}, {"K3", "children"}}, kge, lm_table(), vocab);
        REQUIRE(result.pairs.size() == 2);
        REQUIRE(result.skipped.size() == 1);
        REQUIRE(result.skipped[0].key == "K2");
        REQUIRE(result.pairs.keys == std::vector<std::string>{"K1", "K3"});
    }
    SECTION("missing KGE key is skipped and reported") {
        const auto result =
            build_target_set({{"K1", "cysteine"}, {"K9", "children"}}, kge, lm_table(), vocab);
        REQUIRE(result.pairs.size() == 1);
        REQUIRE(result.skipped.size() == 1);
        REQUIRE(result.skipped[0].key == "K9");
    }
    SECTION("nothing resolvable is an error") {
        REQUIRE_THROWS_AS(build_target_set({{"K1", "what"}}, kge, lm_table(), vocab),
                          ValidationError);
    }
}

TEST_CASE("permuting the entity list permutes the output identically") {
    const auto vocab = testutil::example_vocab();
    const auto kge = EmbeddingTable::from_entries(
        {{"K1", {1.0, 0.0}}, {"K2", {0.0, 1.0}}, {"K3", {1.0, 1.0}}});
    const std::vector<std::pair<std::string, std::string>> forward{
        {"K1", "cysteine"}, {"K2", "children"}, {"K3", "virus"}};
    std::vector<std::pair<std::string, std::string>> reversed(forward.rbegin(), forward.rend());

    const auto a = build_target_set(forward, kge, lm_table(), vocab);
    const auto b = build_target_set(reversed, kge, lm_table(), vocab);
    REQUIRE(a.pairs.size() == b.pairs.size());
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
        const std::size_t j = b.pairs.size() - 1 - i;
        REQUIRE(a.pairs.keys[i] == b.pairs.keys[j]);
        for (std::size_t c = 0; c < a.pairs.d_src(); ++c)
            REQUIRE(a.pairs.x.at(i, c) == b.pairs.x.at(j, c));
        for (std::size_t c = 0; c < a.pairs.d_tgt(); ++c)
            REQUIRE(a.pairs.z.at(i, c) == b.pairs.z.at(j, c));
    }
}

TEST_CASE("build_target_set holds up at corpus scale") {
    // 10k entities over a 50 -> 16 pairing, the shape of a full training set
    const std::size_t n = 10000;
    kgalign::SplitRng rng(777);
    std::vector<EmbeddingTable::Entry> kge_entries;
    std::vector<std::pair<std::string, std::string>> entities;
    const std::vector<std::string> names{"cysteine", "children", "virus", "swab test",
                                         "hiv 1 infection", "main cause"};
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> v(50);
        for (double& x : v) x = rng.next_uniform(-1.0, 1.0);
        kge_entries.emplace_back("C" + std::to_string(i), std::move(v));
        entities.emplace_back("C" + std::to_string(i), names[i % names.size()]);
    }
    const auto kge = EmbeddingTable::from_entries(std::move(kge_entries), 50);

    std::vector<EmbeddingTable::Entry> lm_entries;
    const auto vocab = testutil::example_vocab();
    for (const auto& tok : vocab.tokens()) {
        std::vector<double> v(16);
        for (double& x : v) x = rng.next_uniform(-1.0, 1.0);
        lm_entries.emplace_back(tok, std::move(v));
    }
    const auto lm = EmbeddingTable::from_entries(std::move(lm_entries), 16);

    const auto result = build_target_set(entities, kge, lm, vocab);
    REQUIRE(result.pairs.size() == n);
    REQUIRE(result.skipped.empty());
    REQUIRE(result.pairs.d_src() == 50);
    REQUIRE(result.pairs.d_tgt() == 16);
}

TEST_CASE("paired datasets round-trip through aligned tables") {
    const auto vocab = testutil::example_vocab();
    const auto kge = EmbeddingTable::from_entries({{"K1", {1.0, 0.0}}, {"K2", {0.0, 1.0}}});
    const auto result =
        build_target_set({{"K1", "cysteine"}, {"K2", "children"}}, kge, lm_table(), vocab);
    const auto [src, tgt] = tables_from_pairs(result.pairs);
    const auto back = pairs_from_tables(src, tgt);
    REQUIRE(back.keys == result.pairs.keys);
    REQUIRE(back.x == result.pairs.x);
    REQUIRE(back.z == result.pairs.z);

    const auto other = EmbeddingTable::from_entries({{"OTHER", {1.0, 2.0, 3.0}}});
    REQUIRE_THROWS_AS(pairs_from_tables(src, other), ValidationError);
}
