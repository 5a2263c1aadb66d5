#include <doctest.h>

#include <cmath>

#include "dime/netcore.hpp"
#include "dime/synthgen.hpp"

using namespace dime;
using namespace dime::synthgen;

TEST_CASE("generation is deterministic under seed") {
    SynthConfig cfg;
    cfg.users = 40;
    cfg.seed = 12;
    auto a = generate_pair(cfg);
    auto b = generate_pair(cfg);
    CHECK(netcore::serialize_network(a.pair.emerging) ==
          netcore::serialize_network(b.pair.emerging));
    CHECK(netcore::serialize_network(a.pair.mature) ==
          netcore::serialize_network(b.pair.mature));
    CHECK(a.pair.anchors == b.pair.anchors);
    CHECK(a.labels_emerging == b.labels_emerging);
}

TEST_CASE("anchor fraction one gives a full permutation matching") {
    SynthConfig cfg;
    cfg.users = 30;
    cfg.anchor_fraction = 1.0;
    cfg.seed = 3;
    auto r = generate_pair(cfg);
    CHECK(r.pair.anchors.size() == 30);
    auto t = netcore::build_transition_matrix(r.pair);
    for (int i = 0; i < t.rows; ++i) CHECK(t.partner_of_g1[i] >= 0);
    for (int j = 0; j < t.cols; ++j) CHECK(t.partner_of_g2[j] >= 0);
}

TEST_CASE("degenerate probabilities give two disjoint directed cliques") {
    SynthConfig cfg;
    cfg.users = 12;
    cfg.communities = 2;
    cfg.intra_p = 1.0;
    cfg.inter_p = 0.0;
    cfg.emergence = 1.0;
    cfg.posts_per_user = 0.0;
    cfg.seed = 9;
    auto r = generate_pair(cfg);
    const auto& net = r.pair.mature;
    for (int u = 0; u < net.user_count(); ++u) {
        for (int v = 0; v < net.user_count(); ++v) {
            if (u == v) continue;
            const bool same = r.labels_mature[u] == r.labels_mature[v];
            CHECK(net.has_follow(u, v) == same);
        }
    }
}

TEST_CASE("anchored users share their community label across networks") {
    SynthConfig cfg;
    cfg.users = 50;
    cfg.seed = 21;
    auto r = generate_pair(cfg);
    CHECK(!r.pair.anchors.empty());
    for (const auto& [a, b] : r.pair.anchors)
        CHECK(r.labels_emerging[a] == r.labels_mature[b]);
}

TEST_CASE("emergence factor thins edges toward the configured ratio") {
    SynthConfig cfg;
    cfg.users = 80;
    cfg.seed = 0;
    double g1_edges = 0.0, g2_edges = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        cfg.seed = 100 + s;
        auto r = generate_pair(cfg);
        g1_edges += static_cast<double>(r.pair.emerging.follow_count());
        g2_edges += static_cast<double>(r.pair.mature.follow_count());
    }
    const double ratio = g1_edges / g2_edges;
    CHECK(ratio == doctest::Approx(cfg.emergence).epsilon(0.15));
}

TEST_CASE("intra-edge fraction sits within three binomial deviations") {
    SynthConfig cfg;
    cfg.users = 100;
    cfg.communities = 4;
    cfg.seed = 17;
    auto r = generate_pair(cfg);
    const auto& net = r.pair.mature;
    std::int64_t intra_pairs = 0, inter_pairs = 0, intra_edges = 0, inter_edges = 0;
    for (int u = 0; u < net.user_count(); ++u) {
        for (int v = 0; v < net.user_count(); ++v) {
            if (u == v) continue;
            const bool same = r.labels_mature[u] == r.labels_mature[v];
            (same ? intra_pairs : inter_pairs) += 1;
            if (net.has_follow(u, v)) (same ? intra_edges : inter_edges) += 1;
        }
    }
    auto check_rate = [](std::int64_t hits, std::int64_t n, double p) {
        const double sd = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
        CHECK(std::abs(static_cast<double>(hits) - static_cast<double>(n) * p) <= 3.0 * sd);
    };
    check_rate(intra_edges, intra_pairs, cfg.intra_p);
    check_rate(inter_edges, inter_pairs, cfg.inter_p);
}

TEST_CASE("infeasible configs are rejected") {
    SynthConfig cfg;
    cfg.communities = 0;
    CHECK_THROWS_AS(generate_pair(cfg), Error);
    cfg = {};
    cfg.intra_p = 0.01;
    cfg.inter_p = 0.5;
    CHECK_THROWS_AS(generate_pair(cfg), Error);
    cfg = {};
    cfg.emergence = 0.0;
    CHECK_THROWS_AS(generate_pair(cfg), Error);
    cfg = {};
    cfg.anchor_fraction = 1.5;
    CHECK_THROWS_AS(generate_pair(cfg), Error);
    cfg = {};
    cfg.vocabulary = 1;
    CHECK_THROWS_AS(generate_pair(cfg), Error);
}

TEST_CASE("attribute skew concentrates tokens in the community block") {
    SynthConfig cfg;
    cfg.users = 60;
    cfg.attribute_skew = 0.9;
    cfg.seed = 33;
    auto r = generate_pair(cfg);
    const auto& net = r.pair.mature;
    const int block = cfg.vocabulary / cfg.communities;
    std::int64_t in_block = 0, total = 0;
    for (int p = 0; p < net.post_count(); ++p) {
        const int c = r.labels_mature[net.post_author[p]];
        for (int w : net.post_words[p]) {
            const int tok = std::stoi(net.words.tokens[w].substr(1));
            ++total;
            if (tok >= c * block && tok < (c + 1) * block) ++in_block;
        }
    }
    REQUIRE(total > 0);
    // at skew .9 with 4 blocks the expected in-block rate is ~.925
    CHECK(static_cast<double>(in_block) / static_cast<double>(total) > 0.8);
}
