#include <doctest.h>

#include <cstdio>
#include <set>
#include <sstream>

#include "dime/metaprox.hpp"
#include "oracles.hpp"

using namespace dime;
using namespace dime::metaprox;

namespace {

netcore::HeterogeneousNetwork parse(const std::string& text) {
    std::istringstream in(text);
    return netcore::parse_network(in, "<test>");
}

}  // namespace

TEST_CASE("catalog lists the eight social meta paths in order") {
    const auto& paths = catalog();
    CHECK(paths.size() == 8);
    for (int k = 0; k < 8; ++k) CHECK(paths[k].id == k);
    CHECK(paths[0].steps == std::vector<Relation>{Relation::follow});
    CHECK(paths[2].steps == std::vector<Relation>{Relation::follow, Relation::follow_inv});
    CHECK(paths[4].steps ==
          std::vector<Relation>{Relation::follow_inv, Relation::follow_inv});
    CHECK(paths[7].steps ==
          std::vector<Relation>{Relation::write, Relation::have_location,
                                Relation::have_location_inv, Relation::write_inv});
}

TEST_CASE("phi2 counts common out-neighbors") {
    // u1->u2, u1->u3, u4->u2: one common out-neighbor between u1 and u4
    auto net = parse("U u1\nU u2\nU u3\nU u4\nF u1 u2\nF u1 u3\nF u4 u2\n");
    auto counts = count_path_instances(net, catalog()[2]);
    CHECK(counts.at(0, 3) == 1);
    CHECK(counts.at(3, 0) == 1);
    CHECK(counts.at(0, 0) == 0);  // diagonal zeroed
    CHECK(counts.at(0, 1) == 0);

    auto prox = meta_proximity(net, catalog()[2]);
    CHECK(prox.scores.at(0, 3) == doctest::Approx(1.0));
}

TEST_CASE("phi1 counts two-hop chains") {
    auto net = parse("U a\nU b\nU c\nF a b\nF b c\n");
    auto counts = count_path_instances(net, catalog()[1]);
    CHECK(counts.at(0, 2) == 1);
    CHECK(counts.nnz() == 1);
}

TEST_CASE("phi5 scores users sharing one word") {
    auto net = parse("U a\nU b\nP p1 a\nP p2 b\nAW p1 common\nAW p2 common\n");
    auto counts = count_path_instances(net, catalog()[5]);
    CHECK(counts.at(0, 1) == 1);
    CHECK(counts.at(1, 0) == 1);
    auto prox = meta_proximity(net, catalog()[5]);
    CHECK(prox.scores.at(0, 1) == doctest::Approx(1.0));
    CHECK(prox.scores.at(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("empty relations give zero matrices") {
    auto net = parse("U a\nU b\n");
    for (const auto& phi : catalog()) {
        auto counts = count_path_instances(net, phi);
        CHECK(counts.nnz() == 0);
    }
}

TEST_CASE("friendship proximity is the binary follow indicator") {
    auto net = parse("U a\nU b\nU c\nF a b\n");
    auto prox = friendship_proximity(net);
    CHECK(prox.scores.at(0, 1) == 1.0);
    CHECK(prox.scores.at(1, 0) == 0.0);
    CHECK(prox.scores.nnz() == 1);

    auto empty = friendship_proximity(parse("U a\nU b\n"));
    CHECK(empty.scores.nnz() == 0);

    auto complete = parse("U a\nU b\nU c\nF a b\nF a c\nF b a\nF b c\nF c a\nF c b\n");
    auto full = friendship_proximity(complete);
    CHECK(full.scores.nnz() == 6);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(full.scores.at(i, j) == (i == j ? 0.0 : 1.0));
}

TEST_CASE("meta_proximity rejects phi0") {
    auto net = parse("U a\nU b\nF a b\n");
    CHECK_THROWS_AS(meta_proximity(net, catalog()[0]), Error);
}

TEST_CASE("bundle is ordered phi0..phi7 and zero for missing channels") {
    auto net = parse("U a\nU b\nF a b\nF b a\n");  // follows only, no posts
    auto bundle = proximity_bundle(net);
    CHECK(bundle.size() == 8);
    for (int k = 0; k < 8; ++k) CHECK(bundle[k].path_id == k);
    for (int k = 5; k < 8; ++k) CHECK(bundle[k].scores.nnz() == 0);
}

TEST_CASE("counts match exhaustive enumeration on random networks") {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        auto net = oracles::random_network(1000 + seed, 12, 15);
        for (const auto& phi : catalog()) {
            const auto expected = oracles::brute_force_counts(net, phi);
            const auto got = count_path_instances(net, phi);
            for (int i = 0; i < net.user_count(); ++i)
                for (int j = 0; j < net.user_count(); ++j)
                    CHECK(got.at(i, j) == expected[i][j]);
        }
    }
}

TEST_CASE("proximity entries stay in [0,1] and vanish exactly with counts") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto net = oracles::random_network(2000 + seed, 14, 20);
        for (int k = 1; k < 8; ++k) {
            const auto counts = count_path_instances(net, catalog()[k]);
            const auto prox = meta_proximity(net, catalog()[k]);
            for (int i = 0; i < net.user_count(); ++i) {
                for (int j = 0; j < net.user_count(); ++j) {
                    const double p = prox.scores.at(i, j);
                    CHECK(p >= 0.0);
                    CHECK(p <= 1.0);
                    CHECK((p == 0.0) == (counts.at(i, j) == 0));
                }
            }
        }
    }
}

TEST_CASE("phi0 support shrinks monotonically as lambda decreases") {
    auto net = oracles::random_network(77, 16, 0);
    auto support = [](const netcore::HeterogeneousNetwork& n) {
        std::set<std::pair<int, int>> s;
        for (auto& [u, v] : n.follow_edges) s.insert({u, v});
        return s;
    };
    // nested sampling: resample the smaller network from the larger draw
    auto s100 = support(net);
    auto n50 = netcore::sample_network(net, 0.5, 5);
    auto s50 = support(n50);
    auto n25 = netcore::sample_network(n50, 0.5, 5);
    auto s25 = support(n25);
    for (const auto& e : s25) CHECK(s50.count(e) == 1);
    for (const auto& e : s50) CHECK(s100.count(e) == 1);
}

TEST_CASE("self_in_norms only changes the normalization sums") {
    // a->b, b->a gives phi2 self instances a-(b)-a which the default drops
    auto net = parse("U a\nU b\nU c\nF a b\nF b a\nF c b\n");
    auto def = meta_proximity(net, catalog()[2]);
    auto with_self = meta_proximity(net, catalog()[2], {.self_in_norms = true});
    CHECK(def.scores.indices == with_self.scores.indices);
    CHECK(def.row_counts[0] <= with_self.row_counts[0]);
    bool some_smaller = false;
    for (std::int64_t p = 0; p < def.scores.nnz(); ++p)
        if (with_self.scores.data[p] < def.scores.data[p]) some_smaller = true;
    CHECK(some_smaller);
}

TEST_CASE("bundle persists and reloads byte-for-byte equal") {
    auto net = oracles::random_network(31337, 15, 18);
    auto bundle = proximity_bundle(net);
    const std::string path = "test_bundle.bin";
    save_bundle(path, bundle);
    auto reloaded = load_bundle(path);
    REQUIRE(reloaded.size() == bundle.size());
    for (std::size_t i = 0; i < bundle.size(); ++i) CHECK(reloaded[i] == bundle[i]);
    std::remove(path.c_str());
}
