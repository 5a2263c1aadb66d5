#include <doctest.h>

#include <sstream>

#include "dime/netcore.hpp"

using namespace dime;
using namespace dime::netcore;

namespace {

HeterogeneousNetwork parse(const std::string& text, LoadOptions opts = {}) {
    std::istringstream in(text);
    return parse_network(in, "<test>", opts);
}

}  // namespace

TEST_CASE("minimal network loads") {
    auto net = parse("U a\nU b\nF a b\n");
    CHECK(net.user_count() == 2);
    CHECK(net.post_count() == 0);
    CHECK(net.follow_count() == 1);
    CHECK(net.has_follow(0, 1));
    CHECK_FALSE(net.has_follow(1, 0));
}

TEST_CASE("comments and blank lines are skipped") {
    auto net = parse("# header\n\nU a\n  \nU b\n# done\n");
    CHECK(net.user_count() == 2);
}

TEST_CASE("dangling references are rejected with line info") {
    try {
        parse("F a b\n");
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::dangling_reference);
        CHECK(std::string(e.what()).find("<test>:1") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("U a\nP p1 nobody\n"), Error);
    CHECK_THROWS_AS(parse("U a\nAW p9 hello\n"), Error);
}

TEST_CASE("duplicate and self-loop follow edges are rejected") {
    try {
        parse("U a\nU b\nF a b\nF a b\n");
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::duplicate_edge);
    }
    CHECK_THROWS_AS(parse("U a\nF a a\n"), Error);
    CHECK_THROWS_AS(parse("U a\nU a\n"), Error);
}

TEST_CASE("parse errors carry the line number") {
    try {
        parse("U a\nU b\nF a\n");
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::parse);
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("X what\n"), Error);
    CHECK_THROWS_AS(parse("U a\nP p1 a\nAT p1 notanumber\n"), Error);
    CHECK_THROWS_AS(parse("U a\nP p1 a\nAT p1 -5\n"), Error);
}

TEST_CASE("timestamps bucket to hour-of-week by default") {
    auto net = parse("U a\nP p1 a\nP p2 a\nAT p1 7200\nAT p2 612000\n");
    // 7200s -> hour 2; 612000s -> hour 170 -> 170 % 168 = 2
    CHECK(net.times.size() == 1);
    CHECK(net.post_times[0] == net.post_times[1]);

    auto raw = parse("U a\nP p1 a\nP p2 a\nAT p1 7200\nAT p2 612000\n",
                     {TimeBucketing::none});
    CHECK(raw.times.size() == 2);
}

TEST_CASE("attribute attachments deduplicate") {
    auto net = parse("U a\nP p1 a\nAW p1 hi\nAW p1 hi\nAL p1 l1\n");
    CHECK(net.post_words[0].size() == 1);
    CHECK(net.post_locations[0].size() == 1);
}

TEST_CASE("serialization is canonical and round-trips") {
    const std::string messy =
        "U b\nU a\nP p1 b\nF b a\nAW p1 zebra\nAW p1 apple\nAT p1 612000\nAL p1 x\n";
    auto net = parse(messy);
    const std::string canon = serialize_network(net);
    auto reloaded = parse(canon);
    CHECK(serialize_network(reloaded) == canon);
    CHECK(reloaded.user_count() == net.user_count());
    CHECK(reloaded.follow_edges == net.follow_edges);
    // canonical form sorts attribute tokens and rewrites timestamps to bucket
    // representatives
    CHECK(canon.find("AT p1 7200") != std::string::npos);
    CHECK(canon.find("AW p1 apple\nAW p1 zebra") != std::string::npos);
}

TEST_CASE("anchors load and validate") {
    auto g1 = parse("U a\nU b\nU c\n");
    auto g2 = parse("U x\nU y\nU z\n");
    {
        std::istringstream in("a x\n");
        auto pair = parse_anchors(in, "<anchors>", g1, g2);
        CHECK(pair.anchors.size() == 1);
        CHECK(pair.anchors[0] == std::pair<int, int>{0, 0});
    }
    {
        std::istringstream in("a x\na y\n");
        try {
            parse_anchors(in, "<anchors>", g1, g2);
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::non_injective);
        }
    }
    {
        std::istringstream in("a q\n");
        try {
            parse_anchors(in, "<anchors>", g1, g2);
            FAIL("expected error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::unknown_user);
        }
    }
}

TEST_CASE("transition matrix mirrors the anchor set") {
    auto g1 = parse("U a\nU b\n");
    auto g2 = parse("U x\nU y\n");

    AlignedPair none{g1, g2, {}};
    auto t0 = build_transition_matrix(none);
    CHECK(t0.entries().empty());

    AlignedPair one{g1, g2, {{0, 1}}};
    auto t1 = build_transition_matrix(one);
    CHECK(t1.entries() == std::vector<std::pair<int, int>>{{0, 1}});
    CHECK(t1.partner_of_g2[1] == 0);
    CHECK(t1.partner_of_g2[0] == -1);

    AlignedPair ident{g1, g2, {{0, 0}, {1, 1}}};
    auto t2 = build_transition_matrix(ident);
    CHECK(t2.entries() == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
}

TEST_CASE("sampling at lambda=1 is the identity") {
    auto net = parse(
        "U a\nU b\nU c\nF a b\nF b c\nF c a\nP p1 a\nP p2 b\nAW p1 hi\nAL p2 l1\n");
    auto sampled = sample_network(net, 1.0, 99);
    CHECK(serialize_network(sampled) == serialize_network(net));
}

TEST_CASE("sampling keeps exact survivor counts deterministically") {
    NetworkBuilder b;
    for (int u = 0; u < 11; ++u) b.add_user("u" + std::to_string(u));
    for (int u = 0; u < 10; ++u) b.add_follow_index(u, u + 1);
    auto net = b.finish();

    auto s1 = sample_network(net, 0.3, 7);
    auto s2 = sample_network(net, 0.3, 7);
    auto s3 = sample_network(net, 0.3, 8);
    CHECK(s1.follow_count() == 3);  // ceil(0.3 * 10)
    CHECK(s1.user_count() == 11);
    CHECK(serialize_network(s1) == serialize_network(s2));
    CHECK(serialize_network(s1) != serialize_network(s3));

    CHECK(sample_network(net, 0.05, 3).follow_count() == 1);
    CHECK_THROWS_AS(sample_network(net, 0.0, 1), Error);
    CHECK_THROWS_AS(sample_network(net, 1.5, 1), Error);
}

TEST_CASE("protected edges always survive") {
    NetworkBuilder b;
    for (int u = 0; u < 6; ++u) b.add_user("u" + std::to_string(u));
    for (int u = 0; u < 5; ++u) b.add_follow_index(u, u + 1);
    auto net = b.finish();
    const std::vector<std::pair<int, int>> shield{{0, 1}, {1, 2}};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto s = sample_network(net, 0.34, seed, shield);
        CHECK(s.has_follow(0, 1));
        CHECK(s.has_follow(1, 2));
        CHECK(s.follow_count() == 3);  // 2 protected + ceil(0.34 * 3)
    }
}

TEST_CASE("sampling removes posts together with their attributes") {
    auto net = parse("U a\nP p1 a\nP p2 a\nP p3 a\nAW p1 w\nAW p2 w\nAW p3 w\n");
    auto s = sample_network(net, 0.34, 5);
    CHECK(s.post_count() == 1);
    int attached = 0;
    for (int p = 0; p < s.post_count(); ++p) attached += static_cast<int>(s.post_words[p].size());
    CHECK(attached == 1);
}
