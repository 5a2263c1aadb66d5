#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dime/common.hpp"

namespace dime::netcore {

// Attribute namespaces attached to posts.
enum class AttrKind { word = 0, time = 1, location = 2 };

struct TokenSpace {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, int> id_of;

    int intern(const std::string& token);
    int find(const std::string& token) const;  // -1 when absent
    int size() const { return static_cast<int>(tokens.size()); }
};

enum class TimeBucketing {
    hour_of_week,  // timestamp-seconds -> (ts / 3600) % 168
    none,          // every distinct timestamp is its own bucket
};

struct LoadOptions {
    TimeBucketing bucketing = TimeBucketing::hour_of_week;
};

// Attributed heterogeneous social network: users, posts (each with exactly
// one author), directed follow edges, and per-post attribute sets in three
// namespaces. Immutable after construction; safe to share across threads.
struct HeterogeneousNetwork {
    std::vector<std::string> user_ids;
    std::unordered_map<std::string, int> user_index;

    std::vector<std::string> post_ids;
    std::unordered_map<std::string, int> post_index;
    std::vector<int> post_author;

    std::vector<std::pair<int, int>> follow_edges;  // directed u -> v
    std::unordered_set<std::uint64_t> follow_set;

    std::vector<std::vector<int>> post_words;
    std::vector<std::vector<int>> post_times;
    std::vector<std::vector<int>> post_locations;
    TokenSpace words, times, locations;

    int user_count() const { return static_cast<int>(user_ids.size()); }
    int post_count() const { return static_cast<int>(post_ids.size()); }
    std::int64_t follow_count() const { return static_cast<std::int64_t>(follow_edges.size()); }

    static std::uint64_t edge_key(int u, int v) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
               static_cast<std::uint32_t>(v);
    }
    bool has_follow(int u, int v) const { return follow_set.count(edge_key(u, v)) != 0; }

    const std::vector<int>& post_attrs(AttrKind kind, int post) const {
        switch (kind) {
            case AttrKind::word: return post_words[post];
            case AttrKind::time: return post_times[post];
            default: return post_locations[post];
        }
    }
    const TokenSpace& token_space(AttrKind kind) const {
        switch (kind) {
            case AttrKind::word: return words;
            case AttrKind::time: return times;
            default: return locations;
        }
    }
};

// Incremental, validating construction; the loader and the synthetic
// generator both go through this.
class NetworkBuilder {
public:
    explicit NetworkBuilder(LoadOptions options = {}) : options_(options) {}

    int add_user(const std::string& id);
    int add_post(const std::string& id, const std::string& user_id);
    void add_follow(const std::string& u, const std::string& v);
    void add_follow_index(int u, int v);
    void add_word(const std::string& post_id, const std::string& token);
    void add_time(const std::string& post_id, std::int64_t timestamp_seconds);
    void add_location(const std::string& post_id, const std::string& token);
    void add_word_index(int post, const std::string& token);
    void add_time_index(int post, std::int64_t timestamp_seconds);
    void add_location_index(int post, const std::string& token);

    HeterogeneousNetwork finish() { return std::move(net_); }

private:
    int require_user(const std::string& id) const;
    int require_post(const std::string& id) const;

    LoadOptions options_;
    HeterogeneousNetwork net_;
};

// Two networks plus their anchor links (a partial one-to-one matching).
struct AlignedPair {
    HeterogeneousNetwork emerging;  // G1, the embedding target
    HeterogeneousNetwork mature;    // G2
    std::vector<std::pair<int, int>> anchors;  // (user in G1, user in G2)
};

// Binary |U1| x |U2| matrix with exactly one nonzero per anchor pair; stored
// as the two partner maps, which makes the row/col-sum <= 1 invariant
// structural.
struct TransitionMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> partner_of_g1;  // -1 when unanchored
    std::vector<int> partner_of_g2;

    std::vector<std::pair<int, int>> entries() const;
};

HeterogeneousNetwork load_network(const std::string& path, const LoadOptions& options = {});
HeterogeneousNetwork parse_network(std::istream& in, const std::string& origin,
                                   const LoadOptions& options = {});

std::string serialize_network(const HeterogeneousNetwork& net);

AlignedPair load_anchors(const std::string& path, HeterogeneousNetwork g1,
                         HeterogeneousNetwork g2);
AlignedPair parse_anchors(std::istream& in, const std::string& origin,
                          HeterogeneousNetwork g1, HeterogeneousNetwork g2);
std::string serialize_anchors(const AlignedPair& pair);

// Keeps exactly ceil(lambda * population) of the non-protected follow edges
// and ceil(lambda * posts) of the posts, selected without replacement under
// `seed`. Protected edges and all users always survive.
HeterogeneousNetwork sample_network(const HeterogeneousNetwork& net, double lambda,
                                    std::uint64_t seed,
                                    const std::vector<std::pair<int, int>>& protected_edges = {});

TransitionMatrix build_transition_matrix(const AlignedPair& pair);

// Replace the follow-edge set (used by the link-prediction driver to drop
// test-fold edges before sampling); posts and attributes are untouched.
HeterogeneousNetwork with_follow_edges(const HeterogeneousNetwork& net,
                                       const std::vector<std::pair<int, int>>& edges);

}  // namespace dime::netcore
