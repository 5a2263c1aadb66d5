#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dime/netcore.hpp"

namespace dime::synthgen {

// Planted-partition pair generator. Anchored users are the same underlying
// person in both networks and share their community; the emerging network is
// a thinned copy of the mature generation process.
struct SynthConfig {
    int users = 200;
    int communities = 4;
    double intra_p = 0.15;
    double inter_p = 0.01;
    double posts_per_user = 6.0;  // Poisson mean
    int vocabulary = 240;
    int words_per_post = 5;
    int locations = 24;
    double attribute_skew = 0.85;  // P(token drawn from the community block)
    double anchor_fraction = 0.6;
    double emergence = 0.3;  // edge/post thinning of the emerging network
    std::uint64_t seed = 1;

    void validate() const;
};

struct SynthResult {
    netcore::AlignedPair pair;
    std::vector<int> labels_emerging;  // ground-truth community per user
    std::vector<int> labels_mature;
};

SynthResult generate_pair(const SynthConfig& cfg);

// File outputs: edge-list-v1 networks, anchors-v1, and a labels CSV
// (user id, community id) for the emerging network.
struct SynthFiles {
    std::string emerging_path;
    std::string mature_path;
    std::string anchors_path;
    std::string labels_path;
};
SynthFiles write_files(const SynthResult& result, const std::string& out_dir);

}  // namespace dime::synthgen
