#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dime/netcore.hpp"
#include "dime/sparse.hpp"

namespace dime::metaprox {

constexpr int kNumPaths = 8;

// Typed relations a meta-path step can take. `_inv` walks the relation
// backwards.
enum class Relation {
    follow,
    follow_inv,
    write,
    write_inv,
    have_word,
    have_word_inv,
    have_time,
    have_time_inv,
    have_location,
    have_location_inv,
};

struct MetaPath {
    int id = 0;                    // 0..7
    std::string notation;          // e.g. "U->U<-U"
    std::vector<Relation> steps;   // starts and ends at the User type
};

// The eight social meta paths, in fixed catalog order:
//   0  U->U            follow
//   1  U->U->U         follower of follower
//   2  U->U<-U         common out-neighbor
//   3  U<-U->U         common in-neighbor
//   4  U<-U<-U         followee of followee
//   5  U->P->W<-P<-U   posts containing common words
//   6  U->P->T<-P<-U   posts containing common timestamps
//   7  U->P->L<-P<-U   posts attaching common location check-ins
const std::array<MetaPath, kNumPaths>& catalog();

struct ProxOptions {
    int threads = 1;
    int row_topn = 0;              // per-row truncation of intermediate products
    bool self_in_norms = false;    // include self-path instances in the sums
};

// Adjacency matrix of one typed relation (users x users, users x posts,
// posts x attribute, or a transpose thereof).
sparse::Csr<std::int64_t> relation_matrix(const netcore::HeterogeneousNetwork& net,
                                          Relation rel);

// Number of distinct path instances between every ordered user pair,
// computed as the chained product of the step matrices; the diagonal is
// zeroed after the product.
sparse::Csr<std::int64_t> count_path_instances(const netcore::HeterogeneousNetwork& net,
                                               const MetaPath& phi,
                                               const ProxOptions& opts = {});

struct ProximityMatrix {
    int path_id = 0;
    sparse::Csr<double> scores;       // entries in [0, 1]
    std::vector<double> row_counts;   // |P_phi(u_i, .)|
    std::vector<double> col_counts;   // |P_phi(., u_j)|

    // persisted content; the count vectors are in-memory metadata
    bool operator==(const ProximityMatrix& other) const {
        return path_id == other.path_id && scores == other.scores;
    }
};

// Def.-6 normalization 2c / (row + col) of the instance counts; rejects
// phi0, whose score is the raw binary indicator.
ProximityMatrix meta_proximity(const netcore::HeterogeneousNetwork& net, const MetaPath& phi,
                               const ProxOptions& opts = {});

ProximityMatrix friendship_proximity(const netcore::HeterogeneousNetwork& net);

// [P_phi0 ... P_phi7] in catalog order.
std::vector<ProximityMatrix> proximity_bundle(const netcore::HeterogeneousNetwork& net,
                                              const ProxOptions& opts = {});

// Binary container: per matrix a section of
//   magic "DIMEPROX1" | u64 user count | u32 path id | u64 nnz |
//   nnz * (u32 row, u32 col, f64 value) sorted row-major
void save_bundle(const std::string& path, const std::vector<ProximityMatrix>& bundle);
std::vector<ProximityMatrix> load_bundle(const std::string& path);

}  // namespace dime::metaprox
