#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dime/metaprox.hpp"
#include "dime/netcore.hpp"

namespace dime::deepalign {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

constexpr int kNumPaths = metaprox::kNumPaths;

inline std::array<bool, kNumPaths> all_paths() {
    std::array<bool, kNumPaths> m;
    m.fill(true);
    return m;
}

// Widths of the per-path encoder stacks plus the fusion/bottleneck layers.
// Decoder widths are the exact mirror of the encoder widths by construction.
struct ArchitectureSpec {
    std::vector<int> encoder_widths{500, 50};
    int fusion_width = 50;
    std::array<int, 2> embed_dim{50, 50};   // d per network
    std::array<int, 2> input_dim{0, 0};     // |U| per network
    int networks = 2;                        // 1 for the single-network model
    std::array<bool, kNumPaths> active_paths = all_paths();

    int depth() const { return static_cast<int>(encoder_widths.size()); }  // o
    int num_active() const;
    void validate() const;
};

struct PathParams {
    std::vector<Mat> enc_w;  // enc_w[l]: width(l+1) x width(l)
    std::vector<Vec> enc_b;
    Mat fuse_w;              // fusion_width x width(o)
    Mat disp_w;              // width(o) x fusion_width
    Vec disp_b;
    std::vector<Mat> dec_w;  // dec_w[l]: width(l) x width(l+1)
    std::vector<Vec> dec_b;  // dec_b[l]: width(l)
};

struct NetParams {
    std::array<PathParams, kNumPaths> paths;  // inactive entries stay empty
    Vec fuse_b;     // single fused bias (summing per-path biases is one vector)
    Mat bott_w;     // d x fusion_width
    Vec bott_b;
    Mat unbott_w;   // fusion_width x d
    Vec unbott_b;
};

struct DimeParams {
    ArchitectureSpec arch;
    std::vector<NetParams> nets;
    Mat cross_proj;  // d1 x d2, joint model only

    static DimeParams zeros(const ArchitectureSpec& arch);
};

// Visits every parameter tensor in the fixed checkpoint order. The functor
// must accept (name, Mat&, is_weight) and (name, Vec&, is_weight).
template <typename Params, typename F>
void for_each_tensor(Params& params, F&& f) {
    const ArchitectureSpec& arch = params.arch;
    for (int net = 0; net < arch.networks; ++net) {
        const std::string prefix = "net" + std::to_string(net) + ".";
        auto& np = params.nets[net];
        for (int k = 0; k < kNumPaths; ++k) {
            if (!arch.active_paths[k]) continue;
            const std::string pk = prefix + "phi" + std::to_string(k) + ".";
            auto& pp = np.paths[k];
            for (int l = 0; l < arch.depth(); ++l) {
                f(pk + "enc_w" + std::to_string(l + 1), pp.enc_w[l], true);
                f(pk + "enc_b" + std::to_string(l + 1), pp.enc_b[l], false);
            }
            f(pk + "fuse_w", pp.fuse_w, true);
            f(pk + "disp_w", pp.disp_w, true);
            f(pk + "disp_b", pp.disp_b, false);
            for (int l = arch.depth() - 1; l >= 0; --l) {
                f(pk + "dec_w" + std::to_string(l + 1), pp.dec_w[l], true);
                f(pk + "dec_b" + std::to_string(l + 1), pp.dec_b[l], false);
            }
        }
        f(prefix + "fuse_b", np.fuse_b, false);
        f(prefix + "bott_w", np.bott_w, true);
        f(prefix + "bott_b", np.bott_b, false);
        f(prefix + "unbott_w", np.unbott_w, true);
        f(prefix + "unbott_b", np.unbott_b, false);
    }
    if (arch.networks == 2) f("cross_proj", params.cross_proj, true);
}

struct TrainConfig {
    double alpha = 1.0;           // fusion-loss weight
    double beta = 0.02;           // regularization weight
    double gamma = 100.0;         // nonzero-entry loss weight
    int epochs = 600;
    int batch = 64;
    double learning_rate = 0.001;
    std::uint64_t seed = 0;
    bool anchor_rows_only = false;  // restrict fusion loss to anchor rows

    void validate() const;
};

// Glorot-uniform weights, zero biases; every tensor draws from its own named
// stream so single-network runs reproduce the joint model's per-network
// sub-streams exactly.
DimeParams init_params(const ArchitectureSpec& arch, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Forward pass. Batches are stored column-wise: column b of every activation
// belongs to batch member b.

struct NetForward {
    std::array<Mat, kNumPaths> x;                  // inputs, input_dim x B
    std::array<std::vector<Mat>, kNumPaths> enc;   // per path, layers 1..o
    Mat fused;                                     // y^{o+1}
    Mat z;                                         // d x B
    Mat unfused;                                   // yhat^{o+1}
    std::array<std::vector<Mat>, kNumPaths> dec;   // yhat^{o}..yhat^{1}
    std::array<Mat, kNumPaths> xhat;
};

// Encoder (and optionally decoder) for one network over a batch of inputs.
NetForward forward_net(const DimeParams& params, int net, std::array<Mat, kNumPaths> x,
                       bool with_decoder);

// Single-instance conveniences matching the operation contracts.
struct EncodeResult {
    Vec z;
    NetForward trace;
};
EncodeResult encode(const DimeParams& params, int net, const std::vector<Vec>& x_bundle);
std::vector<Vec> decode(const DimeParams& params, int net, const Vec& z);

// ---------------------------------------------------------------------------
// Losses.

double recon_loss(const std::vector<Vec>& x_bundle, const std::vector<Vec>& xhat_bundle,
                  double gamma);

// || T^t Z1 W12 - Z2 ||_F^2 with Z matrices stored row-per-user.
double fusion_loss(const Mat& z1, const Mat& z2, const netcore::TransitionMatrix& t,
                   const Mat& w12);

double reg_loss(const DimeParams& params);

// ---------------------------------------------------------------------------
// Batched training data and the batch-restricted objective.

struct TrainingData {
    std::array<const std::vector<metaprox::ProximityMatrix>*, 2> bundles{nullptr, nullptr};
    std::array<int, 2> n{0, 0};
    std::vector<int> partner_of_g1;  // -1 when unanchored
    std::vector<int> partner_of_g2;
    int networks = 1;
};

TrainingData make_training_data(const netcore::AlignedPair& pair,
                                const std::vector<metaprox::ProximityMatrix>& bundle1,
                                const std::vector<metaprox::ProximityMatrix>& bundle2);
TrainingData make_training_data(const netcore::HeterogeneousNetwork& net,
                                const std::vector<metaprox::ProximityMatrix>& bundle);

// (network, user) pairs; members may mix both networks.
using Batch = std::vector<std::pair<int, int>>;

double total_loss(const TrainingData& data, const Batch& batch, const DimeParams& params,
                  const TrainConfig& cfg);

// Exact analytic gradient of total_loss over the batch, parameter-shaped.
DimeParams gradients(const TrainingData& data, const Batch& batch, const DimeParams& params,
                     const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Training drivers.

struct TrainResult {
    std::vector<Mat> embeddings;  // per network, |U| x d (row per user)
    DimeParams params;
    std::vector<double> loss_trace;  // full loss per epoch, per instance
};

TrainResult train(const netcore::AlignedPair& pair,
                  const std::vector<metaprox::ProximityMatrix>& bundle1,
                  const std::vector<metaprox::ProximityMatrix>& bundle2,
                  ArchitectureSpec arch, const TrainConfig& cfg);

TrainResult embed_single(const netcore::HeterogeneousNetwork& net,
                         const std::vector<metaprox::ProximityMatrix>& bundle,
                         ArchitectureSpec arch, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Persistence: checkpoint container (magic "DIME1", arch header, tensors in
// for_each_tensor order, f64 row-major) and embedding CSV.

void save_checkpoint(const std::string& path, const DimeParams& params);
DimeParams load_checkpoint(const std::string& path);

void write_embeddings_csv(const std::string& path, const std::vector<std::string>& user_ids,
                          const Mat& z);

}  // namespace dime::deepalign
