#include "dime/deepalign.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "dime/rng.hpp"

namespace dime::deepalign {

namespace {

inline Mat sigmoid(Mat a) {
    // stable logistic: never evaluates exp of a large positive argument
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double x = a.data()[i];
        if (x >= 0.0) {
            a.data()[i] = 1.0 / (1.0 + std::exp(-x));
        } else {
            const double e = std::exp(x);
            a.data()[i] = e / (1.0 + e);
        }
    }
    return a;
}

inline Mat dsigmoid(const Mat& act) {
    return (act.array() * (1.0 - act.array())).matrix();
}

// gamma where x is nonzero, 1 elsewhere (squared variant for gradients)
inline Mat entry_weights(const Mat& x, double w_nonzero) {
    return (Mat::Ones(x.rows(), x.cols()).array() +
            (w_nonzero - 1.0) * (x.array() != 0.0).cast<double>())
        .matrix();
}

struct TensorRef {
    double* data;
    Eigen::Index size;
};

template <typename Params>
std::vector<TensorRef> tensor_refs(Params& params) {
    std::vector<TensorRef> refs;
    for_each_tensor(params, [&](const std::string&, auto& t, bool) {
        refs.push_back({t.data(), t.size()});
    });
    return refs;
}

}  // namespace

int ArchitectureSpec::num_active() const {
    int n = 0;
    for (bool b : active_paths) n += b ? 1 : 0;
    return n;
}

void ArchitectureSpec::validate() const {
    if (networks != 1 && networks != 2)
        fail(ErrorKind::bad_argument, "networks must be 1 or 2");
    if (encoder_widths.empty()) fail(ErrorKind::bad_argument, "need at least one encoder layer");
    for (int w : encoder_widths)
        if (w < 1) fail(ErrorKind::bad_argument, "encoder widths must be >= 1");
    if (fusion_width < 1) fail(ErrorKind::bad_argument, "fusion width must be >= 1");
    for (int i = 0; i < networks; ++i) {
        if (embed_dim[i] < 1) fail(ErrorKind::bad_argument, "embedding dimension must be >= 1");
        if (input_dim[i] < 1) fail(ErrorKind::bad_argument, "input dimension must be >= 1");
    }
    if (num_active() == 0) fail(ErrorKind::bad_argument, "at least one meta path must be active");
}

void TrainConfig::validate() const {
    if (!(gamma > 1.0)) fail(ErrorKind::bad_argument, "gamma must be > 1");
    if (alpha < 0.0 || beta < 0.0) fail(ErrorKind::bad_argument, "alpha and beta must be >= 0");
    if (epochs < 1 || batch < 1) fail(ErrorKind::bad_argument, "epochs and batch must be >= 1");
    if (!(learning_rate > 0.0)) fail(ErrorKind::bad_argument, "learning rate must be > 0");
}

DimeParams DimeParams::zeros(const ArchitectureSpec& arch) {
    arch.validate();
    DimeParams p;
    p.arch = arch;
    p.nets.resize(arch.networks);
    const int o = arch.depth();
    for (int net = 0; net < arch.networks; ++net) {
        NetParams& np = p.nets[net];
        const int n = arch.input_dim[net];
        const int d = arch.embed_dim[net];
        auto level_width = [&](int l) { return l == 0 ? n : arch.encoder_widths[l - 1]; };
        for (int k = 0; k < kNumPaths; ++k) {
            if (!arch.active_paths[k]) continue;
            PathParams& pp = np.paths[k];
            pp.enc_w.resize(o);
            pp.enc_b.resize(o);
            pp.dec_w.resize(o);
            pp.dec_b.resize(o);
            for (int l = 0; l < o; ++l) {
                pp.enc_w[l] = Mat::Zero(level_width(l + 1), level_width(l));
                pp.enc_b[l] = Vec::Zero(level_width(l + 1));
                pp.dec_w[l] = Mat::Zero(level_width(l), level_width(l + 1));
                pp.dec_b[l] = Vec::Zero(level_width(l));
            }
            pp.fuse_w = Mat::Zero(arch.fusion_width, level_width(o));
            pp.disp_w = Mat::Zero(level_width(o), arch.fusion_width);
            pp.disp_b = Vec::Zero(level_width(o));
        }
        np.fuse_b = Vec::Zero(arch.fusion_width);
        np.bott_w = Mat::Zero(d, arch.fusion_width);
        np.bott_b = Vec::Zero(d);
        np.unbott_w = Mat::Zero(arch.fusion_width, d);
        np.unbott_b = Vec::Zero(arch.fusion_width);
    }
    if (arch.networks == 2)
        p.cross_proj = Mat::Zero(arch.embed_dim[0], arch.embed_dim[1]);
    return p;
}

DimeParams init_params(const ArchitectureSpec& arch, std::uint64_t seed) {
    DimeParams p = DimeParams::zeros(arch);
    std::array<std::uint64_t, 2> net_seed{seed, seed};
    if (arch.networks == 2)
        for (int i = 0; i < 2; ++i) net_seed[i] = rng::derive_seed(seed, "net", i);
    for_each_tensor(p, [&](const std::string& name, auto& t, bool is_weight) {
        if (!is_weight) return;  // biases stay zero
        std::uint64_t s0;
        if (name == "cross_proj") {
            s0 = rng::derive_seed(seed, "cross_proj");
        } else {
            const int net = name[3] - '0';
            s0 = rng::derive_seed(net_seed[net], name.substr(5));
        }
        rng::Rng r(s0);
        const double bound = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
        for (Eigen::Index row = 0; row < t.rows(); ++row)
            for (Eigen::Index col = 0; col < t.cols(); ++col)
                t(row, col) = r.uniform_real(-bound, bound);
    });
    return p;
}

NetForward forward_net(const DimeParams& params, int net, std::array<Mat, kNumPaths> x,
                       bool with_decoder) {
    const ArchitectureSpec& arch = params.arch;
    const NetParams& np = params.nets[net];
    const int o = arch.depth();
    NetForward f;
    f.x = std::move(x);
    Eigen::Index batch = -1;
    for (int k = 0; k < kNumPaths; ++k) {
        if (!arch.active_paths[k]) continue;
        if (f.x[k].rows() != arch.input_dim[net])
            fail(ErrorKind::shape_mismatch,
                 "input rows for phi" + std::to_string(k) + " must equal |U|");
        if (batch < 0) batch = f.x[k].cols();
        if (f.x[k].cols() != batch)
            fail(ErrorKind::shape_mismatch, "inconsistent batch width across paths");
        const PathParams& pp = np.paths[k];
        f.enc[k].resize(o);
        const Mat* below = &f.x[k];
        for (int l = 0; l < o; ++l) {
            f.enc[k][l] = sigmoid((pp.enc_w[l] * (*below)).colwise() + pp.enc_b[l]);
            below = &f.enc[k][l];
        }
    }
    Mat pre = Mat::Zero(arch.fusion_width, batch);
    for (int k = 0; k < kNumPaths; ++k) {
        if (!arch.active_paths[k]) continue;
        pre.noalias() += np.paths[k].fuse_w * f.enc[k][o - 1];
    }
    f.fused = sigmoid(pre.colwise() + np.fuse_b);
    f.z = sigmoid((np.bott_w * f.fused).colwise() + np.bott_b);
    if (!with_decoder) return f;

    f.unfused = sigmoid((np.unbott_w * f.z).colwise() + np.unbott_b);
    for (int k = 0; k < kNumPaths; ++k) {
        if (!arch.active_paths[k]) continue;
        const PathParams& pp = np.paths[k];
        f.dec[k].resize(o);
        f.dec[k][o - 1] = sigmoid((pp.disp_w * f.unfused).colwise() + pp.disp_b);
        for (int l = o - 1; l >= 1; --l)
            f.dec[k][l - 1] = sigmoid((pp.dec_w[l] * f.dec[k][l]).colwise() + pp.dec_b[l]);
        f.xhat[k] = sigmoid((pp.dec_w[0] * f.dec[k][0]).colwise() + pp.dec_b[0]);
    }
    return f;
}

EncodeResult encode(const DimeParams& params, int net, const std::vector<Vec>& x_bundle) {
    if (static_cast<int>(x_bundle.size()) != kNumPaths)
        fail(ErrorKind::shape_mismatch, "x_bundle must have 8 per-path rows");
    std::array<Mat, kNumPaths> x;
    for (int k = 0; k < kNumPaths; ++k)
        if (params.arch.active_paths[k]) x[k] = x_bundle[k];
    EncodeResult r;
    r.trace = forward_net(params, net, std::move(x), false);
    r.z = r.trace.z.col(0);
    return r;
}

std::vector<Vec> decode(const DimeParams& params, int net, const Vec& z) {
    const ArchitectureSpec& arch = params.arch;
    const NetParams& np = params.nets[net];
    if (z.size() != arch.embed_dim[net]) fail(ErrorKind::shape_mismatch, "z has wrong dimension");
    const int o = arch.depth();
    Mat unfused = sigmoid((np.unbott_w * z).colwise() + np.unbott_b);
    std::vector<Vec> out(kNumPaths);
    for (int k = 0; k < kNumPaths; ++k) {
        if (!arch.active_paths[k]) continue;
        const PathParams& pp = np.paths[k];
        Mat cur = sigmoid((pp.disp_w * unfused).colwise() + pp.disp_b);
        for (int l = o - 1; l >= 0; --l)
            cur = sigmoid((pp.dec_w[l] * cur).colwise() + pp.dec_b[l]);
        out[k] = cur.col(0);
    }
    return out;
}

double recon_loss(const std::vector<Vec>& x_bundle, const std::vector<Vec>& xhat_bundle,
                  double gamma) {
    if (x_bundle.size() != xhat_bundle.size())
        fail(ErrorKind::shape_mismatch, "bundle sizes differ");
    double loss = 0.0;
    for (std::size_t k = 0; k < x_bundle.size(); ++k) {
        const Vec& x = x_bundle[k];
        const Vec& xh = xhat_bundle[k];
        if (x.size() == 0 && xh.size() == 0) continue;
        if (x.size() != xh.size()) fail(ErrorKind::shape_mismatch, "reconstruction length differs");
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double w = x[i] != 0.0 ? gamma : 1.0;
            const double d = (x[i] - xh[i]) * w;
            loss += d * d;
        }
    }
    return loss;
}

double fusion_loss(const Mat& z1, const Mat& z2, const netcore::TransitionMatrix& t,
                   const Mat& w12) {
    if (t.rows != z1.rows() || t.cols != z2.rows())
        fail(ErrorKind::shape_mismatch, "transition matrix does not match embeddings");
    if (w12.rows() != z1.cols() || w12.cols() != z2.cols())
        fail(ErrorKind::shape_mismatch, "projection does not match embedding dimensions");
    double loss = 0.0;
    for (int j = 0; j < t.cols; ++j) {
        const int a = t.partner_of_g2[j];
        if (a >= 0) {
            loss += (z1.row(a) * w12 - z2.row(j)).squaredNorm();
        } else {
            loss += z2.row(j).squaredNorm();
        }
    }
    return loss;
}

double reg_loss(const DimeParams& params) {
    double loss = 0.0;
    for_each_tensor(const_cast<DimeParams&>(params),
                    [&](const std::string&, auto& t, bool is_weight) {
                        if (is_weight) loss += t.squaredNorm();
                    });
    return loss;
}

TrainingData make_training_data(const netcore::AlignedPair& pair,
                                const std::vector<metaprox::ProximityMatrix>& bundle1,
                                const std::vector<metaprox::ProximityMatrix>& bundle2) {
    TrainingData d;
    d.networks = 2;
    d.bundles = {&bundle1, &bundle2};
    d.n = {pair.emerging.user_count(), pair.mature.user_count()};
    auto t = netcore::build_transition_matrix(pair);
    d.partner_of_g1 = std::move(t.partner_of_g1);
    d.partner_of_g2 = std::move(t.partner_of_g2);
    return d;
}

TrainingData make_training_data(const netcore::HeterogeneousNetwork& net,
                                const std::vector<metaprox::ProximityMatrix>& bundle) {
    TrainingData d;
    d.networks = 1;
    d.bundles = {&bundle, nullptr};
    d.n = {net.user_count(), 0};
    return d;
}

namespace {

// Batch input columns gathered from the sparse proximity rows.
std::array<Mat, kNumPaths> gather_inputs(const TrainingData& data, int net,
                                         const std::vector<int>& users,
                                         const ArchitectureSpec& arch) {
    std::array<Mat, kNumPaths> x;
    const auto& bundle = *data.bundles[net];
    const int n = data.n[net];
    for (int k = 0; k < kNumPaths; ++k) {
        if (!arch.active_paths[k]) continue;
        x[k] = Mat::Zero(n, static_cast<Eigen::Index>(users.size()));
        const auto& m = bundle[k].scores;
        for (std::size_t b = 0; b < users.size(); ++b) {
            const int u = users[b];
            for (std::int64_t p = m.indptr[u]; p < m.indptr[u + 1]; ++p)
                x[k](m.indices[p], static_cast<Eigen::Index>(b)) = m.data[p];
        }
    }
    return x;
}

struct SplitBatch {
    std::array<std::vector<int>, 2> users;
};

SplitBatch split_batch(const TrainingData& data, const Batch& batch) {
    SplitBatch s;
    for (const auto& [net, u] : batch) {
        if (net < 0 || net >= data.networks || u < 0 || u >= data.n[net])
            fail(ErrorKind::bad_argument, "batch member out of range");
        s.users[net].push_back(u);
    }
    return s;
}

double recon_loss_matrix(const std::array<Mat, kNumPaths>& x,
                         const std::array<Mat, kNumPaths>& xhat,
                         const std::array<bool, kNumPaths>& active, double gamma) {
    double loss = 0.0;
    for (int k = 0; k < kNumPaths; ++k) {
        if (!active[k]) continue;
        const Mat w = entry_weights(x[k], gamma);
        loss += ((x[k].array() - xhat[k].array()) * w.array()).square().sum();
    }
    return loss;
}

// Anchored partners of the G1 members, in first-appearance order.
std::vector<int> partner_users(const TrainingData& data, const std::vector<int>& g1_users) {
    std::vector<int> partners;
    for (int u : g1_users) {
        const int j = data.partner_of_g1.empty() ? -1 : data.partner_of_g1[u];
        if (j >= 0) partners.push_back(j);
    }
    return partners;
}

double reg_scope_loss(const DimeParams& params, const SplitBatch& split) {
    double loss = 0.0;
    for_each_tensor(const_cast<DimeParams&>(params),
                    [&](const std::string& name, auto& t, bool is_weight) {
                        if (!is_weight) return;
                        if (name == "cross_proj") {
                            if (!split.users[0].empty()) loss += t.squaredNorm();
                        } else {
                            const int net = name[3] - '0';
                            if (!split.users[net].empty()) loss += t.squaredNorm();
                        }
                    });
    return loss;
}

// Backprop from dL/dz through bottleneck, fusion and the per-path encoder
// stacks. `grad` accumulates.
void backward_from_z(const DimeParams& params, int net, const NetForward& f, const Mat& dz,
                     NetParams& grad) {
    const ArchitectureSpec& arch = params.arch;
    const NetParams& np = params.nets[net];
    const int o = arch.depth();
    const Mat delta_z = (dz.array() * dsigmoid(f.z).array()).matrix();
    grad.bott_w.noalias() += delta_z * f.fused.transpose();
    grad.bott_b += delta_z.rowwise().sum();
    const Mat dfused = np.bott_w.transpose() * delta_z;
    const Mat delta_f = (dfused.array() * dsigmoid(f.fused).array()).matrix();
    grad.fuse_b += delta_f.rowwise().sum();
    for (int k = 0; k < kNumPaths; ++k) {
        if (!arch.active_paths[k]) continue;
        const PathParams& pp = np.paths[k];
        PathParams& gp = grad.paths[k];
        gp.fuse_w.noalias() += delta_f * f.enc[k][o - 1].transpose();
        Mat up = pp.fuse_w.transpose() * delta_f;
        for (int l = o - 1; l >= 0; --l) {
            const Mat delta = (up.array() * dsigmoid(f.enc[k][l]).array()).matrix();
            const Mat& below = l == 0 ? f.x[k] : f.enc[k][l - 1];
            gp.enc_w[l].noalias() += delta * below.transpose();
            gp.enc_b[l] += delta.rowwise().sum();
            if (l > 0) up = pp.enc_w[l].transpose() * delta;
        }
    }
}

// Backprop of the reconstruction term through the decoder; returns dL/dz.
Mat backward_decoder(const DimeParams& params, int net, const NetForward& f, double gamma,
                     NetParams& grad) {
    const ArchitectureSpec& arch = params.arch;
    const NetParams& np = params.nets[net];
    const int o = arch.depth();
    Mat dunfused = Mat::Zero(arch.fusion_width, f.z.cols());
    for (int k = 0; k < kNumPaths; ++k) {
        if (!arch.active_paths[k]) continue;
        const PathParams& pp = np.paths[k];
        PathParams& gp = grad.paths[k];
        const Mat w2 = entry_weights(f.x[k], gamma * gamma);
        const Mat dxhat =
            (2.0 * w2.array() * (f.xhat[k].array() - f.x[k].array())).matrix();
        Mat delta = (dxhat.array() * dsigmoid(f.xhat[k]).array()).matrix();
        gp.dec_w[0].noalias() += delta * f.dec[k][0].transpose();
        gp.dec_b[0] += delta.rowwise().sum();
        Mat up = pp.dec_w[0].transpose() * delta;
        for (int l = 1; l < o; ++l) {
            delta = (up.array() * dsigmoid(f.dec[k][l - 1]).array()).matrix();
            gp.dec_w[l].noalias() += delta * f.dec[k][l].transpose();
            gp.dec_b[l] += delta.rowwise().sum();
            up = pp.dec_w[l].transpose() * delta;
        }
        delta = (up.array() * dsigmoid(f.dec[k][o - 1]).array()).matrix();
        gp.disp_w.noalias() += delta * f.unfused.transpose();
        gp.disp_b += delta.rowwise().sum();
        dunfused.noalias() += pp.disp_w.transpose() * delta;
    }
    const Mat delta_u = (dunfused.array() * dsigmoid(f.unfused).array()).matrix();
    grad.unbott_w.noalias() += delta_u * f.z.transpose();
    grad.unbott_b += delta_u.rowwise().sum();
    return np.unbott_w.transpose() * delta_u;
}

}  // namespace

double total_loss(const TrainingData& data, const Batch& batch, const DimeParams& params,
                  const TrainConfig& cfg) {
    const ArchitectureSpec& arch = params.arch;
    const SplitBatch split = split_batch(data, batch);
    double loss = 0.0;
    std::array<NetForward, 2> fwd;
    for (int net = 0; net < data.networks; ++net) {
        if (split.users[net].empty()) continue;
        fwd[net] = forward_net(params, net, gather_inputs(data, net, split.users[net], arch), true);
        loss += recon_loss_matrix(fwd[net].x, fwd[net].xhat, arch.active_paths, cfg.gamma);
    }
    if (data.networks == 2 && cfg.alpha > 0.0) {
        const auto partners = partner_users(data, split.users[0]);
        if (!partners.empty()) {
            const NetForward pf =
                forward_net(params, 1, gather_inputs(data, 1, partners, arch), false);
            std::size_t pos = 0;
            for (std::size_t b = 0; b < split.users[0].size(); ++b) {
                const int u = split.users[0][b];
                if (data.partner_of_g1[u] < 0) continue;
                const Vec r = params.cross_proj.transpose() * fwd[0].z.col(b) - pf.z.col(pos);
                loss += cfg.alpha * r.squaredNorm();
                ++pos;
            }
        }
        if (!cfg.anchor_rows_only) {
            for (std::size_t b = 0; b < split.users[1].size(); ++b) {
                const int v = split.users[1][b];
                if (data.partner_of_g2[v] < 0)
                    loss += cfg.alpha * fwd[1].z.col(b).squaredNorm();
            }
        }
    }
    if (cfg.beta > 0.0) loss += cfg.beta * reg_scope_loss(params, split);
    return loss;
}

DimeParams gradients(const TrainingData& data, const Batch& batch, const DimeParams& params,
                     const TrainConfig& cfg) {
    const ArchitectureSpec& arch = params.arch;
    const SplitBatch split = split_batch(data, batch);
    DimeParams grad = DimeParams::zeros(arch);

    std::array<NetForward, 2> fwd;
    std::array<Mat, 2> dz;
    for (int net = 0; net < data.networks; ++net) {
        if (split.users[net].empty()) continue;
        fwd[net] = forward_net(params, net, gather_inputs(data, net, split.users[net], arch), true);
        dz[net] = backward_decoder(params, net, fwd[net], cfg.gamma, grad.nets[net]);
    }

    if (data.networks == 2 && cfg.alpha > 0.0) {
        const auto partners = partner_users(data, split.users[0]);
        if (!partners.empty()) {
            const NetForward pf =
                forward_net(params, 1, gather_inputs(data, 1, partners, arch), false);
            Mat dz_partner = Mat::Zero(arch.embed_dim[1], static_cast<Eigen::Index>(partners.size()));
            std::size_t pos = 0;
            for (std::size_t b = 0; b < split.users[0].size(); ++b) {
                const int u = split.users[0][b];
                if (data.partner_of_g1[u] < 0) continue;
                const Vec z1 = fwd[0].z.col(b);
                const Vec r = params.cross_proj.transpose() * z1 - pf.z.col(pos);
                dz[0].col(b) += 2.0 * cfg.alpha * (params.cross_proj * r);
                grad.cross_proj.noalias() += 2.0 * cfg.alpha * z1 * r.transpose();
                dz_partner.col(pos) -= 2.0 * cfg.alpha * r;
                ++pos;
            }
            backward_from_z(params, 1, pf, dz_partner, grad.nets[1]);
        }
        if (!cfg.anchor_rows_only && !split.users[1].empty()) {
            for (std::size_t b = 0; b < split.users[1].size(); ++b) {
                const int v = split.users[1][b];
                if (data.partner_of_g2[v] < 0)
                    dz[1].col(b) += 2.0 * cfg.alpha * fwd[1].z.col(b);
            }
        }
    }

    for (int net = 0; net < data.networks; ++net) {
        if (split.users[net].empty()) continue;
        backward_from_z(params, net, fwd[net], dz[net], grad.nets[net]);
    }

    if (cfg.beta > 0.0) {
        std::vector<std::pair<std::string, bool>> meta;
        for_each_tensor(grad, [&](const std::string& n, auto&, bool w) { meta.emplace_back(n, w); });
        auto grefs = tensor_refs(grad);
        auto prefs = tensor_refs(const_cast<DimeParams&>(params));
        for (std::size_t t = 0; t < meta.size(); ++t) {
            const auto& [name, is_weight] = meta[t];
            if (!is_weight) continue;
            const bool in_scope = name == "cross_proj" ? !split.users[0].empty()
                                                       : !split.users[name[3] - '0'].empty();
            if (!in_scope) continue;
            for (Eigen::Index i = 0; i < grefs[t].size; ++i)
                grefs[t].data[i] += 2.0 * cfg.beta * prefs[t].data[i];
        }
    }
    return grad;
}

namespace {

Mat encode_all(const DimeParams& params, const TrainingData& data, int net) {
    std::vector<int> users(data.n[net]);
    for (int u = 0; u < data.n[net]; ++u) users[u] = u;
    const NetForward f =
        forward_net(params, net, gather_inputs(data, net, users, params.arch), false);
    return f.z.transpose();
}

TrainResult run_training(const TrainingData& data, ArchitectureSpec arch, const TrainConfig& cfg) {
    cfg.validate();
    arch.validate();
    DimeParams params = init_params(arch, cfg.seed);
    auto refs = tensor_refs(params);

    std::array<std::uint64_t, 2> net_seed{cfg.seed, cfg.seed};
    if (data.networks == 2)
        for (int i = 0; i < 2; ++i) net_seed[i] = rng::derive_seed(cfg.seed, "net", i);

    Batch everyone;
    for (int net = 0; net < data.networks; ++net)
        for (int u = 0; u < data.n[net]; ++u) everyone.emplace_back(net, u);
    const double inv_count = 1.0 / static_cast<double>(everyone.size());

    TrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::array<std::vector<int>, 2> order;
        for (int net = 0; net < data.networks; ++net) {
            order[net].resize(data.n[net]);
            for (int u = 0; u < data.n[net]; ++u) order[net][u] = u;
            rng::Rng r(rng::derive_seed(net_seed[net], "shuffle", static_cast<std::uint64_t>(epoch)));
            r.shuffle(order[net]);
        }
        const int batches0 = (data.n[0] + cfg.batch - 1) / cfg.batch;
        const int batches1 =
            data.networks == 2 ? (data.n[1] + cfg.batch - 1) / cfg.batch : 0;
        for (int b = 0; b < std::max(batches0, batches1); ++b) {
            for (int net = 0; net < data.networks; ++net) {
                const int lo = b * cfg.batch;
                if (lo >= data.n[net]) continue;
                const int hi = std::min(data.n[net], lo + cfg.batch);
                Batch batch;
                for (int i = lo; i < hi; ++i) batch.emplace_back(net, order[net][i]);
                DimeParams grad = gradients(data, batch, params, cfg);
                auto grefs = tensor_refs(grad);
                const double step = cfg.learning_rate / static_cast<double>(batch.size());
                for (std::size_t t = 0; t < refs.size(); ++t)
                    for (Eigen::Index i = 0; i < refs[t].size; ++i)
                        refs[t].data[i] -= step * grefs[t].data[i];
            }
        }
        const double epoch_loss = total_loss(data, everyone, params, cfg) * inv_count;
        if (!std::isfinite(epoch_loss))
            fail(ErrorKind::divergence,
                 "training diverged at epoch " + std::to_string(epoch + 1));
        result.loss_trace.push_back(epoch_loss);
    }

    result.embeddings.resize(data.networks);
    for (int net = 0; net < data.networks; ++net)
        result.embeddings[net] = encode_all(params, data, net);
    result.params = std::move(params);
    return result;
}

}  // namespace

TrainResult train(const netcore::AlignedPair& pair,
                  const std::vector<metaprox::ProximityMatrix>& bundle1,
                  const std::vector<metaprox::ProximityMatrix>& bundle2, ArchitectureSpec arch,
                  const TrainConfig& cfg) {
    arch.networks = 2;
    arch.input_dim = {pair.emerging.user_count(), pair.mature.user_count()};
    return run_training(make_training_data(pair, bundle1, bundle2), arch, cfg);
}

TrainResult embed_single(const netcore::HeterogeneousNetwork& net,
                         const std::vector<metaprox::ProximityMatrix>& bundle,
                         ArchitectureSpec arch, const TrainConfig& cfg) {
    arch.networks = 1;
    arch.input_dim = {net.user_count(), 0};
    return run_training(make_training_data(net, bundle), arch, cfg);
}

namespace {

constexpr char kCkptMagic[5] = {'D', 'I', 'M', 'E', '1'};

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) fail(ErrorKind::io, "truncated checkpoint '" + path + "'");
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const DimeParams& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
    const ArchitectureSpec& a = params.arch;
    out.write(kCkptMagic, sizeof(kCkptMagic));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(a.networks));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(a.depth()));
    for (int w : a.encoder_widths) write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(w));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(a.fusion_width));
    for (int i = 0; i < 2; ++i)
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(a.embed_dim[i]));
    for (int i = 0; i < 2; ++i)
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(a.input_dim[i]));
    for (int k = 0; k < kNumPaths; ++k)
        write_pod<std::uint8_t>(out, a.active_paths[k] ? 1 : 0);
    for_each_tensor(const_cast<DimeParams&>(params),
                    [&](const std::string&, auto& t, bool) {
                        for (Eigen::Index r = 0; r < t.rows(); ++r)
                            for (Eigen::Index c = 0; c < t.cols(); ++c)
                                write_pod<double>(out, t(r, c));
                    });
    if (!out) fail(ErrorKind::io, "write failed for '" + path + "'");
}

DimeParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
    char magic[sizeof(kCkptMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCkptMagic, sizeof(kCkptMagic)) != 0)
        fail(ErrorKind::parse, "bad checkpoint magic in '" + path + "'");
    ArchitectureSpec a;
    a.networks = static_cast<int>(read_pod<std::uint32_t>(in, path));
    const auto depth = read_pod<std::uint32_t>(in, path);
    a.encoder_widths.resize(depth);
    for (auto& w : a.encoder_widths) w = static_cast<int>(read_pod<std::uint32_t>(in, path));
    a.fusion_width = static_cast<int>(read_pod<std::uint32_t>(in, path));
    for (int i = 0; i < 2; ++i) a.embed_dim[i] = static_cast<int>(read_pod<std::uint32_t>(in, path));
    for (int i = 0; i < 2; ++i) a.input_dim[i] = static_cast<int>(read_pod<std::uint32_t>(in, path));
    for (int k = 0; k < kNumPaths; ++k) a.active_paths[k] = read_pod<std::uint8_t>(in, path) != 0;
    DimeParams p = DimeParams::zeros(a);
    for_each_tensor(p, [&](const std::string&, auto& t, bool) {
        for (Eigen::Index r = 0; r < t.rows(); ++r)
            for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = read_pod<double>(in, path);
    });
    return p;
}

void write_embeddings_csv(const std::string& path, const std::vector<std::string>& user_ids,
                          const Mat& z) {
    if (static_cast<Eigen::Index>(user_ids.size()) != z.rows())
        fail(ErrorKind::shape_mismatch, "user id count does not match embedding rows");
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
    out << "user_id";
    for (Eigen::Index c = 0; c < z.cols(); ++c) out << ",z" << c;
    out << "\n";
    char buf[32];
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        out << user_ids[r];
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", z(r, c));
            out << "," << buf;
        }
        out << "\n";
    }
}

}  // namespace dime::deepalign
