#include <doctest.h>

#include <cstdio>

#include "dime/deepalign.hpp"
#include "dime/rng.hpp"
#include "dime/synthgen.hpp"
#include "oracles.hpp"

using namespace dime;
using namespace dime::deepalign;

namespace {

ArchitectureSpec toy_arch(int n1, int n2, std::vector<int> widths = {4, 3}, int fusion = 3,
                          int d1 = 2, int d2 = 2) {
    ArchitectureSpec a;
    a.encoder_widths = std::move(widths);
    a.fusion_width = fusion;
    a.embed_dim = {d1, d2};
    a.input_dim = {n1, n2};
    a.networks = n2 > 0 ? 2 : 1;
    return a;
}

// tiny aligned pair + bundles + data, kept alive together
struct ToyProblem {
    netcore::AlignedPair pair;
    std::vector<metaprox::ProximityMatrix> b1, b2;
    TrainingData data;
};

ToyProblem toy_problem(std::uint64_t seed, int n1 = 6, int n2 = 7) {
    ToyProblem t;
    auto net1 = oracles::random_network(seed, n1, 8);
    auto net2 = oracles::random_network(seed + 1, n2, 8);
    t.pair.emerging = net1;
    t.pair.mature = net2;
    const int common = std::min(net1.user_count(), net2.user_count());
    for (int i = 0; i + 1 < common; i += 2) t.pair.anchors.emplace_back(i, i);
    t.b1 = metaprox::proximity_bundle(net1);
    t.b2 = metaprox::proximity_bundle(net2);
    t.data = make_training_data(t.pair, t.b1, t.b2);
    return t;
}

Batch full_batch(const TrainingData& data) {
    Batch b;
    for (int net = 0; net < data.networks; ++net)
        for (int u = 0; u < data.n[net]; ++u) b.emplace_back(net, u);
    return b;
}

}  // namespace

TEST_CASE("init is deterministic with zero biases and the glorot bound") {
    auto arch = toy_arch(5, 6);
    auto p1 = init_params(arch, 42);
    auto p2 = init_params(arch, 42);
    auto p3 = init_params(arch, 43);
    bool all_equal = true, any_differs = false;
    for_each_tensor(p1, [&](const std::string& name, auto& t, bool is_weight) {
        for_each_tensor(p2, [&](const std::string& name2, auto& t2, bool) {
            if (name2 != name) return;
            if constexpr (std::is_same_v<decltype(t), decltype(t2)>) {
                if (t.size() && (t - t2).cwiseAbs().maxCoeff() != 0.0) all_equal = false;
            }
        });
        for_each_tensor(p3, [&](const std::string& name3, auto& t3, bool) {
            if (name3 != name) return;
            if constexpr (std::is_same_v<decltype(t), decltype(t3)>) {
                if (is_weight && t.size() && (t - t3).cwiseAbs().maxCoeff() != 0.0)
                    any_differs = true;
            }
        });
        if (!is_weight) CHECK(t.cwiseAbs().maxCoeff() == 0.0);
    });
    CHECK(all_equal);
    CHECK(any_differs);
}

TEST_CASE("init draws stay inside the fan bound") {
    // 4x3 weight: bound sqrt(6/7); check the full stream over many tensors
    ArchitectureSpec a;
    a.encoder_widths = {4};
    a.fusion_width = 4;
    a.embed_dim = {4, 4};
    a.input_dim = {3, 3};
    a.networks = 2;
    const double bound = std::sqrt(6.0 / 7.0);
    int draws = 0;
    auto p = init_params(a, 7);
    for_each_tensor(p, [&](const std::string&, auto& t, bool is_weight) {
        if (!is_weight) return;
        if (t.rows() == 4 && t.cols() == 3) {
            for (Eigen::Index i = 0; i < t.size(); ++i) {
                CHECK(std::abs(t.data()[i]) <= bound);
                ++draws;
            }
        }
    });
    CHECK(draws >= 16 * 12);  // 8 paths x 2 nets x enc_w1
}

TEST_CASE("zero parameters push every activation to one half") {
    auto arch = toy_arch(3, 0);
    auto params = DimeParams::zeros(arch);
    std::vector<Vec> x(kNumPaths, Vec::Zero(3));
    auto enc = encode(params, 0, x);
    CHECK(enc.z.size() == 2);
    for (int i = 0; i < enc.z.size(); ++i) CHECK(enc.z[i] == doctest::Approx(0.5));
    auto xhat = decode(params, 0, enc.z);
    for (int k = 0; k < kNumPaths; ++k)
        for (int i = 0; i < xhat[k].size(); ++i) CHECK(xhat[k][i] == doctest::Approx(0.5));
}

TEST_CASE("forward pass matches the straight-line oracle") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto arch = toy_arch(5, 4, {4, 3}, 3, 3, 2);
        auto params = init_params(arch, 100 + seed);
        rng::Rng r(seed);
        for (int net = 0; net < 2; ++net) {
            std::vector<std::vector<double>> x(kNumPaths,
                                               std::vector<double>(arch.input_dim[net]));
            std::vector<Vec> xv(kNumPaths, Vec(arch.input_dim[net]));
            for (int k = 0; k < kNumPaths; ++k)
                for (int i = 0; i < arch.input_dim[net]; ++i) {
                    x[k][i] = r.bernoulli(0.5) ? r.uniform_real() : 0.0;
                    xv[k][i] = x[k][i];
                }
            const auto naive = oracles::naive_forward(params, net, x);
            const auto enc = encode(params, net, xv);
            REQUIRE(enc.z.size() == static_cast<Eigen::Index>(naive.z.size()));
            for (std::size_t i = 0; i < naive.z.size(); ++i)
                CHECK(enc.z[static_cast<Eigen::Index>(i)] ==
                      doctest::Approx(naive.z[i]).epsilon(1e-12));
            const auto dec = decode(params, net, enc.z);
            for (int k = 0; k < kNumPaths; ++k)
                for (std::size_t i = 0; i < naive.xhat[k].size(); ++i) {
                    const double v = dec[k][static_cast<Eigen::Index>(i)];
                    CHECK(v == doctest::Approx(naive.xhat[k][i]).epsilon(1e-12));
                    CHECK(v > 0.0);
                    CHECK(v < 1.0);
                }
        }
    }
}

TEST_CASE("encode rejects wrong input shapes") {
    auto arch = toy_arch(3, 0);
    auto params = DimeParams::zeros(arch);
    std::vector<Vec> bad(kNumPaths, Vec::Zero(4));
    CHECK_THROWS_AS(encode(params, 0, bad), Error);
}

TEST_CASE("recon_loss hand values") {
    const double gamma = 100.0;
    std::vector<Vec> x(kNumPaths, Vec::Zero(2)), xh(kNumPaths, Vec::Zero(2));
    CHECK(recon_loss(x, x, gamma) == 0.0);

    x[0] << 1.0, 0.0;
    xh[0] << 0.5, 0.5;
    CHECK(recon_loss(x, xh, gamma) == doctest::Approx(2500.25));
    CHECK(recon_loss(x, xh, 1.0) == doctest::Approx(0.5));  // unweighted degenerate
    CHECK(recon_loss(x, x, gamma) == 0.0);
}

TEST_CASE("fusion_loss hand values") {
    netcore::TransitionMatrix t;
    t.rows = 2;
    t.cols = 2;

    Mat z1(2, 2), z2(2, 2), w = Mat::Identity(2, 2);
    z1 << 1, 0, 0, 1;
    z2.setZero();

    t.partner_of_g1 = {-1, -1};
    t.partner_of_g2 = {-1, -1};
    CHECK(fusion_loss(z1, z2, t, w) == doctest::Approx(0.0));  // ||Z2||^2 with Z2=0

    Mat z2b(2, 2);
    z2b << 3, 0, 0, 4;
    CHECK(fusion_loss(z1, z2b, t, w) == doctest::Approx(25.0));  // all-zero T

    t.partner_of_g1 = {0, 1};
    t.partner_of_g2 = {0, 1};
    CHECK(fusion_loss(z1, z2, t, w) == doctest::Approx(2.0));  // spec 2x2 instance
    CHECK(fusion_loss(z1, z1, t, w) == doctest::Approx(0.0));  // perfectly aligned
}

TEST_CASE("reg_loss hand values and homogeneity") {
    auto arch = toy_arch(2, 0, {2}, 2, 2, 2);
    auto params = DimeParams::zeros(arch);
    CHECK(reg_loss(params) == 0.0);

    params.nets[0].paths[0].enc_w[0] << 1, 2, 2, 1;
    CHECK(reg_loss(params) == doctest::Approx(10.0));

    auto doubled = params;
    doubled.nets[0].paths[0].enc_w[0] *= 2.0;
    CHECK(reg_loss(doubled) == doctest::Approx(40.0));
}

TEST_CASE("total_loss with alpha=beta=0 decouples into per-network sums") {
    auto t = toy_problem(42);
    auto arch = toy_arch(t.data.n[0], t.data.n[1]);
    auto params = init_params(arch, 1);
    TrainConfig cfg;
    cfg.alpha = 0.0;
    cfg.beta = 0.0;

    Batch b1, b2;
    for (int u = 0; u < t.data.n[0]; ++u) b1.emplace_back(0, u);
    for (int u = 0; u < t.data.n[1]; ++u) b2.emplace_back(1, u);
    const double joint = total_loss(t.data, full_batch(t.data), params, cfg);
    const double split = total_loss(t.data, b1, params, cfg) + total_loss(t.data, b2, params, cfg);
    CHECK(joint == doctest::Approx(split).epsilon(1e-12));
}

TEST_CASE("total_loss grows strictly with beta when weights are nonzero") {
    auto t = toy_problem(43);
    auto arch = toy_arch(t.data.n[0], t.data.n[1]);
    auto params = init_params(arch, 2);
    TrainConfig lo, hi;
    lo.beta = 0.01;
    hi.beta = 0.5;
    const auto batch = full_batch(t.data);
    CHECK(total_loss(t.data, batch, params, lo) < total_loss(t.data, batch, params, hi));
}

TEST_CASE("analytic gradients match central finite differences") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto t = toy_problem(500 + seed, 5, 6);
        auto arch = toy_arch(t.data.n[0], t.data.n[1], {4, 3}, 3, 2, 3);
        auto params = init_params(arch, 900 + seed);
        TrainConfig cfg;
        cfg.alpha = 0.7;
        cfg.beta = 0.05;
        cfg.gamma = 3.0;

        // mixed batch covering both networks plus anchored members
        Batch batch{{0, 0}, {0, 2}, {0, 4}, {1, 1}, {1, 2}, {1, 5}};
        auto grads = gradients(t.data, batch, params, cfg);

        const double h = 1e-5;
        double worst = 0.0;
        std::vector<std::pair<double*, Eigen::Index>> prefs, grefs;
        for_each_tensor(params, [&](const std::string&, auto& tt, bool) {
            prefs.emplace_back(tt.data(), tt.size());
        });
        for_each_tensor(grads, [&](const std::string&, auto& tt, bool) {
            grefs.emplace_back(tt.data(), tt.size());
        });
        REQUIRE(prefs.size() == grefs.size());
        for (std::size_t ti = 0; ti < prefs.size(); ++ti) {
            for (Eigen::Index i = 0; i < prefs[ti].second; ++i) {
                double& slot = prefs[ti].first[i];
                const double saved = slot;
                slot = saved + h;
                const double lp = total_loss(t.data, batch, params, cfg);
                slot = saved - h;
                const double lm = total_loss(t.data, batch, params, cfg);
                slot = saved;
                const double fd = (lp - lm) / (2.0 * h);
                const double an = grefs[ti].first[i];
                const double rel =
                    std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6});
                worst = std::max(worst, rel);
            }
        }
        CHECK(worst <= 1e-4);
    }
}

TEST_CASE("cross projection gradient vanishes when alpha is zero") {
    auto t = toy_problem(77);
    auto arch = toy_arch(t.data.n[0], t.data.n[1]);
    auto params = init_params(arch, 3);
    TrainConfig cfg;
    cfg.alpha = 0.0;
    cfg.beta = 0.0;
    auto grads = gradients(t.data, full_batch(t.data), params, cfg);
    CHECK(grads.cross_proj.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("decoder bias gradients vanish under perfect reconstruction") {
    // single 1-wide stack with zero weights reconstructs x = 0.5 exactly
    ArchitectureSpec arch;
    arch.encoder_widths = {1};
    arch.fusion_width = 1;
    arch.embed_dim = {1, 1};
    arch.input_dim = {1, 0};
    arch.networks = 1;
    arch.active_paths.fill(false);
    arch.active_paths[0] = true;
    auto params = DimeParams::zeros(arch);

    metaprox::ProximityMatrix pm;
    pm.path_id = 0;
    pm.scores = sparse::Csr<double>::from_triplets(1, 1, {{0, 0, 0.5}});
    std::vector<metaprox::ProximityMatrix> bundle(8);
    bundle[0] = pm;
    netcore::NetworkBuilder nb;
    nb.add_user("a");
    auto net = nb.finish();
    auto data = make_training_data(net, bundle);

    TrainConfig cfg;
    cfg.beta = 0.0;
    cfg.gamma = 2.0;
    auto grads = gradients(data, {{0, 0}}, params, cfg);
    for (int l = 0; l < 1; ++l)
        CHECK(grads.nets[0].paths[0].dec_b[l].cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(grads.nets[0].unbott_b.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("training is reproducible and loses loss on a planted pair") {
    synthgen::SynthConfig sc;
    sc.users = 30;
    sc.communities = 3;
    sc.intra_p = 0.3;
    sc.inter_p = 0.03;
    sc.posts_per_user = 2.0;
    sc.vocabulary = 30;
    sc.locations = 9;
    sc.anchor_fraction = 0.5;
    sc.emergence = 0.6;
    sc.seed = 5;
    auto synth = synthgen::generate_pair(sc);
    auto b1 = metaprox::proximity_bundle(synth.pair.emerging);
    auto b2 = metaprox::proximity_bundle(synth.pair.mature);

    ArchitectureSpec arch;
    arch.encoder_widths = {16, 8};
    arch.fusion_width = 8;
    arch.embed_dim = {4, 4};

    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.batch = 8;
    cfg.learning_rate = 0.02;
    cfg.gamma = 10.0;
    cfg.seed = 11;

    auto r1 = train(synth.pair, b1, b2, arch, cfg);
    auto r2 = train(synth.pair, b1, b2, arch, cfg);
    CHECK(r1.loss_trace == r2.loss_trace);
    CHECK((r1.embeddings[0] - r2.embeddings[0]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r1.loss_trace.back() < r1.loss_trace.front());
    CHECK(r1.embeddings[0].rows() == synth.pair.emerging.user_count());
    CHECK(r1.embeddings[0].cols() == 4);
    CHECK(r1.embeddings[0].minCoeff() > 0.0);
    CHECK(r1.embeddings[0].maxCoeff() < 1.0);
}

TEST_CASE("alpha=0 joint run equals two single-network runs bitwise") {
    auto t = toy_problem(99, 6, 7);
    ArchitectureSpec arch = toy_arch(t.data.n[0], t.data.n[1]);
    TrainConfig cfg;
    cfg.alpha = 0.0;
    cfg.epochs = 5;
    cfg.batch = 4;
    cfg.learning_rate = 0.05;
    cfg.gamma = 5.0;
    cfg.seed = 123;
    auto joint = train(t.pair, t.b1, t.b2, arch, cfg);

    // solo runs reproduce the joint model's per-network sub-streams when
    // given the derived per-network seeds
    ArchitectureSpec arch1 = arch;
    arch1.networks = 1;
    arch1.embed_dim = {arch.embed_dim[0], arch.embed_dim[0]};
    TrainConfig cfg1 = cfg;
    cfg1.seed = rng::derive_seed(cfg.seed, "net", 0);
    auto solo1 = embed_single(t.pair.emerging, t.b1, arch1, cfg1);

    ArchitectureSpec arch2 = arch;
    arch2.networks = 1;
    arch2.embed_dim = {arch.embed_dim[1], arch.embed_dim[1]};
    TrainConfig cfg2 = cfg;
    cfg2.seed = rng::derive_seed(cfg.seed, "net", 1);
    auto solo2 = embed_single(t.pair.mature, t.b2, arch2, cfg2);

    CHECK((joint.embeddings[0] - solo1.embeddings[0]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((joint.embeddings[1] - solo2.embeddings[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("alpha=0 emerging embedding ignores mature-network data") {
    auto t = toy_problem(110, 6, 7);
    auto other = toy_problem(111, 6, 7);  // different mature network
    std::vector<std::pair<int, int>> anchors;
    const int common =
        std::min(t.pair.emerging.user_count(), other.pair.mature.user_count());
    for (int i = 0; i + 1 < common; i += 2) anchors.emplace_back(i, i);
    netcore::AlignedPair swapped{t.pair.emerging, other.pair.mature, anchors};

    ArchitectureSpec arch = toy_arch(6, 7);
    TrainConfig cfg;
    cfg.alpha = 0.0;
    cfg.epochs = 4;
    cfg.batch = 4;
    cfg.learning_rate = 0.05;
    cfg.gamma = 5.0;
    cfg.seed = 9;
    auto base = train(t.pair, t.b1, t.b2, arch, cfg);
    auto other_b2 = metaprox::proximity_bundle(other.pair.mature);
    auto swap = train(swapped, t.b1, other_b2, arch, cfg);
    CHECK((base.embeddings[0] - swap.embeddings[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("divergent learning rates raise a divergence error") {
    auto t = toy_problem(120, 5, 5);
    ArchitectureSpec arch = toy_arch(5, 5);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.batch = 2;
    cfg.learning_rate = 1e6;
    cfg.gamma = 100.0;
    cfg.seed = 4;
    CHECK_THROWS_AS(train(t.pair, t.b1, t.b2, arch, cfg), Error);
}

TEST_CASE("path mask reduces the model to the friendship channel") {
    auto net = oracles::random_network(300, 8, 6);
    auto bundle = metaprox::proximity_bundle(net);
    ArchitectureSpec arch;
    arch.encoder_widths = {6, 4};
    arch.fusion_width = 4;
    arch.embed_dim = {3, 3};
    arch.active_paths.fill(false);
    arch.active_paths[0] = true;
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch = 4;
    cfg.learning_rate = 0.01;
    cfg.seed = 8;
    auto res = embed_single(net, bundle, arch, cfg);
    CHECK(res.embeddings[0].rows() == net.user_count());
    CHECK(res.embeddings[0].cols() == 3);
    // masked stacks hold no parameters
    CHECK(res.params.nets[0].paths[1].enc_w.empty());
    CHECK(res.loss_trace.size() == 3);
}

TEST_CASE("checkpoints round-trip bit-exact") {
    auto arch = toy_arch(4, 5);
    auto params = init_params(arch, 77);
    const std::string path = "test_ckpt.bin";
    save_checkpoint(path, params);
    auto loaded = load_checkpoint(path);
    CHECK(loaded.arch.networks == 2);
    CHECK(loaded.arch.encoder_widths == arch.encoder_widths);
    bool equal = true;
    std::vector<std::pair<const double*, Eigen::Index>> a, b;
    for_each_tensor(params, [&](const std::string&, auto& t, bool) {
        a.emplace_back(t.data(), t.size());
    });
    for_each_tensor(loaded, [&](const std::string&, auto& t, bool) {
        b.emplace_back(t.data(), t.size());
    });
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].second == b[i].second);
        for (Eigen::Index j = 0; j < a[i].second; ++j)
            if (a[i].first[j] != b[i].first[j]) equal = false;
    }
    CHECK(equal);
    std::remove(path.c_str());
}
