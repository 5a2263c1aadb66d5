#include "dime/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include "dime/rng.hpp"

namespace dime::evalkit {

std::vector<std::pair<int, int>> sample_negatives(const netcore::HeterogeneousNetwork& net,
                                                  int theta,
                                                  const std::vector<std::pair<int, int>>& positives,
                                                  std::uint64_t seed) {
    if (theta < 1 || theta > 10) fail(ErrorKind::bad_argument, "theta must be in 1..10");
    const std::int64_t n = net.user_count();
    std::unordered_set<std::uint64_t> excluded;
    for (const auto& [u, v] : positives)
        excluded.insert(netcore::HeterogeneousNetwork::edge_key(u, v));
    const std::int64_t want = theta * static_cast<std::int64_t>(positives.size());
    const std::int64_t available = n * (n - 1) - static_cast<std::int64_t>(excluded.size());
    if (want > available)
        fail(ErrorKind::insufficient_non_edges,
             "need " + std::to_string(want) + " non-edges but only " +
                 std::to_string(available) + " exist");
    rng::Rng r(rng::derive_seed(seed, "negatives"));
    std::vector<std::pair<int, int>> out;
    std::unordered_set<std::uint64_t> taken;
    out.reserve(want);
    while (static_cast<std::int64_t>(out.size()) < want) {
        const int u = static_cast<int>(r.uniform_int(n));
        const int v = static_cast<int>(r.uniform_int(n));
        if (u == v) continue;
        const std::uint64_t key = netcore::HeterogeneousNetwork::edge_key(u, v);
        if (excluded.count(key) || taken.count(key)) continue;
        taken.insert(key);
        out.emplace_back(u, v);
    }
    return out;
}

Vec link_features(const Mat& z, int u, int v) {
    if (u < 0 || v < 0 || u >= z.rows() || v >= z.rows())
        fail(ErrorKind::bad_argument, "link endpoint index out of range");
    Vec f(2 * z.cols());
    f.head(z.cols()) = z.row(u).transpose();
    f.tail(z.cols()) = z.row(v).transpose();
    return f;
}

LinearClassifier train_linear_classifier(const Mat& features, const std::vector<int>& labels,
                                         std::uint64_t seed, double reg, int passes) {
    const Eigen::Index m = features.rows();
    if (m != static_cast<Eigen::Index>(labels.size()))
        fail(ErrorKind::shape_mismatch, "feature rows and label count differ");
    bool has_pos = false, has_neg = false;
    for (int y : labels) (y > 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        fail(ErrorKind::single_class, "training set must contain both classes");

    LinearClassifier clf;
    clf.w = Vec::Zero(features.cols());
    clf.b = 0.0;
    rng::Rng r(rng::derive_seed(seed, "svm"));
    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::int64_t t = 0;
    for (int pass = 0; pass < passes; ++pass) {
        r.shuffle(order);
        for (int i : order) {
            ++t;
            const double eta = 1.0 / (reg * static_cast<double>(t));
            const double margin = labels[i] * (clf.w.dot(features.row(i)) + clf.b);
            clf.w *= (1.0 - eta * reg);
            if (margin < 1.0) {
                clf.w += eta * labels[i] * features.row(i).transpose();
                clf.b += eta * labels[i];
            }
        }
    }
    return clf;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        fail(ErrorKind::shape_mismatch, "score and label counts differ");
    std::int64_t pos = 0, neg = 0;
    for (int y : labels) (y > 0 ? pos : neg) += 1;
    if (pos == 0 || neg == 0) fail(ErrorKind::single_class, "auc needs both classes");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // average ranks over tied blocks, then the Mann-Whitney identity
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t q = i; q <= j; ++q)
            if (labels[order[q]] > 0) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    const double u_stat =
        rank_sum_pos - 0.5 * static_cast<double>(pos) * (static_cast<double>(pos) + 1.0);
    return u_stat / (static_cast<double>(pos) * static_cast<double>(neg));
}

ClassificationMetrics classification_metrics(const std::vector<int>& predicted,
                                             const std::vector<int>& truth) {
    if (predicted.size() != truth.size())
        fail(ErrorKind::shape_mismatch, "prediction and truth lengths differ");
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted[i] > 0;
        const bool t = truth[i] > 0;
        if (p && t) ++tp;
        else if (p && !t) ++fp;
        else if (!p && t) ++fn;
        else ++tn;
    }
    ClassificationMetrics m;
    const double total = static_cast<double>(truth.size());
    m.accuracy = total > 0.0 ? static_cast<double>(tp + tn) / total : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const double precision =
        tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.f1 = precision + m.recall > 0.0 ? 2.0 * precision * m.recall / (precision + m.recall) : 0.0;
    return m;
}

LinkExperimentPlan build_link_plan(const netcore::HeterogeneousNetwork& net, double lambda,
                                   int theta, std::uint64_t seed) {
    LinkExperimentPlan plan;
    plan.lambda = lambda;
    plan.theta = theta;
    plan.seed = seed;
    plan.positives = net.follow_edges;
    plan.negatives = sample_negatives(net, theta, plan.positives, seed);
    auto assign_folds = [&](std::size_t count, const char* stage) {
        std::vector<int> fold(count);
        std::vector<int> order(count);
        std::iota(order.begin(), order.end(), 0);
        rng::Rng r(rng::derive_seed(seed, stage));
        r.shuffle(order);
        for (std::size_t i = 0; i < count; ++i)
            fold[order[i]] = static_cast<int>(i * 10 / count);
        return fold;
    };
    plan.fold_of_positive = assign_folds(plan.positives.size(), "folds.pos");
    plan.fold_of_negative = assign_folds(plan.negatives.size(), "folds.neg");
    return plan;
}

const char* method_name(Method m) {
    switch (m) {
        case Method::dime: return "dime";
        case Method::dime_sh: return "dime-sh";
        default: return "auto";
    }
}

Method parse_method(const std::string& name) {
    if (name == "dime") return Method::dime;
    if (name == "dime-sh") return Method::dime_sh;
    if (name == "auto") return Method::auto_baseline;
    fail(ErrorKind::bad_argument, "unknown method '" + name + "'");
}

double MetricColumn::mean() const {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
}

double MetricColumn::stddev() const {
    if (values.size() < 2) return 0.0;
    const double m = mean();
    double acc = 0.0;
    for (double v : values) acc += (v - m) * (v - m);
    return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

const MetricColumn& ExperimentResult::column(const std::string& name) const {
    for (const auto& c : metrics)
        if (c.name == name) return c;
    fail(ErrorKind::bad_argument, "no metric column '" + name + "'");
}

std::string format_mean_std(double mean, double stddev) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f±%.3f", mean, stddev);
    return buf;
}

Mat embed_emerging(const netcore::AlignedPair& pair,
                   const netcore::HeterogeneousNetwork& sampled_emerging,
                   deepalign::ArchitectureSpec arch, deepalign::TrainConfig train_cfg,
                   Method method,
                   const std::vector<metaprox::ProximityMatrix>* mature_bundle) {
    const auto bundle1 = metaprox::proximity_bundle(sampled_emerging);
    switch (method) {
        case Method::dime: {
            if (mature_bundle == nullptr)
                fail(ErrorKind::bad_argument, "dime needs the mature-network bundle");
            netcore::AlignedPair run_pair{sampled_emerging, pair.mature, pair.anchors};
            auto result =
                deepalign::train(run_pair, bundle1, *mature_bundle, arch, train_cfg);
            return result.embeddings[0];
        }
        case Method::dime_sh: {
            auto result = deepalign::embed_single(sampled_emerging, bundle1, arch, train_cfg);
            return result.embeddings[0];
        }
        default: {
            arch.active_paths.fill(false);
            arch.active_paths[0] = true;  // friendship rows only
            auto result = deepalign::embed_single(sampled_emerging, bundle1, arch, train_cfg);
            return result.embeddings[0];
        }
    }
}

ExperimentResult run_link_experiment(const netcore::AlignedPair& pair,
                                     deepalign::ArchitectureSpec arch,
                                     deepalign::TrainConfig train_cfg, Method method,
                                     double lambda, int theta, std::uint64_t seed) {
    const LinkExperimentPlan plan = build_link_plan(pair.emerging, lambda, theta, seed);
    std::vector<metaprox::ProximityMatrix> mature_bundle;
    if (method == Method::dime) mature_bundle = metaprox::proximity_bundle(pair.mature);

    MetricColumn auc_col{"auc", {}}, acc_col{"accuracy", {}}, rec_col{"recall", {}},
        f1_col{"f1", {}};
    for (int fold = 0; fold < 10; ++fold) {
        std::vector<std::pair<int, int>> train_pos, test_pos, train_neg, test_neg;
        for (std::size_t i = 0; i < plan.positives.size(); ++i)
            (plan.fold_of_positive[i] == fold ? test_pos : train_pos)
                .push_back(plan.positives[i]);
        for (std::size_t i = 0; i < plan.negatives.size(); ++i)
            (plan.fold_of_negative[i] == fold ? test_neg : train_neg)
                .push_back(plan.negatives[i]);

        // test links never enter the embedding network; the training links
        // are then lambda-sampled along with the posts
        auto fold_net = netcore::with_follow_edges(pair.emerging, train_pos);
        auto sampled = netcore::sample_network(
            fold_net, lambda, rng::derive_seed(seed, "sample", fold));

        deepalign::TrainConfig fold_cfg = train_cfg;
        fold_cfg.seed = rng::derive_seed(train_cfg.seed, "fold", fold);
        const Mat z = embed_emerging(pair, sampled, arch, fold_cfg, method,
                                     method == Method::dime ? &mature_bundle : nullptr);

        // surviving training positives are the positive examples
        const auto& surviving = sampled.follow_edges;
        const Eigen::Index dim = 2 * z.cols();
        Mat features(static_cast<Eigen::Index>(surviving.size() + train_neg.size()), dim);
        std::vector<int> labels;
        labels.reserve(surviving.size() + train_neg.size());
        Eigen::Index row = 0;
        for (const auto& [u, v] : surviving) {
            features.row(row++) = link_features(z, u, v).transpose();
            labels.push_back(1);
        }
        for (const auto& [u, v] : train_neg) {
            features.row(row++) = link_features(z, u, v).transpose();
            labels.push_back(-1);
        }
        const auto clf = train_linear_classifier(features, labels,
                                                 rng::derive_seed(seed, "svm", fold));

        std::vector<double> scores;
        std::vector<int> pred, truth;
        for (const auto& [u, v] : test_pos) {
            const Vec f = link_features(z, u, v);
            scores.push_back(clf.score(f));
            pred.push_back(clf.predict(f));
            truth.push_back(1);
        }
        for (const auto& [u, v] : test_neg) {
            const Vec f = link_features(z, u, v);
            scores.push_back(clf.score(f));
            pred.push_back(clf.predict(f));
            truth.push_back(-1);
        }
        auc_col.values.push_back(auc(scores, truth));
        const auto cm = classification_metrics(pred, truth);
        acc_col.values.push_back(cm.accuracy);
        rec_col.values.push_back(cm.recall);
        f1_col.values.push_back(cm.f1);
    }
    return ExperimentResult{{auc_col, acc_col, rec_col, f1_col}};
}

Clustering kmeans(const Mat& z, int k, std::uint64_t seed) {
    const Eigen::Index n = z.rows();
    if (k < 1 || k > n) fail(ErrorKind::bad_argument, "k must lie in 1..|U|");
    constexpr int kRestarts = 10;
    constexpr int kMaxIters = 300;

    Clustering best;
    double best_inertia = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < kRestarts; ++restart) {
        rng::Rng r(rng::derive_seed(seed, "kmeans", restart));
        // distance-weighted probabilistic seeding
        Mat centers(k, z.cols());
        centers.row(0) = z.row(static_cast<Eigen::Index>(r.uniform_int(n)));
        Vec d2 = (z.rowwise() - centers.row(0)).rowwise().squaredNorm();
        for (int c = 1; c < k; ++c) {
            const double total = d2.sum();
            Eigen::Index pick = 0;
            if (total > 0.0) {
                const double target = r.uniform_real() * total;
                double acc = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    acc += d2[i];
                    if (acc >= target) {
                        pick = i;
                        break;
                    }
                }
            } else {
                pick = static_cast<Eigen::Index>(r.uniform_int(n));
            }
            centers.row(c) = z.row(pick);
            d2 = d2.cwiseMin((z.rowwise() - centers.row(c)).rowwise().squaredNorm());
        }

        std::vector<int> assign(n, 0);
        for (int iter = 0; iter < kMaxIters; ++iter) {
            bool changed = false;
            for (Eigen::Index i = 0; i < n; ++i) {
                int arg = 0;
                double bestd = (z.row(i) - centers.row(0)).squaredNorm();
                for (int c = 1; c < k; ++c) {
                    const double d = (z.row(i) - centers.row(c)).squaredNorm();
                    if (d < bestd) {
                        bestd = d;
                        arg = c;
                    }
                }
                if (assign[i] != arg) {
                    assign[i] = arg;
                    changed = true;
                }
            }
            Mat sums = Mat::Zero(k, z.cols());
            std::vector<int> counts(k, 0);
            for (Eigen::Index i = 0; i < n; ++i) {
                sums.row(assign[i]) += z.row(i);
                ++counts[assign[i]];
            }
            for (int c = 0; c < k; ++c) {
                if (counts[c] > 0) {
                    centers.row(c) = sums.row(c) / counts[c];
                } else {
                    // move the empty center onto the farthest point
                    Eigen::Index far = 0;
                    double fard = -1.0;
                    for (Eigen::Index i = 0; i < n; ++i) {
                        const double d = (z.row(i) - centers.row(assign[i])).squaredNorm();
                        if (d > fard) {
                            fard = d;
                            far = i;
                        }
                    }
                    centers.row(c) = z.row(far);
                    changed = true;
                }
            }
            if (!changed && iter > 0) break;
        }
        double inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            inertia += (z.row(i) - centers.row(assign[i])).squaredNorm();
        if (inertia < best_inertia) {
            best_inertia = inertia;
            best.assignment = assign;
            best.k = k;
        }
    }
    return best;
}

CommunityMetrics community_metrics(const netcore::HeterogeneousNetwork& full_net,
                                   const Clustering& clustering) {
    if (static_cast<int>(clustering.assignment.size()) != full_net.user_count())
        fail(ErrorKind::bad_argument, "clustering must cover every user");
    // symmetrized follow graph
    std::unordered_set<std::uint64_t> seen;
    std::int64_t m = 0, intra = 0;
    for (const auto& [u, v] : full_net.follow_edges) {
        const int a = std::min(u, v), b = std::max(u, v);
        if (!seen.insert(netcore::HeterogeneousNetwork::edge_key(a, b)).second) continue;
        ++m;
        if (clustering.assignment[u] == clustering.assignment[v]) ++intra;
    }
    if (m == 0) fail(ErrorKind::bad_argument, "community metrics need at least one edge");
    const std::int64_t cross = m - intra;

    CommunityMetrics out;
    out.coverage = static_cast<double>(intra) / static_cast<double>(m);
    out.expansion = 1.0 - out.coverage;
    constexpr double kSeparabilitySentinel = 1e18;
    out.separability = cross > 0
                           ? static_cast<double>(intra) / static_cast<double>(cross)
                           : kSeparabilitySentinel;
    std::vector<std::int64_t> sizes(clustering.k, 0);
    for (int c : clustering.assignment) ++sizes[c];
    double possible = 0.0;
    for (std::int64_t s : sizes) possible += 0.5 * static_cast<double>(s) * static_cast<double>(s - 1);
    out.density = possible > 0.0 ? static_cast<double>(intra) / possible : 0.0;
    return out;
}

ExperimentResult run_community_experiment(const netcore::AlignedPair& pair,
                                          deepalign::ArchitectureSpec arch,
                                          deepalign::TrainConfig train_cfg, Method method,
                                          double lambda, int k, int runs, std::uint64_t seed) {
    if (runs < 1) fail(ErrorKind::bad_argument, "need at least one run");
    std::vector<metaprox::ProximityMatrix> mature_bundle;
    if (method == Method::dime) mature_bundle = metaprox::proximity_bundle(pair.mature);

    MetricColumn den{"density", {}}, sep{"separability", {}}, cov{"coverage", {}},
        exp{"expansion", {}};
    for (int run = 0; run < runs; ++run) {
        auto sampled = netcore::sample_network(pair.emerging, lambda,
                                               rng::derive_seed(seed, "sample", run));
        deepalign::TrainConfig run_cfg = train_cfg;
        run_cfg.seed = rng::derive_seed(train_cfg.seed, "run", run);
        const Mat z = embed_emerging(pair, sampled, arch, run_cfg, method,
                                     method == Method::dime ? &mature_bundle : nullptr);
        const auto clustering = kmeans(z, k, rng::derive_seed(seed, "kmeans", run));
        const auto cm = community_metrics(pair.emerging, clustering);
        den.values.push_back(cm.density);
        sep.values.push_back(cm.separability);
        cov.values.push_back(cm.coverage);
        exp.values.push_back(cm.expansion);
    }
    return ExperimentResult{{den, sep, cov, exp}};
}

}  // namespace dime::evalkit
