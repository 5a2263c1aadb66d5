#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dime/deepalign.hpp"
#include "dime/netcore.hpp"

namespace dime::evalkit {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Link prediction.

// theta * |positives| distinct ordered non-edge pairs (u != v), disjoint
// from the positives; deterministic under seed.
std::vector<std::pair<int, int>> sample_negatives(const netcore::HeterogeneousNetwork& net,
                                                  int theta,
                                                  const std::vector<std::pair<int, int>>& positives,
                                                  std::uint64_t seed);

// Concatenation [Z(u,:), Z(v,:)].
Vec link_features(const Mat& z, int u, int v);

struct LinearClassifier {
    Vec w;
    double b = 0.0;

    double score(const Vec& x) const { return w.dot(x) + b; }
    int predict(const Vec& x) const { return score(x) > 0.0 ? 1 : -1; }
};

// L2-regularized hinge loss trained by stochastic subgradient descent
// (Pegasos-style schedule); labels in {+1, -1}.
LinearClassifier train_linear_classifier(const Mat& features, const std::vector<int>& labels,
                                         std::uint64_t seed, double reg = 1e-4,
                                         int passes = 200);

// Mann-Whitney statistic; ties count 1/2.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct ClassificationMetrics {
    double accuracy = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};
ClassificationMetrics classification_metrics(const std::vector<int>& predicted,
                                             const std::vector<int>& truth);

struct LinkExperimentPlan {
    std::vector<std::pair<int, int>> positives;
    std::vector<std::pair<int, int>> negatives;
    std::vector<int> fold_of_positive;  // 0..9
    std::vector<int> fold_of_negative;
    double lambda = 1.0;
    int theta = 1;
    std::uint64_t seed = 0;
};

LinkExperimentPlan build_link_plan(const netcore::HeterogeneousNetwork& net, double lambda,
                                   int theta, std::uint64_t seed);

enum class Method { dime, dime_sh, auto_baseline };
const char* method_name(Method m);
Method parse_method(const std::string& name);

// Per-fold (or per-run) values for each metric plus mean/std summaries.
struct MetricColumn {
    std::string name;
    std::vector<double> values;

    double mean() const;
    double stddev() const;  // sample standard deviation
};

struct ExperimentResult {
    std::vector<MetricColumn> metrics;

    const MetricColumn& column(const std::string& name) const;
};

// "0.852±0.004", three decimals, the table format used for reporting.
std::string format_mean_std(double mean, double stddev);

// Full supervised protocol: plan, per-fold network sampling, embedding,
// classifier fit on the surviving training links, scoring of the held-out
// fold. Metrics: auc, accuracy, recall, f1.
ExperimentResult run_link_experiment(const netcore::AlignedPair& pair,
                                     deepalign::ArchitectureSpec arch,
                                     deepalign::TrainConfig train_cfg, Method method,
                                     double lambda, int theta, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Community detection.

struct Clustering {
    std::vector<int> assignment;
    int k = 0;
};

// Lloyd iterations with distance-weighted probabilistic seeding, 10
// restarts, 300 iterations cap, best inertia kept.
Clustering kmeans(const Mat& z, int k, std::uint64_t seed);

struct CommunityMetrics {
    double density = 0.0;
    double separability = 0.0;
    double coverage = 0.0;
    double expansion = 0.0;  // always exactly 1 - coverage
};

// Evaluated on the symmetrized follow graph of the full (pre-sampling)
// network.
CommunityMetrics community_metrics(const netcore::HeterogeneousNetwork& full_net,
                                   const Clustering& clustering);

// Sample at lambda, embed, cluster, score against the unsampled network;
// repeated `runs` times with derived seeds. Metrics: density, separability,
// coverage, expansion.
ExperimentResult run_community_experiment(const netcore::AlignedPair& pair,
                                          deepalign::ArchitectureSpec arch,
                                          deepalign::TrainConfig train_cfg, Method method,
                                          double lambda, int k, int runs, std::uint64_t seed);

// Shared by both experiment drivers: embed the (already sampled) emerging
// network with the requested method.
Mat embed_emerging(const netcore::AlignedPair& pair,
                   const netcore::HeterogeneousNetwork& sampled_emerging,
                   deepalign::ArchitectureSpec arch, deepalign::TrainConfig train_cfg,
                   Method method,
                   const std::vector<metaprox::ProximityMatrix>* mature_bundle);

}  // namespace dime::evalkit
