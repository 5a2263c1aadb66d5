#include "dime/synthgen.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dime/rng.hpp"

namespace dime::synthgen {

void SynthConfig::validate() const {
    if (users < 2) fail(ErrorKind::infeasible_config, "need at least two users");
    if (communities < 1) fail(ErrorKind::infeasible_config, "need at least one community");
    if (communities > users)
        fail(ErrorKind::infeasible_config, "more communities than users");
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(intra_p) || !prob(inter_p) || !prob(attribute_skew) || !prob(anchor_fraction))
        fail(ErrorKind::infeasible_config, "probabilities must lie in [0, 1]");
    if (intra_p <= inter_p)
        fail(ErrorKind::infeasible_config, "intra probability must exceed inter");
    if (!(emergence > 0.0) || emergence > 1.0)
        fail(ErrorKind::infeasible_config, "emergence factor must lie in (0, 1]");
    if (posts_per_user < 0.0) fail(ErrorKind::infeasible_config, "negative post rate");
    if (vocabulary < communities || locations < communities)
        fail(ErrorKind::infeasible_config,
             "vocabulary and locations must cover every community block");
    if (words_per_post < 0) fail(ErrorKind::infeasible_config, "negative words per post");
}

namespace {

constexpr int kHourBuckets = 168;

// Token drawn from the community's preferred block with probability `skew`,
// otherwise uniformly from the whole range.
int skewed_token(rng::Rng& r, int community, int communities, int range, double skew) {
    const int block = range / communities;
    if (block > 0 && r.bernoulli(skew)) {
        const int lo = community * block;
        return lo + static_cast<int>(r.uniform_int(block));
    }
    return static_cast<int>(r.uniform_int(range));
}

struct NetworkDraft {
    netcore::HeterogeneousNetwork net;
    std::vector<int> labels;
};

NetworkDraft build_network(const SynthConfig& cfg, const std::vector<int>& person_of_user,
                           const std::vector<int>& community_of_person, double thin,
                           std::uint64_t seed) {
    netcore::NetworkBuilder builder;
    const int n = static_cast<int>(person_of_user.size());
    std::vector<int> community(n);
    for (int u = 0; u < n; ++u) {
        builder.add_user("u" + std::to_string(u));
        community[u] = community_of_person[person_of_user[u]];
    }
    rng::Rng edges(rng::derive_seed(seed, "edges"));
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            if (u == v) continue;
            const double p =
                (community[u] == community[v] ? cfg.intra_p : cfg.inter_p) * thin;
            if (edges.bernoulli(p)) builder.add_follow_index(u, v);
        }
    }
    rng::Rng posts(rng::derive_seed(seed, "posts"));
    int post_counter = 0;
    for (int u = 0; u < n; ++u) {
        const int count = posts.poisson(cfg.posts_per_user * thin);
        for (int p = 0; p < count; ++p) {
            const std::string pid = "p" + std::to_string(post_counter++);
            const int post = builder.add_post(pid, "u" + std::to_string(u));
            for (int w = 0; w < cfg.words_per_post; ++w) {
                const int tok = skewed_token(posts, community[u], cfg.communities,
                                             cfg.vocabulary, cfg.attribute_skew);
                builder.add_word_index(post, "w" + std::to_string(tok));
            }
            const int hour = skewed_token(posts, community[u], cfg.communities, kHourBuckets,
                                          cfg.attribute_skew);
            builder.add_time_index(post, static_cast<std::int64_t>(hour) * 3600);
            const int loc = skewed_token(posts, community[u], cfg.communities, cfg.locations,
                                         cfg.attribute_skew);
            builder.add_location_index(post, "l" + std::to_string(loc));
        }
    }
    return {builder.finish(), std::move(community)};
}

}  // namespace

SynthResult generate_pair(const SynthConfig& cfg) {
    cfg.validate();
    const int n = cfg.users;
    const int anchors = static_cast<int>(std::lround(cfg.anchor_fraction * n));

    // persons 0..anchors-1 exist in both networks; the remainder of each
    // network is network-specific
    const int total_persons = 2 * n - anchors;
    std::vector<int> community_of_person(total_persons);
    for (int p = 0; p < total_persons; ++p) community_of_person[p] = p % cfg.communities;

    auto user_order = [&](const char* stage, int first_private) {
        std::vector<int> persons(n);
        for (int i = 0; i < anchors; ++i) persons[i] = i;
        for (int i = anchors; i < n; ++i) persons[i] = first_private + (i - anchors);
        rng::Rng r(rng::derive_seed(cfg.seed, stage));
        r.shuffle(persons);
        return persons;
    };
    const auto g1_person = user_order("g1.order", anchors);
    const auto g2_person = user_order("g2.order", n);

    NetworkDraft g1 = build_network(cfg, g1_person, community_of_person, cfg.emergence,
                                    rng::derive_seed(cfg.seed, "g1"));
    NetworkDraft g2 = build_network(cfg, g2_person, community_of_person, 1.0,
                                    rng::derive_seed(cfg.seed, "g2"));

    std::vector<int> g1_index_of_person(total_persons, -1), g2_index_of_person(total_persons, -1);
    for (int u = 0; u < n; ++u) {
        g1_index_of_person[g1_person[u]] = u;
        g2_index_of_person[g2_person[u]] = u;
    }
    SynthResult result;
    for (int p = 0; p < anchors; ++p)
        result.pair.anchors.emplace_back(g1_index_of_person[p], g2_index_of_person[p]);
    std::sort(result.pair.anchors.begin(), result.pair.anchors.end());
    result.pair.emerging = std::move(g1.net);
    result.pair.mature = std::move(g2.net);
    result.labels_emerging = std::move(g1.labels);
    result.labels_mature = std::move(g2.labels);
    return result;
}

SynthFiles write_files(const SynthResult& result, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    SynthFiles files;
    files.emerging_path = (fs::path(out_dir) / "emerging.edges").string();
    files.mature_path = (fs::path(out_dir) / "mature.edges").string();
    files.anchors_path = (fs::path(out_dir) / "anchors.txt").string();
    files.labels_path = (fs::path(out_dir) / "labels.csv").string();

    auto write_text = [](const std::string& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
        out << text;
    };
    write_text(files.emerging_path, netcore::serialize_network(result.pair.emerging));
    write_text(files.mature_path, netcore::serialize_network(result.pair.mature));
    write_text(files.anchors_path, netcore::serialize_anchors(result.pair));
    std::string labels = "user_id,community\n";
    for (int u = 0; u < result.pair.emerging.user_count(); ++u)
        labels += result.pair.emerging.user_ids[u] + "," +
                  std::to_string(result.labels_emerging[u]) + "\n";
    write_text(files.labels_path, labels);
    return files;
}

}  // namespace dime::synthgen
