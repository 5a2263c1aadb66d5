#include "dime/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dime/rng.hpp"

namespace dime::netcore {

int TokenSpace::intern(const std::string& token) {
    auto it = id_of.find(token);
    if (it != id_of.end()) return it->second;
    int id = static_cast<int>(tokens.size());
    tokens.push_back(token);
    id_of.emplace(token, id);
    return id;
}

int TokenSpace::find(const std::string& token) const {
    auto it = id_of.find(token);
    return it == id_of.end() ? -1 : it->second;
}

int NetworkBuilder::require_user(const std::string& id) const {
    auto it = net_.user_index.find(id);
    if (it == net_.user_index.end())
        fail(ErrorKind::dangling_reference, "unknown user id '" + id + "'");
    return it->second;
}

int NetworkBuilder::require_post(const std::string& id) const {
    auto it = net_.post_index.find(id);
    if (it == net_.post_index.end())
        fail(ErrorKind::dangling_reference, "unknown post id '" + id + "'");
    return it->second;
}

int NetworkBuilder::add_user(const std::string& id) {
    if (net_.user_index.count(id))
        fail(ErrorKind::duplicate_node, "duplicate user id '" + id + "'");
    int idx = net_.user_count();
    net_.user_ids.push_back(id);
    net_.user_index.emplace(id, idx);
    return idx;
}

int NetworkBuilder::add_post(const std::string& id, const std::string& user_id) {
    if (net_.post_index.count(id))
        fail(ErrorKind::duplicate_node, "duplicate post id '" + id + "'");
    int author = require_user(user_id);
    int idx = net_.post_count();
    net_.post_ids.push_back(id);
    net_.post_index.emplace(id, idx);
    net_.post_author.push_back(author);
    net_.post_words.emplace_back();
    net_.post_times.emplace_back();
    net_.post_locations.emplace_back();
    return idx;
}

void NetworkBuilder::add_follow(const std::string& u, const std::string& v) {
    add_follow_index(require_user(u), require_user(v));
}

void NetworkBuilder::add_follow_index(int u, int v) {
    if (u == v) fail(ErrorKind::bad_argument, "self-loop follow edge on user index " +
                                                  std::to_string(u));
    const std::uint64_t key = HeterogeneousNetwork::edge_key(u, v);
    if (net_.follow_set.count(key))
        fail(ErrorKind::duplicate_edge, "duplicate follow edge " + net_.user_ids[u] +
                                            " -> " + net_.user_ids[v]);
    net_.follow_set.insert(key);
    net_.follow_edges.emplace_back(u, v);
}

namespace {

void add_unique(std::vector<int>& attrs, int id) {
    if (std::find(attrs.begin(), attrs.end(), id) == attrs.end()) attrs.push_back(id);
}

std::string canonical_time_token(std::int64_t ts, TimeBucketing bucketing) {
    if (bucketing == TimeBucketing::hour_of_week) {
        const std::int64_t bucket = (ts / 3600) % 168;
        return std::to_string(bucket * 3600);
    }
    return std::to_string(ts);
}

}  // namespace

void NetworkBuilder::add_word(const std::string& post_id, const std::string& token) {
    add_word_index(require_post(post_id), token);
}

void NetworkBuilder::add_word_index(int post, const std::string& token) {
    add_unique(net_.post_words[post], net_.words.intern(token));
}

void NetworkBuilder::add_time(const std::string& post_id, std::int64_t ts) {
    add_time_index(require_post(post_id), ts);
}

void NetworkBuilder::add_time_index(int post, std::int64_t ts) {
    if (ts < 0) fail(ErrorKind::bad_argument, "negative timestamp");
    add_unique(net_.post_times[post],
               net_.times.intern(canonical_time_token(ts, options_.bucketing)));
}

void NetworkBuilder::add_location(const std::string& post_id, const std::string& token) {
    add_location_index(require_post(post_id), token);
}

void NetworkBuilder::add_location_index(int post, const std::string& token) {
    add_unique(net_.post_locations[post], net_.locations.intern(token));
}

namespace {

[[noreturn]] void parse_fail(const std::string& origin, int line_no, const std::string& what) {
    fail(ErrorKind::parse, origin + ":" + std::to_string(line_no) + ": " + what);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string f;
    while (ss >> f) fields.push_back(f);
    return fields;
}

}  // namespace

HeterogeneousNetwork parse_network(std::istream& in, const std::string& origin,
                                   const LoadOptions& options) {
    NetworkBuilder builder(options);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = split_fields(line);
        if (fields.empty() || fields[0][0] == '#') continue;
        const std::string& rec = fields[0];
        try {
            if (rec == "U") {
                if (fields.size() != 2) parse_fail(origin, line_no, "expected 'U <id>'");
                builder.add_user(fields[1]);
            } else if (rec == "P") {
                if (fields.size() != 3) parse_fail(origin, line_no, "expected 'P <id> <user-id>'");
                builder.add_post(fields[1], fields[2]);
            } else if (rec == "F") {
                if (fields.size() != 3) parse_fail(origin, line_no, "expected 'F <u> <v>'");
                builder.add_follow(fields[1], fields[2]);
            } else if (rec == "AW") {
                if (fields.size() != 3) parse_fail(origin, line_no, "expected 'AW <post> <word>'");
                builder.add_word(fields[1], fields[2]);
            } else if (rec == "AT") {
                if (fields.size() != 3)
                    parse_fail(origin, line_no, "expected 'AT <post> <timestamp-seconds>'");
                std::int64_t ts = 0;
                try {
                    std::size_t pos = 0;
                    ts = std::stoll(fields[2], &pos);
                    if (pos != fields[2].size()) throw std::invalid_argument("trailing");
                } catch (const std::exception&) {
                    parse_fail(origin, line_no, "bad timestamp '" + fields[2] + "'");
                }
                if (ts < 0) parse_fail(origin, line_no, "negative timestamp");
                builder.add_time(fields[1], ts);
            } else if (rec == "AL") {
                if (fields.size() != 3)
                    parse_fail(origin, line_no, "expected 'AL <post> <location-id>'");
                builder.add_location(fields[1], fields[2]);
            } else {
                parse_fail(origin, line_no, "unknown record type '" + rec + "'");
            }
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::parse) throw;
            throw Error(e.kind(), origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return builder.finish();
}

HeterogeneousNetwork load_network(const std::string& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
    return parse_network(in, path, options);
}

std::string serialize_network(const HeterogeneousNetwork& net) {
    std::ostringstream out;
    for (const auto& id : net.user_ids) out << "U " << id << "\n";
    for (int p = 0; p < net.post_count(); ++p)
        out << "P " << net.post_ids[p] << " " << net.user_ids[net.post_author[p]] << "\n";
    auto edges = net.follow_edges;
    std::sort(edges.begin(), edges.end());
    for (const auto& [u, v] : edges)
        out << "F " << net.user_ids[u] << " " << net.user_ids[v] << "\n";
    auto emit_attrs = [&](const char* tag, const std::vector<std::vector<int>>& attrs,
                          const TokenSpace& space, bool numeric) {
        for (int p = 0; p < net.post_count(); ++p) {
            std::vector<std::string> toks;
            toks.reserve(attrs[p].size());
            for (int id : attrs[p]) toks.push_back(space.tokens[id]);
            if (numeric)
                std::sort(toks.begin(), toks.end(), [](const std::string& a, const std::string& b) {
                    return std::stoll(a) < std::stoll(b);
                });
            else
                std::sort(toks.begin(), toks.end());
            for (const auto& t : toks) out << tag << " " << net.post_ids[p] << " " << t << "\n";
        }
    };
    emit_attrs("AW", net.post_words, net.words, false);
    emit_attrs("AT", net.post_times, net.times, true);
    emit_attrs("AL", net.post_locations, net.locations, false);
    return out.str();
}

AlignedPair parse_anchors(std::istream& in, const std::string& origin, HeterogeneousNetwork g1,
                          HeterogeneousNetwork g2) {
    AlignedPair pair{std::move(g1), std::move(g2), {}};
    std::vector<bool> used1(pair.emerging.user_count(), false);
    std::vector<bool> used2(pair.mature.user_count(), false);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = split_fields(line);
        if (fields.empty() || fields[0][0] == '#') continue;
        if (fields.size() != 2) parse_fail(origin, line_no, "expected '<g1-user> <g2-user>'");
        auto it1 = pair.emerging.user_index.find(fields[0]);
        if (it1 == pair.emerging.user_index.end())
            fail(ErrorKind::unknown_user, origin + ":" + std::to_string(line_no) +
                                              ": unknown G1 user '" + fields[0] + "'");
        auto it2 = pair.mature.user_index.find(fields[1]);
        if (it2 == pair.mature.user_index.end())
            fail(ErrorKind::unknown_user, origin + ":" + std::to_string(line_no) +
                                              ": unknown G2 user '" + fields[1] + "'");
        if (used1[it1->second] || used2[it2->second])
            fail(ErrorKind::non_injective, origin + ":" + std::to_string(line_no) +
                                               ": user appears in more than one anchor");
        used1[it1->second] = true;
        used2[it2->second] = true;
        pair.anchors.emplace_back(it1->second, it2->second);
    }
    return pair;
}

AlignedPair load_anchors(const std::string& path, HeterogeneousNetwork g1,
                         HeterogeneousNetwork g2) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
    return parse_anchors(in, path, std::move(g1), std::move(g2));
}

std::string serialize_anchors(const AlignedPair& pair) {
    auto anchors = pair.anchors;
    std::sort(anchors.begin(), anchors.end());
    std::ostringstream out;
    for (const auto& [a, b] : anchors)
        out << pair.emerging.user_ids[a] << " " << pair.mature.user_ids[b] << "\n";
    return out.str();
}

namespace {

// ceil(lambda * count) with a nudge so that rationals like 0.3 * 10 land on
// the intended integer instead of one above it.
std::size_t survivor_count(double lambda, std::size_t count) {
    if (count == 0) return 0;
    const double target = lambda * static_cast<double>(count);
    auto k = static_cast<std::size_t>(std::ceil(target - 1e-9));
    return std::min(k, count);
}

}  // namespace

HeterogeneousNetwork sample_network(const HeterogeneousNetwork& net, double lambda,
                                    std::uint64_t seed,
                                    const std::vector<std::pair<int, int>>& protected_edges) {
    if (!(lambda > 0.0) || lambda > 1.0)
        fail(ErrorKind::bad_argument, "lambda must lie in (0, 1]");
    std::unordered_set<std::uint64_t> protected_set;
    for (const auto& [u, v] : protected_edges)
        protected_set.insert(HeterogeneousNetwork::edge_key(u, v));

    std::vector<std::size_t> candidate;  // positions into follow_edges
    for (std::size_t i = 0; i < net.follow_edges.size(); ++i) {
        const auto& [u, v] = net.follow_edges[i];
        if (!protected_set.count(HeterogeneousNetwork::edge_key(u, v))) candidate.push_back(i);
    }
    std::vector<bool> keep_edge(net.follow_edges.size(), true);
    {
        rng::Rng r(rng::derive_seed(seed, "sample.edges"));
        auto chosen = r.choose(candidate.size(), survivor_count(lambda, candidate.size()));
        std::vector<bool> keep_candidate(candidate.size(), false);
        for (std::size_t c : chosen) keep_candidate[c] = true;
        for (std::size_t c = 0; c < candidate.size(); ++c)
            if (!keep_candidate[c]) keep_edge[candidate[c]] = false;
    }
    std::vector<bool> keep_post(net.post_ids.size(), false);
    {
        rng::Rng r(rng::derive_seed(seed, "sample.posts"));
        for (std::size_t p : r.choose(net.post_ids.size(),
                                      survivor_count(lambda, net.post_ids.size())))
            keep_post[p] = true;
    }

    // tokens are already canonical; rebuild without re-bucketing
    NetworkBuilder builder(LoadOptions{TimeBucketing::none});
    for (const auto& id : net.user_ids) builder.add_user(id);
    for (std::size_t i = 0; i < net.follow_edges.size(); ++i)
        if (keep_edge[i]) builder.add_follow_index(net.follow_edges[i].first,
                                                   net.follow_edges[i].second);
    for (int p = 0; p < net.post_count(); ++p) {
        if (!keep_post[p]) continue;
        int np = builder.add_post(net.post_ids[p], net.user_ids[net.post_author[p]]);
        for (int id : net.post_words[p]) builder.add_word_index(np, net.words.tokens[id]);
        for (int id : net.post_times[p])
            builder.add_time_index(np, std::stoll(net.times.tokens[id]));
        for (int id : net.post_locations[p])
            builder.add_location_index(np, net.locations.tokens[id]);
    }
    return builder.finish();
}

std::vector<std::pair<int, int>> TransitionMatrix::entries() const {
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < rows; ++i)
        if (partner_of_g1[i] >= 0) out.emplace_back(i, partner_of_g1[i]);
    return out;
}

TransitionMatrix build_transition_matrix(const AlignedPair& pair) {
    TransitionMatrix t;
    t.rows = pair.emerging.user_count();
    t.cols = pair.mature.user_count();
    t.partner_of_g1.assign(t.rows, -1);
    t.partner_of_g2.assign(t.cols, -1);
    for (const auto& [a, b] : pair.anchors) {
        t.partner_of_g1[a] = b;
        t.partner_of_g2[b] = a;
    }
    return t;
}

HeterogeneousNetwork with_follow_edges(const HeterogeneousNetwork& net,
                                       const std::vector<std::pair<int, int>>& edges) {
    HeterogeneousNetwork out = net;
    out.follow_edges.clear();
    out.follow_set.clear();
    for (const auto& [u, v] : edges) {
        out.follow_set.insert(HeterogeneousNetwork::edge_key(u, v));
        out.follow_edges.emplace_back(u, v);
    }
    return out;
}

}  // namespace dime::netcore
