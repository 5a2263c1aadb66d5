#include "dime/metaprox.hpp"

#include <cstring>
#include <fstream>

namespace dime::metaprox {

using sparse::Csr;

const std::array<MetaPath, kNumPaths>& catalog() {
    using R = Relation;
    static const std::array<MetaPath, kNumPaths> paths = {{
        {0, "U->U", {R::follow}},
        {1, "U->U->U", {R::follow, R::follow}},
        {2, "U->U<-U", {R::follow, R::follow_inv}},
        {3, "U<-U->U", {R::follow_inv, R::follow}},
        {4, "U<-U<-U", {R::follow_inv, R::follow_inv}},
        {5, "U->P->W<-P<-U",
         {R::write, R::have_word, R::have_word_inv, R::write_inv}},
        {6, "U->P->T<-P<-U",
         {R::write, R::have_time, R::have_time_inv, R::write_inv}},
        {7, "U->P->L<-P<-U",
         {R::write, R::have_location, R::have_location_inv, R::write_inv}},
    }};
    return paths;
}

Csr<std::int64_t> relation_matrix(const netcore::HeterogeneousNetwork& net, Relation rel) {
    using Triplet = std::tuple<int, int, std::int64_t>;
    std::vector<Triplet> t;
    const int nu = net.user_count();
    const int np = net.post_count();
    auto attr_triplets = [&](netcore::AttrKind kind, bool inv) {
        for (int p = 0; p < np; ++p)
            for (int a : net.post_attrs(kind, p))
                t.emplace_back(inv ? a : p, inv ? p : a, 1);
        const int na = net.token_space(kind).size();
        return inv ? Csr<std::int64_t>::from_triplets(na, np, std::move(t))
                   : Csr<std::int64_t>::from_triplets(np, na, std::move(t));
    };
    switch (rel) {
        case Relation::follow:
            for (const auto& [u, v] : net.follow_edges) t.emplace_back(u, v, 1);
            return Csr<std::int64_t>::from_triplets(nu, nu, std::move(t));
        case Relation::follow_inv:
            for (const auto& [u, v] : net.follow_edges) t.emplace_back(v, u, 1);
            return Csr<std::int64_t>::from_triplets(nu, nu, std::move(t));
        case Relation::write:
            for (int p = 0; p < np; ++p) t.emplace_back(net.post_author[p], p, 1);
            return Csr<std::int64_t>::from_triplets(nu, np, std::move(t));
        case Relation::write_inv:
            for (int p = 0; p < np; ++p) t.emplace_back(p, net.post_author[p], 1);
            return Csr<std::int64_t>::from_triplets(np, nu, std::move(t));
        case Relation::have_word: return attr_triplets(netcore::AttrKind::word, false);
        case Relation::have_word_inv: return attr_triplets(netcore::AttrKind::word, true);
        case Relation::have_time: return attr_triplets(netcore::AttrKind::time, false);
        case Relation::have_time_inv: return attr_triplets(netcore::AttrKind::time, true);
        case Relation::have_location: return attr_triplets(netcore::AttrKind::location, false);
        default: return attr_triplets(netcore::AttrKind::location, true);
    }
}

Csr<std::int64_t> count_path_instances(const netcore::HeterogeneousNetwork& net,
                                       const MetaPath& phi, const ProxOptions& opts) {
    std::vector<Csr<std::int64_t>> steps;
    steps.reserve(phi.steps.size());
    for (Relation rel : phi.steps) steps.push_back(relation_matrix(net, rel));
    std::vector<const Csr<std::int64_t>*> chain;
    for (const auto& m : steps) chain.push_back(&m);
    sparse::SpGemmOptions gemm{opts.threads, opts.row_topn};
    Csr<std::int64_t> counts = sparse::chain_multiply(chain, gemm);
    counts.zero_diagonal();
    return counts;
}

namespace {

ProximityMatrix normalize(int path_id, const Csr<std::int64_t>& counts,
                          const std::vector<std::int64_t>& row, const std::vector<std::int64_t>& col) {
    ProximityMatrix out;
    out.path_id = path_id;
    out.row_counts.assign(row.begin(), row.end());
    out.col_counts.assign(col.begin(), col.end());
    Csr<double> scores(counts.rows, counts.cols);
    scores.indptr = counts.indptr;
    scores.indices = counts.indices;
    scores.data.resize(counts.data.size());
    for (int i = 0; i < counts.rows; ++i) {
        for (std::int64_t p = counts.indptr[i]; p < counts.indptr[i + 1]; ++p) {
            const double denom =
                static_cast<double>(row[i]) + static_cast<double>(col[counts.indices[p]]);
            scores.data[p] =
                denom > 0.0 ? 2.0 * static_cast<double>(counts.data[p]) / denom : 0.0;
        }
    }
    out.scores = std::move(scores);
    return out;
}

}  // namespace

ProximityMatrix meta_proximity(const netcore::HeterogeneousNetwork& net, const MetaPath& phi,
                               const ProxOptions& opts) {
    if (phi.id == 0)
        fail(ErrorKind::bad_argument,
             "phi0 is the binary friendship score; use friendship_proximity");
    if (opts.self_in_norms) {
        // sensitivity mode: sums keep self-path instances, entries do not
        std::vector<Csr<std::int64_t>> steps;
        for (Relation rel : phi.steps) steps.push_back(relation_matrix(net, rel));
        std::vector<const Csr<std::int64_t>*> chain;
        for (const auto& m : steps) chain.push_back(&m);
        Csr<std::int64_t> with_diag =
            sparse::chain_multiply(chain, sparse::SpGemmOptions{opts.threads, opts.row_topn});
        auto row = with_diag.row_sums();
        auto col = with_diag.col_sums();
        with_diag.zero_diagonal();
        return normalize(phi.id, with_diag, row, col);
    }
    Csr<std::int64_t> counts = count_path_instances(net, phi, opts);
    return normalize(phi.id, counts, counts.row_sums(), counts.col_sums());
}

ProximityMatrix friendship_proximity(const netcore::HeterogeneousNetwork& net) {
    Csr<std::int64_t> follow = relation_matrix(net, Relation::follow);
    ProximityMatrix out;
    out.path_id = 0;
    auto row = follow.row_sums();
    auto col = follow.col_sums();
    out.row_counts.assign(row.begin(), row.end());
    out.col_counts.assign(col.begin(), col.end());
    out.scores = follow.cast<double>();
    return out;
}

std::vector<ProximityMatrix> proximity_bundle(const netcore::HeterogeneousNetwork& net,
                                              const ProxOptions& opts) {
    std::vector<ProximityMatrix> bundle;
    bundle.reserve(kNumPaths);
    bundle.push_back(friendship_proximity(net));
    for (int k = 1; k < kNumPaths; ++k)
        bundle.push_back(meta_proximity(net, catalog()[k], opts));
    return bundle;
}

namespace {

constexpr char kMagic[9] = {'D', 'I', 'M', 'E', 'P', 'R', 'O', 'X', '1'};

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) fail(ErrorKind::io, "truncated bundle file '" + path + "'");
    return v;
}

}  // namespace

void save_bundle(const std::string& path, const std::vector<ProximityMatrix>& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write '" + path + "'");
    for (const auto& pm : bundle) {
        out.write(kMagic, sizeof(kMagic));
        write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(pm.scores.rows));
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(pm.path_id));
        write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(pm.scores.nnz()));
        for (int i = 0; i < pm.scores.rows; ++i) {
            for (std::int64_t p = pm.scores.indptr[i]; p < pm.scores.indptr[i + 1]; ++p) {
                write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(i));
                write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(pm.scores.indices[p]));
                write_pod<double>(out, pm.scores.data[p]);
            }
        }
    }
    if (!out) fail(ErrorKind::io, "write failed for '" + path + "'");
}

std::vector<ProximityMatrix> load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open '" + path + "'");
    std::vector<ProximityMatrix> bundle;
    while (true) {
        char magic[sizeof(kMagic)];
        in.read(magic, sizeof(magic));
        if (in.gcount() == 0 && in.eof()) break;
        if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
            fail(ErrorKind::parse, "bad bundle magic in '" + path + "'");
        const auto users = read_pod<std::uint64_t>(in, path);
        const auto path_id = read_pod<std::uint32_t>(in, path);
        const auto nnz = read_pod<std::uint64_t>(in, path);
        ProximityMatrix pm;
        pm.path_id = static_cast<int>(path_id);
        std::vector<std::tuple<int, int, double>> triplets;
        triplets.reserve(nnz);
        for (std::uint64_t e = 0; e < nnz; ++e) {
            const auto r = read_pod<std::uint32_t>(in, path);
            const auto c = read_pod<std::uint32_t>(in, path);
            const auto v = read_pod<double>(in, path);
            triplets.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
        }
        pm.scores = sparse::Csr<double>::from_triplets(static_cast<int>(users),
                                                       static_cast<int>(users),
                                                       std::move(triplets));
        bundle.push_back(std::move(pm));
    }
    return bundle;
}

}  // namespace dime::metaprox
