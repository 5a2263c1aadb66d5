#include <doctest.h>

#include <vector>

#include "dime/rng.hpp"
#include "dime/sparse.hpp"

using namespace dime;
using sparse::Csr;

namespace {

Csr<std::int64_t> random_csr(rng::Rng& r, int rows, int cols, double density) {
    std::vector<std::tuple<int, int, std::int64_t>> t;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            if (r.bernoulli(density))
                t.emplace_back(i, j, 1 + static_cast<std::int64_t>(r.uniform_int(3)));
    return Csr<std::int64_t>::from_triplets(rows, cols, std::move(t));
}

std::vector<std::vector<std::int64_t>> dense(const Csr<std::int64_t>& m) {
    std::vector<std::vector<std::int64_t>> d(m.rows, std::vector<std::int64_t>(m.cols, 0));
    for (int i = 0; i < m.rows; ++i)
        for (std::int64_t p = m.indptr[i]; p < m.indptr[i + 1]; ++p)
            d[i][m.indices[p]] = m.data[p];
    return d;
}

std::vector<std::vector<std::int64_t>> dense_mul(const std::vector<std::vector<std::int64_t>>& a,
                                                 const std::vector<std::vector<std::int64_t>>& b) {
    const std::size_t n = a.size(), m = b[0].size(), k = b.size();
    std::vector<std::vector<std::int64_t>> c(n, std::vector<std::int64_t>(m, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < k; ++l)
            for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][l] * b[l][j];
    return c;
}

}  // namespace

TEST_CASE("from_triplets sums duplicates and sorts columns") {
    std::vector<std::tuple<int, int, std::int64_t>> t{{1, 2, 3}, {0, 1, 1}, {1, 2, 2}, {1, 0, 5}};
    auto m = Csr<std::int64_t>::from_triplets(2, 3, std::move(t));
    CHECK(m.nnz() == 3);
    CHECK(m.at(0, 1) == 1);
    CHECK(m.at(1, 0) == 5);
    CHECK(m.at(1, 2) == 5);
    CHECK(m.at(0, 0) == 0);
    for (int i = 0; i < m.rows; ++i)
        for (std::int64_t p = m.indptr[i] + 1; p < m.indptr[i + 1]; ++p)
            CHECK(m.indices[p - 1] < m.indices[p]);
}

TEST_CASE("multiply matches dense reference") {
    rng::Rng r(17);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 2 + static_cast<int>(r.uniform_int(10));
        const int k = 2 + static_cast<int>(r.uniform_int(10));
        const int m = 2 + static_cast<int>(r.uniform_int(10));
        auto a = random_csr(r, n, k, 0.3);
        auto b = random_csr(r, k, m, 0.3);
        auto c = sparse::multiply(a, b);
        CHECK(dense(c) == dense_mul(dense(a), dense(b)));
    }
}

TEST_CASE("threaded multiply equals single-threaded") {
    rng::Rng r(23);
    auto a = random_csr(r, 40, 30, 0.2);
    auto b = random_csr(r, 30, 35, 0.2);
    auto c1 = sparse::multiply(a, b, {.threads = 1});
    auto c4 = sparse::multiply(a, b, {.threads = 4});
    CHECK(c1 == c4);
}

TEST_CASE("transpose round-trips") {
    rng::Rng r(31);
    auto a = random_csr(r, 12, 9, 0.25);
    CHECK(a.transpose().transpose() == a);
}

TEST_CASE("chain_multiply agrees with sequential products regardless of end sparsity") {
    rng::Rng r(41);
    auto a = random_csr(r, 8, 12, 0.5);
    auto b = random_csr(r, 12, 10, 0.3);
    auto c = random_csr(r, 10, 6, 0.1);
    auto expected = sparse::multiply(sparse::multiply(a, b), c);
    CHECK(sparse::chain_multiply<std::int64_t>({&a, &b, &c}) == expected);
    // reversed heuristic path: make the right end the dense one
    auto expected2 = sparse::multiply(sparse::multiply(c.transpose(), b.transpose()), a.transpose())
                         .transpose();
    CHECK(dense(expected2) == dense(expected));
}

TEST_CASE("zero_diagonal removes only diagonal entries") {
    std::vector<std::tuple<int, int, std::int64_t>> t{{0, 0, 1}, {0, 1, 2}, {1, 1, 3}, {2, 0, 4}};
    auto m = Csr<std::int64_t>::from_triplets(3, 3, std::move(t));
    m.zero_diagonal();
    CHECK(m.nnz() == 2);
    CHECK(m.at(0, 1) == 2);
    CHECK(m.at(2, 0) == 4);
    CHECK(m.at(0, 0) == 0);
    CHECK(m.at(1, 1) == 0);
}

TEST_CASE("row_topn keeps the largest entries per row") {
    std::vector<std::tuple<int, int, std::int64_t>> ta{{0, 0, 1}, {0, 1, 1}, {0, 2, 1}};
    std::vector<std::tuple<int, int, std::int64_t>> tb{
        {0, 0, 5}, {1, 1, 9}, {2, 2, 7}};
    auto a = Csr<std::int64_t>::from_triplets(1, 3, std::move(ta));
    auto b = Csr<std::int64_t>::from_triplets(3, 3, std::move(tb));
    auto c = sparse::multiply(a, b, {.row_topn = 2});
    CHECK(c.nnz() == 2);
    CHECK(c.at(0, 1) == 9);
    CHECK(c.at(0, 2) == 7);
}

TEST_CASE("row and column sums") {
    std::vector<std::tuple<int, int, std::int64_t>> t{{0, 1, 2}, {1, 0, 3}, {1, 2, 4}};
    auto m = Csr<std::int64_t>::from_triplets(2, 3, std::move(t));
    CHECK(m.row_sums() == std::vector<std::int64_t>{2, 7});
    CHECK(m.col_sums() == std::vector<std::int64_t>{3, 2, 4});
}
