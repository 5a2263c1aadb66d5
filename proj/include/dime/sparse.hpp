#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <tuple>
#include <vector>

#include "dime/common.hpp"

namespace dime::sparse {

struct SpGemmOptions {
    int threads = 1;   // row blocks of the product run on this many threads
    int row_topn = 0;  // keep only the N largest entries per row; 0 = exact
};

// Compressed-row matrix with sorted column indices per row. Count matrices
// use T = int64_t so hub-heavy chains cannot overflow during accumulation.
template <typename T>
struct Csr {
    int rows = 0;
    int cols = 0;
    std::vector<std::int64_t> indptr{0};  // size rows + 1
    std::vector<std::int32_t> indices;
    std::vector<T> data;

    Csr() = default;
    Csr(int r, int c) : rows(r), cols(c), indptr(static_cast<std::size_t>(r) + 1, 0) {}

    std::int64_t nnz() const { return indptr.empty() ? 0 : indptr.back(); }

    static Csr from_triplets(int rows, int cols,
                             std::vector<std::tuple<int, int, T>> triplets);

    Csr transpose() const;

    T at(int i, int j) const {
        auto lo = indices.begin() + indptr[i];
        auto hi = indices.begin() + indptr[i + 1];
        auto it = std::lower_bound(lo, hi, j);
        if (it == hi || *it != j) return T{};
        return data[static_cast<std::size_t>(it - indices.begin())];
    }

    std::vector<T> row_sums() const {
        std::vector<T> s(rows, T{});
        for (int i = 0; i < rows; ++i)
            for (std::int64_t p = indptr[i]; p < indptr[i + 1]; ++p) s[i] += data[p];
        return s;
    }

    std::vector<T> col_sums() const {
        std::vector<T> s(cols, T{});
        for (std::int64_t p = 0; p < nnz(); ++p) s[indices[p]] += data[p];
        return s;
    }

    void zero_diagonal();

    template <typename U>
    Csr<U> cast() const {
        Csr<U> out(rows, cols);
        out.indptr = indptr;
        out.indices = indices;
        out.data.assign(data.begin(), data.end());
        return out;
    }

    bool operator==(const Csr& other) const {
        return rows == other.rows && cols == other.cols && indptr == other.indptr &&
               indices == other.indices && data == other.data;
    }
};

template <typename T>
Csr<T> Csr<T>::from_triplets(int rows, int cols,
                             std::vector<std::tuple<int, int, T>> triplets) {
    std::sort(triplets.begin(), triplets.end(),
              [](const auto& a, const auto& b) {
                  return std::tie(std::get<0>(a), std::get<1>(a)) <
                         std::tie(std::get<0>(b), std::get<1>(b));
              });
    Csr<T> m(rows, cols);
    m.indices.reserve(triplets.size());
    m.data.reserve(triplets.size());
    std::vector<std::int64_t> row_count(rows, 0);
    int last_i = -1, last_j = -1;
    for (const auto& [i, j, v] : triplets) {
        if (i < 0 || i >= rows || j < 0 || j >= cols)
            fail(ErrorKind::shape_mismatch, "triplet index out of range");
        if (i == last_i && j == last_j) {
            m.data.back() += v;  // duplicate coordinates accumulate
            continue;
        }
        m.indices.push_back(j);
        m.data.push_back(v);
        ++row_count[i];
        last_i = i;
        last_j = j;
    }
    for (int r = 0; r < rows; ++r) m.indptr[r + 1] = m.indptr[r] + row_count[r];
    return m;
}

template <typename T>
Csr<T> Csr<T>::transpose() const {
    Csr<T> t(cols, rows);
    std::vector<std::int64_t> count(cols, 0);
    for (std::int64_t p = 0; p < nnz(); ++p) ++count[indices[p]];
    t.indptr.assign(static_cast<std::size_t>(cols) + 1, 0);
    for (int j = 0; j < cols; ++j) t.indptr[j + 1] = t.indptr[j] + count[j];
    t.indices.resize(nnz());
    t.data.resize(nnz());
    std::vector<std::int64_t> next(t.indptr.begin(), t.indptr.end() - 1);
    for (int i = 0; i < rows; ++i) {
        for (std::int64_t p = indptr[i]; p < indptr[i + 1]; ++p) {
            std::int64_t q = next[indices[p]]++;
            t.indices[q] = i;
            t.data[q] = data[p];
        }
    }
    return t;
}

template <typename T>
void Csr<T>::zero_diagonal() {
    std::vector<std::int64_t> new_indptr(static_cast<std::size_t>(rows) + 1, 0);
    std::int64_t w = 0;
    for (int i = 0; i < rows; ++i) {
        for (std::int64_t p = indptr[i]; p < indptr[i + 1]; ++p) {
            if (indices[p] == i) continue;
            indices[w] = indices[p];
            data[w] = data[p];
            ++w;
        }
        new_indptr[i + 1] = w;
    }
    indices.resize(w);
    data.resize(w);
    indptr = std::move(new_indptr);
}

namespace detail {

// One product row: scatter-accumulate B's rows selected by A's row, then
// gather in sorted column order. `marker`/`accum` are caller-owned scratch
// of size B.cols so row blocks can run on separate threads.
template <typename T>
void multiply_row(const Csr<T>& a, const Csr<T>& b, int i, std::vector<int>& marker,
                  std::vector<T>& accum, std::vector<std::int32_t>& cols_scratch,
                  std::vector<std::int32_t>& out_indices, std::vector<T>& out_data,
                  int row_topn) {
    cols_scratch.clear();
    for (std::int64_t pa = a.indptr[i]; pa < a.indptr[i + 1]; ++pa) {
        const int k = a.indices[pa];
        const T va = a.data[pa];
        for (std::int64_t pb = b.indptr[k]; pb < b.indptr[k + 1]; ++pb) {
            const int j = b.indices[pb];
            if (marker[j] != i) {
                marker[j] = i;
                accum[j] = va * b.data[pb];
                cols_scratch.push_back(j);
            } else {
                accum[j] += va * b.data[pb];
            }
        }
    }
    std::sort(cols_scratch.begin(), cols_scratch.end());
    if (row_topn > 0 && static_cast<int>(cols_scratch.size()) > row_topn) {
        // keep the N largest values; ties resolved toward smaller column
        std::stable_sort(cols_scratch.begin(), cols_scratch.end(),
                         [&](std::int32_t x, std::int32_t y) { return accum[x] > accum[y]; });
        cols_scratch.resize(row_topn);
        std::sort(cols_scratch.begin(), cols_scratch.end());
    }
    for (std::int32_t j : cols_scratch) {
        if (accum[j] == T{}) continue;
        out_indices.push_back(j);
        out_data.push_back(accum[j]);
    }
}

}  // namespace detail

template <typename T>
Csr<T> multiply(const Csr<T>& a, const Csr<T>& b, const SpGemmOptions& opts = {}) {
    if (a.cols != b.rows) fail(ErrorKind::shape_mismatch, "spgemm: inner dimensions differ");
    Csr<T> c(a.rows, b.cols);
    const int nthreads = std::max(1, opts.threads);
    if (nthreads == 1 || a.rows < 2 * nthreads) {
        std::vector<int> marker(b.cols, -1);
        std::vector<T> accum(b.cols, T{});
        std::vector<std::int32_t> scratch;
        for (int i = 0; i < a.rows; ++i) {
            detail::multiply_row(a, b, i, marker, accum, scratch, c.indices, c.data,
                                 opts.row_topn);
            c.indptr[i + 1] = static_cast<std::int64_t>(c.indices.size());
        }
        return c;
    }
    // row-blocked: each thread fills a private buffer; blocks are stitched in
    // row order afterwards, so the result is schedule-independent
    struct Block {
        std::vector<std::int64_t> row_nnz;
        std::vector<std::int32_t> indices;
        std::vector<T> data;
    };
    std::vector<Block> blocks(nthreads);
    std::vector<std::thread> workers;
    const int chunk = (a.rows + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
        workers.emplace_back([&, t]() {
            const int lo = t * chunk;
            const int hi = std::min(a.rows, lo + chunk);
            if (lo >= hi) return;
            Block& blk = blocks[t];
            std::vector<int> marker(b.cols, -1);
            std::vector<T> accum(b.cols, T{});
            std::vector<std::int32_t> scratch;
            for (int i = lo; i < hi; ++i) {
                const std::size_t before = blk.indices.size();
                detail::multiply_row(a, b, i, marker, accum, scratch, blk.indices,
                                     blk.data, opts.row_topn);
                blk.row_nnz.push_back(static_cast<std::int64_t>(blk.indices.size() - before));
            }
        });
    }
    for (auto& w : workers) w.join();
    for (int t = 0; t < nthreads; ++t) {
        const int lo = t * chunk;
        const Block& blk = blocks[t];
        for (std::size_t r = 0; r < blk.row_nnz.size(); ++r)
            c.indptr[lo + static_cast<int>(r) + 1] = blk.row_nnz[r];
        c.indices.insert(c.indices.end(), blk.indices.begin(), blk.indices.end());
        c.data.insert(c.data.end(), blk.data.begin(), blk.data.end());
    }
    for (int i = 0; i < a.rows; ++i) c.indptr[i + 1] += c.indptr[i];
    return c;
}

// Chain product. Evaluated left-to-right; when the right end of the chain is
// sparser than the left, the reversed-transposed chain is evaluated instead
// (same result, denser operand enters the accumulation later).
template <typename T>
Csr<T> chain_multiply(const std::vector<const Csr<T>*>& chain,
                      const SpGemmOptions& opts = {}) {
    if (chain.empty()) fail(ErrorKind::bad_argument, "empty chain");
    if (chain.size() == 1) return *chain.front();
    const bool reversed = chain.back()->nnz() < chain.front()->nnz();
    if (!reversed) {
        Csr<T> acc = multiply(*chain[0], *chain[1], opts);
        for (std::size_t i = 2; i < chain.size(); ++i) acc = multiply(acc, *chain[i], opts);
        return acc;
    }
    Csr<T> acc = multiply(chain.back()->transpose(), chain[chain.size() - 2]->transpose(), opts);
    for (std::size_t i = chain.size() - 2; i-- > 0;)
        acc = multiply(acc, chain[i]->transpose(), opts);
    return acc.transpose();
}

}  // namespace dime::sparse
