// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "shflbw/spmm.hpp"
#include "test_helpers.hpp"

using namespace shflbw;

namespace {

// Matched-order reference: per group, per output column, kept columns
// accumulated in ascending k, exactly the order spmm_execute pins down.
DenseMatrix reference_group_spmm(const ShflBWMatrix& a, const DenseMatrix& b) {
    DenseMatrix c(a.core.rows, b.cols);
    const std::uint32_t v = a.core.vector_size;
    for (std::uint32_t g = 0; g < a.core.group_count(); ++g) {
        const auto& grp = a.core.groups[g];
        for (std::uint32_t vi = 0; vi < v; ++vi) {
            const std::uint32_t out_row = a.row_indices[std::size_t(g) * v + vi];
            for (std::uint32_t j = 0; j < b.cols; ++j) {
                float acc = 0.0f;
                for (std::size_t t = 0; t < grp.cols.size(); ++t)
                    acc += grp.values[t * v + vi] * b.at(grp.cols[t], j);
                c.at(out_row, j) = acc;
            }
        }
    }
    return c;
}

ShflBWMatrix random_instance(std::uint32_t m, std::uint32_t k, std::uint32_t v,
                             std::uint32_t cols_per_group,
                             std::mt19937_64& rng) {
    const auto mask = test::random_shflbw_mask(m, k, v, cols_per_group, rng);
    return compress_shflbw(random_dense(m, k, rng()), mask, v);
}

} // namespace

TEST_SUITE_BEGIN("spmm");

TEST_CASE("dense oracle basics") {
    DenseMatrix eye(2, 2, {1, 0, 0, 1});
    DenseMatrix b(2, 2, {5, 6, 7, 8});
    CHECK(spmm_dense_oracle(eye, b) == b);
    CHECK(spmm_dense_oracle(DenseMatrix(2, 2), b) == DenseMatrix(2, 2));
    DenseMatrix a(2, 2, {1, 2, 3, 4});
    CHECK(spmm_dense_oracle(a, eye) == a);
    CHECK_THROWS_AS(spmm_dense_oracle(a, DenseMatrix(3, 2)), ShapeMismatch);
}

TEST_CASE("stitch_tile gathers the named rows") {
    DenseMatrix b(4, 3);
    std::iota(b.values.begin(), b.values.end(), 0.0f);
    const std::vector<std::uint32_t> cols{1, 3};

    const auto tile = stitch_tile(cols, 0, 2, b, 0, 3);
    CHECK(tile == std::vector<float>{3, 4, 5, 9, 10, 11});

    // chunk longer than the remaining columns: zero-padded tail
    const auto padded = stitch_tile(cols, 1, 2, b, 0, 3);
    CHECK(padded == std::vector<float>{9, 10, 11, 0, 0, 0});

    // contiguous columns equal a plain contiguous load
    const std::vector<std::uint32_t> contiguous{0, 1};
    const auto plain = stitch_tile(contiguous, 0, 2, b, 0, 3);
    CHECK(plain == std::vector<float>(b.values.begin(), b.values.begin() + 6));
}

TEST_CASE("tile_mma") {
    // identity a: acc becomes b_tile
    std::vector<float> acc(4, 0.0f);
    const std::vector<float> eye{1, 0, 0, 1}; // column-major 2x2 identity
    const std::vector<float> b{5, 6, 7, 8};
    tile_mma(acc, eye, b, 2, 2, 2);
    CHECK(acc == b);

    // zero b leaves acc unchanged
    std::vector<float> acc2{1, 2, 3, 4};
    tile_mma(acc2, eye, std::vector<float>(4, 0.0f), 2, 2, 2);
    CHECK(acc2 == std::vector<float>{1, 2, 3, 4});

    // [[1,2],[3,4]] * I = [[1,2],[3,4]]  (a stored column-major)
    std::vector<float> acc3(4, 0.0f);
    const std::vector<float> a_cm{1, 3, 2, 4};
    tile_mma(acc3, a_cm, eye, 2, 2, 2);
    CHECK(acc3 == std::vector<float>{1, 2, 3, 4});
}

TEST_CASE("identity times B is B") {
    DenseMatrix d(2, 2, {1, 0, 0, 1});
    SparsityMask mask(2, 2, {1, 1, 1, 1});
    const auto a = compress_shflbw(d, mask, 2);
    const auto b = random_dense(2, 5, 3);
    CHECK(spmm_execute(a, b, TileConfig{}) == b);
}

TEST_CASE("reordered write-back places rows at their original positions") {
    ShflBWMatrix a;
    a.core.rows = 2;
    a.core.cols = 2;
    a.core.vector_size = 2;
    a.core.groups.resize(1);
    a.core.groups[0].cols = {0, 1};
    a.core.groups[0].values = {1, 0, 0, 1}; // identity, column-major
    a.row_indices = {1, 0};
    DenseMatrix b(2, 2, {5, 6, 7, 8});
    const auto c = spmm_execute(a, b, TileConfig{});
    CHECK(c == DenseMatrix(2, 2, {7, 8, 5, 6}));
}

TEST_CASE("matches the dense oracle on random instances") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const std::uint32_t v = 1u << (1 + rng() % 3); // 2, 4, 8
        const std::uint32_t m = v * (1 + rng() % 4);
        const std::uint32_t k = 1 + rng() % 24;
        const std::uint32_t n = 1 + rng() % 12;
        const auto a = random_instance(m, k, v, rng() % (k + 1), rng);
        const auto b = random_dense(k, n, rng());

        const auto c = spmm_execute(a, b, TileConfig{});
        CHECK(relative_frobenius_error(c, spmm_dense_oracle(decompress(a), b)) <=
              1e-5);
        // matched reduction order: equality is exact
        CHECK(c == reference_group_spmm(a, b));
    }
}

TEST_CASE("results are identical across tile configurations") {
    std::mt19937_64 rng(23);
    const auto a = random_instance(8, 32, 4, 13, rng);
    const auto b = random_dense(32, 20, 5);
    const auto baseline = spmm_execute(a, b, TileConfig{.t_n = 1, .t_k = 1});
    for (const auto& [tn, tk] :
         {std::pair{3u, 2u}, {16u, 8u}, {64u, 7u}, {20u, 32u}}) {
        const auto c = spmm_execute(a, b, TileConfig{.t_n = tn, .t_k = tk});
        CHECK(c == baseline);
    }
}

TEST_CASE("results do not depend on the worker count") {
    std::mt19937_64 rng(29);
    const auto a = random_instance(24, 40, 4, 17, rng);
    const auto b = random_dense(40, 9, 8);
    const auto c1 = spmm_execute(a, b, TileConfig{}, 1);
    for (unsigned threads : {2u, 3u, 8u})
        CHECK(spmm_execute(a, b, TileConfig{}, threads) == c1);
}

TEST_CASE("permuting row_indices permutes output rows identically") {
    std::mt19937_64 rng(31);
    auto a = random_instance(8, 16, 2, 7, rng);
    const auto b = random_dense(16, 6, 2);
    const auto c = spmm_execute(a, b, TileConfig{});

    auto shuffled = a;
    const auto perm = test::random_permutation(8, rng);
    for (std::size_t i = 0; i < shuffled.row_indices.size(); ++i)
        shuffled.row_indices[i] = perm[a.row_indices[i]];
    const auto c2 = spmm_execute(shuffled, b, TileConfig{});
    for (std::uint32_t r = 0; r < 8; ++r)
        for (std::uint32_t j = 0; j < 6; ++j)
            CHECK(c2.at(perm[r], j) == c.at(r, j));
}

TEST_CASE("shape and config validation") {
    DenseMatrix d(2, 2, {1, 0, 0, 1});
    SparsityMask mask(2, 2, {1, 1, 1, 1});
    const auto a = compress_shflbw(d, mask, 2);
    CHECK_THROWS_AS(spmm_execute(a, DenseMatrix(3, 2), TileConfig{}),
                    ShapeMismatch);
    CHECK_THROWS_AS(
        spmm_execute(a, DenseMatrix(2, 2), TileConfig{.t_n = 0}), BadParams);
    CHECK_THROWS_AS(spmm_execute(a, DenseMatrix(2, 2),
                                 TileConfig{.t_m = 1000, .t_n = 1000,
                                            .regfile_size = 4096}),
                    BadParams);
    CHECK_THROWS_AS(spmm_execute(a, DenseMatrix(2, 2),
                                 TileConfig{.pipe_stage = 1}),
                    BadParams);
}

TEST_SUITE_END();
