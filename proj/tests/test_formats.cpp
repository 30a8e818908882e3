// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "shflbw/formats.hpp"
#include "test_helpers.hpp"

using namespace shflbw;

TEST_SUITE_BEGIN("formats");

TEST_CASE("compress fully dense 2x2") {
    DenseMatrix d(2, 2, {1, 2, 3, 4});
    SparsityMask mask(2, 2, {1, 1, 1, 1});
    const auto sb = compress_shflbw(d, mask, 2);
    REQUIRE(sb.core.group_count() == 1);
    CHECK(sb.core.groups[0].cols == std::vector<std::uint32_t>{0, 1});
    CHECK(sb.row_indices == std::vector<std::uint32_t>{0, 1});
    // column-major group values: col 0 = (1,3), col 1 = (2,4)
    CHECK(sb.core.groups[0].values == std::vector<float>{1, 3, 2, 4});
}

TEST_CASE("compress 4x4 with interleaved supports") {
    // rows {0,2} keep cols {0,1}; rows {1,3} keep cols {2,3}
    SparsityMask mask(4, 4);
    for (std::uint32_t r : {0u, 2u})
        for (std::uint32_t c : {0u, 1u}) mask.at(r, c) = 1;
    for (std::uint32_t r : {1u, 3u})
        for (std::uint32_t c : {2u, 3u}) mask.at(r, c) = 1;
    DenseMatrix d(4, 4);
    std::iota(d.values.begin(), d.values.end(), 1.0f);

    const auto sb = compress_shflbw(d, mask, 2);
    REQUIRE(sb.core.group_count() == 2);
    CHECK(sb.row_indices == std::vector<std::uint32_t>{0, 2, 1, 3});
    CHECK(sb.core.groups[0].cols == std::vector<std::uint32_t>{0, 1});
    CHECK(sb.core.groups[1].cols == std::vector<std::uint32_t>{2, 3});

    const auto restored = decompress(sb);
    CHECK(restored == apply_mask(d, mask));
}

TEST_CASE("compress rejects a non-conformant mask") {
    // row 0 keeps col 0, row 1 keeps col 1: supports differ in every pairing
    SparsityMask mask(2, 2);
    mask.at(0, 0) = 1;
    mask.at(1, 1) = 1;
    DenseMatrix d(2, 2);
    CHECK_THROWS_AS(compress_shflbw(d, mask, 2), NonConformantMask);
}

TEST_CASE("compress rejects shape mismatch and bad V") {
    DenseMatrix d(2, 2);
    CHECK_THROWS_AS(compress_shflbw(d, SparsityMask(2, 3), 2), ShapeMismatch);
    CHECK_THROWS_AS(compress_shflbw(d, SparsityMask(2, 2), 3), BadParams);
}

TEST_CASE("decompress of an empty mask is the zero matrix") {
    DenseMatrix d(4, 4);
    std::iota(d.values.begin(), d.values.end(), 1.0f);
    const auto sb = compress_shflbw(d, SparsityMask(4, 4), 2);
    CHECK(decompress(sb) == DenseMatrix(4, 4));
}

TEST_CASE("decompress block-wise corner block") {
    BlockWiseMatrix bw;
    bw.rows = bw.cols = 4;
    bw.block_size = 2;
    bw.block_coords = {{0, 0}};
    bw.block_values = {1, 2, 3, 4};
    const auto d = decompress(bw);
    CHECK(d.at(0, 0) == 1);
    CHECK(d.at(0, 1) == 2);
    CHECK(d.at(1, 0) == 3);
    CHECK(d.at(1, 1) == 4);
    CHECK(d.at(2, 2) == 0);
    CHECK(d.at(3, 3) == 0);
}

namespace {

SparsityMask interleaved_mask() {
    // rows [1100, 0011, 1100, 0011]
    SparsityMask mask(4, 4);
    for (std::uint32_t r : {0u, 2u}) mask.at(r, 0) = mask.at(r, 1) = 1;
    for (std::uint32_t r : {1u, 3u}) mask.at(r, 2) = mask.at(r, 3) = 1;
    return mask;
}

} // namespace

TEST_CASE("validate_pattern on the interleaved 4x4 mask") {
    const auto mask = interleaved_mask();
    CHECK(validate_pattern(mask, PatternKind::ShflBW, {.v = 2}).pass);
    // equal supports are not adjacent, so neither block- nor vector-wise
    CHECK_FALSE(validate_pattern(mask, PatternKind::BlockWise, {.v = 2}).pass);
    CHECK_FALSE(
        validate_pattern(mask, PatternKind::VectorWise, {.v = 2}).pass);
    CHECK(validate_pattern(mask, PatternKind::Unstructured, {}).pass);
}

TEST_CASE("validate_pattern balanced") {
    SparsityMask ok(1, 4, {1, 1, 0, 0});
    CHECK(validate_pattern(ok, PatternKind::Balanced, {.n = 2, .m = 4}).pass);
    SparsityMask bad(1, 4, {1, 1, 1, 0});
    const auto rep =
        validate_pattern(bad, PatternKind::Balanced, {.n = 2, .m = 4});
    CHECK_FALSE(rep.pass);
    CHECK(rep.fail_row == 0);
}

TEST_CASE("validate_pattern parameter errors") {
    SparsityMask mask(4, 4);
    CHECK_THROWS_AS(validate_pattern(mask, PatternKind::ShflBW, {.v = 3}),
                    BadParams);
    CHECK_THROWS_AS(validate_pattern(mask, PatternKind::BlockWise, {.v = 0}),
                    BadParams);
    CHECK_THROWS_AS(
        validate_pattern(mask, PatternKind::Balanced, {.n = 2, .m = 3}),
        BadParams);
    CHECK_THROWS_AS(
        validate_pattern(mask, PatternKind::Balanced, {.n = 4, .m = 2}),
        BadParams);
}

TEST_CASE("shfl-bw validation needs multiplicity divisible by V") {
    // three rows of one support, one of another: no grouping works at V=2
    SparsityMask mask(4, 4);
    for (std::uint32_t r : {0u, 1u, 2u}) mask.at(r, 0) = 1;
    mask.at(3, 1) = 1;
    CHECK_FALSE(validate_pattern(mask, PatternKind::ShflBW, {.v = 2}).pass);
    CHECK(validate_pattern(mask, PatternKind::ShflBW, {.v = 1}).pass);
}

TEST_CASE("stitch_to_blockwise packs sorted columns") {
    VectorWiseMatrix vw;
    vw.rows = 2;
    vw.cols = 4;
    vw.vector_size = 2;
    vw.groups.resize(1);
    vw.groups[0].cols = {1, 3};
    vw.groups[0].values = {1, 2, 3, 4}; // col 1 -> (1,2), col 3 -> (3,4)

    const auto tiling = stitch_to_blockwise(vw, 2);
    REQUIRE(tiling.groups.size() == 1);
    REQUIRE(tiling.groups[0].size() == 1);
    const auto& tile = tiling.groups[0][0];
    CHECK(tile.cols == std::vector<std::uint32_t>{1, 3});
    CHECK(tile.values == std::vector<float>{1, 2, 3, 4});
    CHECK(tile.pad_cols == 0);
}

TEST_CASE("stitch_to_blockwise pads ragged groups") {
    VectorWiseMatrix vw;
    vw.rows = 2;
    vw.cols = 8;
    vw.vector_size = 2;
    vw.groups.resize(1);
    vw.groups[0].cols = {0, 4, 7};
    vw.groups[0].values = {1, 1, 2, 2, 3, 3};

    const auto tiling = stitch_to_blockwise(vw, 2);
    REQUIRE(tiling.groups[0].size() == 2);
    CHECK(tiling.groups[0][0].pad_cols == 0);
    const auto& tail = tiling.groups[0][1];
    CHECK(tail.pad_cols == 1);
    CHECK(tail.cols == std::vector<std::uint32_t>{7, kPadColumn});
    CHECK(tail.values == std::vector<float>{3, 3, 0, 0});
}

TEST_CASE("stitch_to_blockwise with an empty group") {
    VectorWiseMatrix vw;
    vw.rows = 2;
    vw.cols = 4;
    vw.vector_size = 2;
    vw.groups.resize(1);
    const auto tiling = stitch_to_blockwise(vw, 2);
    CHECK(tiling.groups[0].empty());
}

TEST_CASE("round-trip property over random conformant masks") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        const std::uint32_t v = 1u << (rng() % 3);          // 1, 2, 4
        const std::uint32_t m = v * (1 + rng() % 6);
        const std::uint32_t k = 1 + rng() % 12;
        const auto mask =
            test::random_shflbw_mask(m, k, v, rng() % (k + 1), rng);
        const auto dense = random_dense(m, k, rng());

        REQUIRE(validate_pattern(mask, PatternKind::ShflBW, {.v = v}).pass);
        const auto sb = compress_shflbw(dense, mask, v);

        auto sorted = sb.row_indices;
        std::sort(sorted.begin(), sorted.end());
        for (std::uint32_t r = 0; r < m; ++r) CHECK(sorted[r] == r);

        CHECK(decompress(sb) == apply_mask(dense, mask));
    }
}

TEST_CASE("validation soundness: compress succeeds iff validator passes") {
    std::mt19937_64 rng(99);
    int accepted = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const std::uint32_t v = 1 + rng() % 3;
        const std::uint32_t m = v * (1 + rng() % 4);
        const std::uint32_t k = 1 + rng() % 6;
        SparsityMask mask(m, k);
        for (auto& b : mask.bits) b = std::uint8_t(rng() % 2);
        const bool pass =
            validate_pattern(mask, PatternKind::ShflBW, {.v = v}).pass;
        bool compressed = true;
        try {
            compress_shflbw(DenseMatrix(m, k), mask, v);
        } catch (const NonConformantMask&) {
            compressed = false;
        }
        CHECK(pass == compressed);
        accepted += pass;
    }
    CHECK(accepted > 0); // V=1 cases keep the generator honest
}

TEST_CASE("pattern containment: block ⊂ vector ⊂ shfl-bw") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const std::uint32_t v = 1u << (1 + rng() % 2); // 2 or 4
        const std::uint32_t m = v * (1 + rng() % 4);
        const std::uint32_t k = v * (1 + rng() % 4);

        const auto bw = test::random_block_wise_mask(m, k, v, 0.4, rng);
        CHECK(validate_pattern(bw, PatternKind::BlockWise, {.v = v}).pass);
        CHECK(validate_pattern(bw, PatternKind::VectorWise, {.v = v}).pass);
        CHECK(validate_pattern(bw, PatternKind::ShflBW, {.v = v}).pass);

        const auto vw =
            test::random_vector_wise_mask(m, k, v, rng() % (k + 1), rng);
        CHECK(validate_pattern(vw, PatternKind::VectorWise, {.v = v}).pass);
        CHECK(validate_pattern(vw, PatternKind::ShflBW, {.v = v}).pass);
        CHECK(validate_pattern(vw, PatternKind::Unstructured, {}).pass);
    }
}

TEST_SUITE_END();
