// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "shflbw/matrix.hpp"

namespace shflbw {

// One group of V rows sharing the same column support.
struct VectorWiseGroup {
    std::vector<std::uint32_t> cols; // strictly increasing, each < K
    std::vector<float> values;       // V * cols.size(), column-major:
                                     // values[j * V + v] = row v, column cols[j]
};

// Vector-wise sparse matrix: rows come in groups of V consecutive rows with
// identical column support.
struct VectorWiseMatrix {
    std::uint32_t rows = 0;        // M
    std::uint32_t cols = 0;        // K
    std::uint32_t vector_size = 1; // V, divides M
    std::vector<VectorWiseGroup> groups; // M / V groups

    std::uint32_t group_count() const {
        return static_cast<std::uint32_t>(groups.size());
    }

    float value(std::uint32_t g, std::uint32_t v, std::uint32_t j) const {
        return groups[g].values[std::size_t(j) * vector_size + v];
    }
};

// Shuffled block-wise matrix: a vector-wise core plus the original row
// positions. Compressed row r corresponds to original row row_indices[r].
struct ShflBWMatrix {
    VectorWiseMatrix core;
    std::vector<std::uint32_t> row_indices; // permutation of 0..M-1
};

// Block-wise sparse matrix on an aligned V x V grid.
struct BlockWiseMatrix {
    std::uint32_t rows = 0;       // M, divisible by block_size
    std::uint32_t cols = 0;       // K, divisible by block_size
    std::uint32_t block_size = 1; // V
    // (block_row, block_col), unique, sorted lexicographically
    std::vector<std::pair<std::uint32_t, std::uint32_t>> block_coords;
    // block_coords.size() * V*V values, row-major within each block
    std::vector<float> block_values;

    std::uint32_t block_count() const {
        return static_cast<std::uint32_t>(block_coords.size());
    }
};

enum class PatternKind {
    Unstructured,
    VectorWise,
    BlockWise,
    ShflBW,
    Balanced,
};

std::string_view pattern_name(PatternKind kind);
PatternKind parse_pattern(std::string_view name); // throws BadParams

// v: vector/block size for vector_wise, block_wise, shfl_bw.
// n, m: balanced n-in-m parameters.
struct PatternParams {
    std::uint32_t v = 0;
    std::uint32_t n = 0;
    std::uint32_t m = 0;
};

struct ValidationReport {
    bool pass = true;
    std::uint32_t fail_row = 0; // first counterexample, valid when !pass
    std::uint32_t fail_col = 0;
    std::string reason;
};

// Checks whether `mask` conforms to `pattern`. Throws BadParams when the
// pattern parameters do not fit the mask shape (e.g. V does not divide M).
//
// Shfl-BW rule: rows must partition into groups of exactly V with identical
// column support, i.e. every distinct support's multiplicity is divisible
// by V. Mixing different supports inside a group is non-conformant.
ValidationReport validate_pattern(const SparsityMask& mask, PatternKind pattern,
                                  const PatternParams& params);

// Offline compression of a Shfl-BW-conformant (dense, mask) pair into the
// vector-wise core + original-row-index array. Groups are ordered by their
// smallest original row index; rows within a group by original index.
// Throws NonConformantMask / ShapeMismatch.
ShflBWMatrix compress_shflbw(const DenseMatrix& dense, const SparsityMask& mask,
                             std::uint32_t v);

// Exact reconstruction: zeros at pruned positions, kept values bit-identical.
DenseMatrix decompress(const VectorWiseMatrix& m);
DenseMatrix decompress(const ShflBWMatrix& m);
DenseMatrix decompress(const BlockWiseMatrix& m);

// Column stitching: packs each group's columns into dense V x tile_width
// tiles in sorted column order. Ragged groups are padded with zero columns;
// padded positions carry kPadColumn in the tile's column map.
inline constexpr std::uint32_t kPadColumn = 0xffffffffu;

struct StitchedTile {
    std::vector<std::uint32_t> cols; // tile_width entries, kPadColumn = padding
    std::vector<float> values;       // V * tile_width, column-major
    std::uint32_t pad_cols = 0;      // number of zero columns appended
};

struct GroupTiling {
    std::uint32_t vector_size = 1;
    std::uint32_t tile_width = 1;
    std::vector<std::vector<StitchedTile>> groups;
};

GroupTiling stitch_to_blockwise(const VectorWiseMatrix& vw,
                                std::uint32_t tile_width);

} // namespace shflbw
