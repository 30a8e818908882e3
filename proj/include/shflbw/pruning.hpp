// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "shflbw/formats.hpp"
#include "shflbw/matrix.hpp"

namespace shflbw {

// Non-negative importance scores, one per weight.
struct ImportanceMatrix {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<float> scores; // row-major, >= 0, finite

    ImportanceMatrix() = default;
    ImportanceMatrix(std::uint32_t r, std::uint32_t c, std::vector<float> s);

    std::size_t size() const { return std::size_t(rows) * cols; }
    float at(std::uint32_t r, std::uint32_t c) const {
        return scores[std::size_t(r) * cols + c];
    }
};

struct PruneConfig {
    double alpha = 0.5;        // target non-zero ratio, (0, 1]
    double beta_factor = 2.0;  // beta = min(1, beta_factor * alpha)
    std::uint32_t v = 1;       // group size, divides M
    std::uint32_t kmeans_max_iters = 50;
    std::uint64_t seed = 0;
    std::uint32_t restarts = 4;

    double beta() const;
    void validate(std::uint32_t rows) const; // throws BadParams
};

struct PruneResult {
    SparsityMask mask;
    // Original-row order: position i in the grouped ordering holds original
    // row permutation[i]. Identity for non-shuffled patterns.
    std::vector<std::uint32_t> permutation;
    double kept_score = 0.0;
};

// scores[i][j] = |weights[i][j]|
ImportanceMatrix importance_scores(const DenseMatrix& weights);

// Σ scores ⊙ mask. Throws ShapeMismatch.
double kept_score(const ImportanceMatrix& scores, const SparsityMask& mask);

// Keeps exactly round(keep_ratio * M * K) highest-score entries. Ties are
// broken by keeping the smaller row-major linear index first.
SparsityMask prune_unstructured(const ImportanceMatrix& scores,
                                double keep_ratio);

// Per group of V consecutive rows: rank columns by the sum of the V scores,
// keep the top round(alpha * K) columns (ties toward the smaller column).
SparsityMask prune_vectorwise(const ImportanceMatrix& scores, std::uint32_t v,
                              double alpha);

// Global top round(alpha * (M/V) * (K/V)) blocks by V x V score sum; ties
// by (block_row, block_col) lexicographic order.
SparsityMask prune_blockwise(const ImportanceMatrix& scores, std::uint32_t v,
                             double alpha);

// In each row, keep the n highest scores of every consecutive window of m
// columns (ties toward the smaller column). m must divide K, n <= m.
SparsityMask prune_balanced(const ImportanceMatrix& scores, std::uint32_t n,
                            std::uint32_t m);

// Balanced K-Means over the mask's rows (0/1 feature vectors): M/V centroids,
// farthest-point seeding, capacity-constrained assignment (rows ordered by
// descending second-best-minus-best margin, greedily placed at the nearest
// non-full centroid). Restarts are scored by the kept score of a downstream
// vector-wise prune of `scores` at cfg.alpha, which is why the score matrix
// is a parameter. Returns the row ordering; consecutive chunks of V rows are
// the groups, groups ordered by smallest original row index.
std::vector<std::uint32_t> kmeans_row_grouping(const SparsityMask& mask,
                                               std::uint32_t v,
                                               const PruneConfig& cfg,
                                               const ImportanceMatrix& scores);

// Two-step Shfl-BW search: unstructured prune at beta -> K-Means row
// grouping -> vector-wise prune of the permuted scores at alpha -> inverse
// permutation. Falls back to the identity-permutation vector-wise result
// whenever that scores at least as high, so the output never loses to a
// plain vector-wise prune. The mask always conforms to shfl_bw at cfg.v.
PruneResult prune_shflbw(const ImportanceMatrix& scores,
                         const PruneConfig& cfg);

} // namespace shflbw
