// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shflbw/formats.hpp"
#include "shflbw/matrix.hpp"

namespace shflbw {

struct TileConfig {
    std::uint32_t t_m = 64; // output tile rows (bounded by regfile with t_n)
    std::uint32_t t_n = 16; // output tile columns
    std::uint32_t t_k = 8;  // stitched columns per chunk
    std::uint32_t regfile_size = 4096; // accumulator budget, elements
    std::uint32_t pipe_stage = 2;          // buffer depth
    std::uint32_t meta_prefetch_stage = 4; // metadata bulk size, steps

    void validate() const; // throws BadParams
};

// C = decompress(A) * B. Per group and T_N slice, k-chunks of T_K stitched
// columns are accumulated in ascending global k order, so results are
// identical across tile configurations and thread counts. Accumulated rows
// are written to output rows A.row_indices[g*V .. g*V+V-1].
DenseMatrix spmm_execute(const ShflBWMatrix& a, const DenseMatrix& b,
                         const TileConfig& cfg, unsigned threads = 1);

// Naive triple-loop product, k ascending. Ground truth for tests/--check.
DenseMatrix spmm_dense_oracle(const DenseMatrix& a_dense,
                              const DenseMatrix& b);

// Gathers rows of B named by group_cols[chunk_begin .. chunk_begin+t_k) into
// a t_k x t_n row-major staging tile. Positions past the end of the column
// list or past B's edge are zero.
std::vector<float> stitch_tile(const std::vector<std::uint32_t>& group_cols,
                               std::size_t chunk_begin, std::size_t t_k,
                               const DenseMatrix& b, std::size_t slice_begin,
                               std::size_t t_n);

// acc (v_rows x t_n, row-major) += a_tile * b_tile. a_tile is v_rows x k_len
// in column-major order (row v, k-offset t at a_tile[t*v_rows + v], as the
// groups store it); b_tile is k_len x t_n row-major. Products are added into
// acc one k at a time, ascending, which pins the reduction order.
void tile_mma(std::span<float> acc, std::span<const float> a_tile,
              std::span<const float> b_tile, std::size_t v_rows,
              std::size_t k_len, std::size_t t_n);

// ||x - y||_F / ||y||_F (0 when both empty/zero). Shapes must agree.
double relative_frobenius_error(const DenseMatrix& x, const DenseMatrix& y);

// Activation / feature-map tensor, [c][h][w][n] row-major with batch
// innermost. Flattening h,w,n gives the implicit-GEMM right-hand matrix.
struct Tensor4 {
    std::uint32_t c = 0, h = 0, w = 0, n = 0;
    std::vector<float> values;

    Tensor4() = default;
    Tensor4(std::uint32_t c_, std::uint32_t h_, std::uint32_t w_,
            std::uint32_t n_)
        : c(c_), h(h_), w(w_), n(n_),
          values(std::size_t(c_) * h_ * w_ * n_, 0.0f) {}

    std::size_t size() const { return values.size(); }
    float at(std::uint32_t ci, std::uint32_t hi, std::uint32_t wi,
             std::uint32_t ni) const {
        return values[((std::size_t(ci) * h + hi) * w + wi) * n + ni];
    }
    float& at(std::uint32_t ci, std::uint32_t hi, std::uint32_t wi,
              std::uint32_t ni) {
        return values[((std::size_t(ci) * h + hi) * w + wi) * n + ni];
    }
};

struct ConvGeometry {
    std::uint32_t r = 1, s = 1; // filter height/width
    std::uint32_t stride = 1;
    std::uint32_t pad = 0;
};

// Implicit-GEMM 2-D convolution with Shfl-BW weights over (K_f x C*R*S).
// Sparse column c decodes to (channel, r, s) = (c/(R*S), (c%(R*S))/S, c%S);
// input patches are unfolded per k-chunk during stitching, never as a full
// im2col matrix. Output is [K_f][P][Q][N]. Throws BadGeometry.
Tensor4 conv2d(const ShflBWMatrix& weights, const Tensor4& input,
               const ConvGeometry& geo, const TileConfig& cfg,
               unsigned threads = 1);

// Output spatial size; throws BadGeometry unless (H + 2*pad - R) is
// non-negative and divisible by stride (same for W, S).
std::pair<std::uint32_t, std::uint32_t> conv_output_size(
    const Tensor4& input, const ConvGeometry& geo);

} // namespace shflbw
