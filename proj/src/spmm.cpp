// SPDX-License-Identifier: Apache-2.0
#include "shflbw/spmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace shflbw {

void TileConfig::validate() const {
    if (t_m == 0 || t_n == 0 || t_k == 0)
        throw BadParams("tile sizes must be positive");
    if (std::uint64_t(t_m) * t_n > regfile_size)
        throw BadParams("T_M * T_N exceeds the register-file budget");
    if (pipe_stage < 2) throw BadParams("pipe_stage must be >= 2");
    if (meta_prefetch_stage < 1)
        throw BadParams("meta_prefetch_stage must be >= 1");
}

namespace {

// Gather without padding: exactly k_len x t_n values, row-major staging.
void stitch_into(float* staging, const std::vector<std::uint32_t>& cols,
                 std::size_t chunk_begin, std::size_t k_len,
                 const DenseMatrix& b, std::size_t slice_begin,
                 std::size_t t_n) {
    for (std::size_t t = 0; t < k_len; ++t) {
        const float* src =
            b.values.data() + std::size_t(cols[chunk_begin + t]) * b.cols +
            slice_begin;
        std::copy_n(src, t_n, staging + t * t_n);
    }
}

} // namespace

std::vector<float> stitch_tile(const std::vector<std::uint32_t>& group_cols,
                               std::size_t chunk_begin, std::size_t t_k,
                               const DenseMatrix& b, std::size_t slice_begin,
                               std::size_t t_n) {
    std::vector<float> staging(t_k * t_n, 0.0f);
    const std::size_t k_len =
        chunk_begin < group_cols.size()
            ? std::min(t_k, group_cols.size() - chunk_begin)
            : 0;
    const std::size_t n_len =
        slice_begin < b.cols ? std::min(t_n, std::size_t(b.cols) - slice_begin)
                             : 0;
    for (std::size_t t = 0; t < k_len; ++t) {
        const std::uint32_t row = group_cols[chunk_begin + t];
        if (row >= b.rows)
            throw ShapeMismatch("stitch_tile: column index exceeds B rows");
        for (std::size_t j = 0; j < n_len; ++j)
            staging[t * t_n + j] = b.at(row, std::uint32_t(slice_begin + j));
    }
    return staging;
}

void tile_mma(std::span<float> acc, std::span<const float> a_tile,
              std::span<const float> b_tile, std::size_t v_rows,
              std::size_t k_len, std::size_t t_n) {
    // a_tile is column-major (value of row v at k-offset t: a_tile[t*v_rows+v])
    // matching the contiguous group storage; each product is added into acc
    // one k at a time so the per-element reduction order is ascending k.
    for (std::size_t t = 0; t < k_len; ++t) {
        const float* brow = b_tile.data() + t * t_n;
        for (std::size_t vi = 0; vi < v_rows; ++vi) {
            const float a = a_tile[t * v_rows + vi];
            float* arow = acc.data() + vi * t_n;
            for (std::size_t j = 0; j < t_n; ++j) arow[j] += a * brow[j];
        }
    }
}

DenseMatrix spmm_execute(const ShflBWMatrix& a, const DenseMatrix& b,
                         const TileConfig& cfg, unsigned threads) {
    cfg.validate();
    const VectorWiseMatrix& core = a.core;
    if (core.cols != b.rows)
        throw ShapeMismatch("spmm: A columns != B rows");
    if (a.row_indices.size() != core.rows)
        throw ShapeMismatch("spmm: row_indices length != M");
    for (std::uint32_t r : a.row_indices)
        if (r >= core.rows)
            throw ShapeMismatch("spmm: row index out of range");

    DenseMatrix c(core.rows, b.cols);
    const std::uint32_t v = core.vector_size;
    const std::uint32_t n = b.cols;
    const std::uint32_t group_count = core.group_count();

    auto run_groups = [&](std::uint32_t g_begin, std::uint32_t g_end) {
        std::vector<float> staging(std::size_t(cfg.t_k) * cfg.t_n);
        std::vector<float> acc(std::size_t(v) * cfg.t_n);
        for (std::uint32_t g = g_begin; g < g_end; ++g) {
            const VectorWiseGroup& grp = core.groups[g];
            const std::size_t n_g = grp.cols.size();
            for (std::size_t slice_begin = 0; slice_begin < n;
                 slice_begin += cfg.t_n) {
                const std::size_t slice_len =
                    std::min<std::size_t>(cfg.t_n, n - slice_begin);
                std::fill(acc.begin(), acc.begin() + v * slice_len, 0.0f);
                for (std::size_t chunk_begin = 0; chunk_begin < n_g;
                     chunk_begin += cfg.t_k) {
                    const std::size_t k_len =
                        std::min<std::size_t>(cfg.t_k, n_g - chunk_begin);
                    stitch_into(staging.data(), grp.cols, chunk_begin, k_len,
                                b, slice_begin, slice_len);
                    tile_mma({acc.data(), v * slice_len},
                             {grp.values.data() + chunk_begin * v, k_len * v},
                             {staging.data(), k_len * slice_len}, v, k_len,
                             slice_len);
                }
                // Reordered write-back straight to the original rows.
                for (std::uint32_t vi = 0; vi < v; ++vi) {
                    const std::uint32_t out_row =
                        a.row_indices[std::size_t(g) * v + vi];
                    std::copy_n(acc.data() + std::size_t(vi) * slice_len,
                                slice_len,
                                c.values.data() +
                                    std::size_t(out_row) * n + slice_begin);
                }
            }
        }
    };

    const unsigned workers =
        std::max(1u, std::min(threads, group_count ? group_count : 1u));
    if (workers == 1) {
        run_groups(0, group_count);
    } else {
        // Groups write disjoint output rows, so any static split is safe
        // and the result does not depend on the worker count.
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            const std::uint32_t g_begin =
                std::uint32_t(std::uint64_t(group_count) * w / workers);
            const std::uint32_t g_end =
                std::uint32_t(std::uint64_t(group_count) * (w + 1) / workers);
            pool.emplace_back(run_groups, g_begin, g_end);
        }
    }
    return c;
}

DenseMatrix spmm_dense_oracle(const DenseMatrix& a_dense,
                              const DenseMatrix& b) {
    if (a_dense.cols != b.rows)
        throw ShapeMismatch("oracle: A columns != B rows");
    DenseMatrix c(a_dense.rows, b.cols);
    for (std::uint32_t i = 0; i < a_dense.rows; ++i)
        for (std::uint32_t j = 0; j < b.cols; ++j) {
            float acc = 0.0f;
            for (std::uint32_t k = 0; k < a_dense.cols; ++k)
                acc += a_dense.at(i, k) * b.at(k, j);
            c.at(i, j) = acc;
        }
    return c;
}

double relative_frobenius_error(const DenseMatrix& x, const DenseMatrix& y) {
    if (x.rows != y.rows || x.cols != y.cols)
        throw ShapeMismatch("relative_frobenius_error: shapes differ");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.values.size(); ++i) {
        const double d = double(x.values[i]) - double(y.values[i]);
        num += d * d;
        den += double(y.values[i]) * double(y.values[i]);
    }
    if (den == 0.0)
        return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num) / std::sqrt(den);
}

std::pair<std::uint32_t, std::uint32_t> conv_output_size(
    const Tensor4& input, const ConvGeometry& geo) {
    if (geo.r == 0 || geo.s == 0 || geo.stride == 0)
        throw BadGeometry("filter sizes and stride must be positive");
    const std::int64_t span_h =
        std::int64_t(input.h) + 2 * std::int64_t(geo.pad) - geo.r;
    const std::int64_t span_w =
        std::int64_t(input.w) + 2 * std::int64_t(geo.pad) - geo.s;
    if (span_h < 0 || span_w < 0 || span_h % geo.stride != 0 ||
        span_w % geo.stride != 0)
        throw BadGeometry("input size, padding, filter and stride do not "
                          "produce a whole output grid");
    return {std::uint32_t(span_h / geo.stride + 1),
            std::uint32_t(span_w / geo.stride + 1)};
}

Tensor4 conv2d(const ShflBWMatrix& weights, const Tensor4& input,
               const ConvGeometry& geo, const TileConfig& cfg,
               unsigned threads) {
    cfg.validate();
    const auto out_size = conv_output_size(input, geo);
    const std::uint32_t p_out = out_size.first;
    const std::uint32_t q_out = out_size.second;
    const std::uint64_t crs =
        std::uint64_t(input.c) * geo.r * geo.s;
    if (weights.core.cols != crs)
        throw BadGeometry("weight columns != C*R*S");
    if (weights.row_indices.size() != weights.core.rows)
        throw BadGeometry("row_indices length != K_f");
    for (std::uint32_t r : weights.row_indices)
        if (r >= weights.core.rows)
            throw BadGeometry("row index out of range");

    const std::uint32_t v = weights.core.vector_size;
    const std::uint32_t rs = geo.r * geo.s;
    const std::uint32_t batch = input.n;
    Tensor4 out(weights.core.rows, p_out, q_out, batch);
    const std::size_t flat_cols = std::size_t(p_out) * q_out * batch;
    const std::uint32_t group_count = weights.core.group_count();

    auto run_groups = [&](std::uint32_t g_begin, std::uint32_t g_end) {
        std::vector<float> staging(std::size_t(cfg.t_k) * cfg.t_n);
        std::vector<float> acc(std::size_t(v) * cfg.t_n);
        for (std::uint32_t g = g_begin; g < g_end; ++g) {
            const VectorWiseGroup& grp = weights.core.groups[g];
            const std::size_t n_g = grp.cols.size();
            for (std::size_t slice_begin = 0; slice_begin < flat_cols;
                 slice_begin += cfg.t_n) {
                const std::size_t slice_len =
                    std::min<std::size_t>(cfg.t_n, flat_cols - slice_begin);
                std::fill(acc.begin(), acc.begin() + v * slice_len, 0.0f);
                for (std::size_t chunk_begin = 0; chunk_begin < n_g;
                     chunk_begin += cfg.t_k) {
                    const std::size_t k_len =
                        std::min<std::size_t>(cfg.t_k, n_g - chunk_begin);
                    // Unfold the needed input patch rows on the fly: this is
                    // the implicit-GEMM stitch, no full im2col is built.
                    for (std::size_t t = 0; t < k_len; ++t) {
                        const std::uint32_t col = grp.cols[chunk_begin + t];
                        const std::uint32_t ch = col / rs;
                        const std::uint32_t fr = (col % rs) / geo.s;
                        const std::uint32_t fs = col % geo.s;
                        float* dst = staging.data() + t * slice_len;
                        for (std::size_t j = 0; j < slice_len; ++j) {
                            const std::size_t jj = slice_begin + j;
                            const std::uint32_t ni = std::uint32_t(jj % batch);
                            const std::size_t pq = jj / batch;
                            const std::uint32_t qi = std::uint32_t(pq % q_out);
                            const std::uint32_t pi = std::uint32_t(pq / q_out);
                            const std::int64_t hi =
                                std::int64_t(pi) * geo.stride + fr - geo.pad;
                            const std::int64_t wi =
                                std::int64_t(qi) * geo.stride + fs - geo.pad;
                            dst[j] = (hi >= 0 && hi < input.h && wi >= 0 &&
                                      wi < input.w)
                                         ? input.at(ch, std::uint32_t(hi),
                                                    std::uint32_t(wi), ni)
                                         : 0.0f;
                        }
                    }
                    tile_mma({acc.data(), v * slice_len},
                             {grp.values.data() + chunk_begin * v, k_len * v},
                             {staging.data(), k_len * slice_len}, v, k_len,
                             slice_len);
                }
                for (std::uint32_t vi = 0; vi < v; ++vi) {
                    const std::uint32_t out_row =
                        weights.row_indices[std::size_t(g) * v + vi];
                    std::copy_n(acc.data() + std::size_t(vi) * slice_len,
                                slice_len,
                                out.values.data() +
                                    std::size_t(out_row) * flat_cols +
                                    slice_begin);
                }
            }
        }
    };

    const unsigned workers =
        std::max(1u, std::min(threads, group_count ? group_count : 1u));
    if (workers == 1) {
        run_groups(0, group_count);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            const std::uint32_t g_begin =
                std::uint32_t(std::uint64_t(group_count) * w / workers);
            const std::uint32_t g_end =
                std::uint32_t(std::uint64_t(group_count) * (w + 1) / workers);
            pool.emplace_back(run_groups, g_begin, g_end);
        }
    }
    return out;
}

} // namespace shflbw
