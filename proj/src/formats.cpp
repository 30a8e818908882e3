// SPDX-License-Identifier: Apache-2.0
#include "shflbw/formats.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace shflbw {

std::string_view pattern_name(PatternKind kind) {
    switch (kind) {
    case PatternKind::Unstructured: return "unstructured";
    case PatternKind::VectorWise: return "vector_wise";
    case PatternKind::BlockWise: return "block_wise";
    case PatternKind::ShflBW: return "shfl_bw";
    case PatternKind::Balanced: return "balanced";
    }
    return "?";
}

PatternKind parse_pattern(std::string_view name) {
    if (name == "unstructured") return PatternKind::Unstructured;
    if (name == "vector_wise" || name == "vw") return PatternKind::VectorWise;
    if (name == "block_wise" || name == "bw") return PatternKind::BlockWise;
    if (name == "shfl_bw" || name == "shflbw") return PatternKind::ShflBW;
    if (name == "balanced") return PatternKind::Balanced;
    throw BadParams("unknown pattern: " + std::string(name));
}

namespace {

using RowBits = std::vector<std::uint8_t>;

RowBits row_bits(const SparsityMask& mask, std::uint32_t r) {
    auto first = mask.bits.begin() + std::size_t(r) * mask.cols;
    return RowBits(first, first + mask.cols);
}

// support class -> ascending original row indices
std::map<RowBits, std::vector<std::uint32_t>>
support_classes(const SparsityMask& mask) {
    std::map<RowBits, std::vector<std::uint32_t>> classes;
    for (std::uint32_t r = 0; r < mask.rows; ++r)
        classes[row_bits(mask, r)].push_back(r);
    return classes;
}

ValidationReport fail_at(std::uint32_t r, std::uint32_t c, std::string why) {
    ValidationReport rep;
    rep.pass = false;
    rep.fail_row = r;
    rep.fail_col = c;
    rep.reason = std::move(why);
    return rep;
}

ValidationReport validate_vector_wise(const SparsityMask& mask,
                                      std::uint32_t v) {
    for (std::uint32_t g = 0; g * v < mask.rows; ++g) {
        const std::uint32_t lead = g * v;
        for (std::uint32_t r = lead + 1; r < lead + v; ++r)
            for (std::uint32_t c = 0; c < mask.cols; ++c)
                if (mask.at(r, c) != mask.at(lead, c))
                    return fail_at(r, c,
                                   "row support differs from group leader");
    }
    return {};
}

ValidationReport validate_block_wise(const SparsityMask& mask,
                                     std::uint32_t v) {
    for (std::uint32_t br = 0; br * v < mask.rows; ++br)
        for (std::uint32_t bc = 0; bc * v < mask.cols; ++bc) {
            const std::uint8_t lead = mask.at(br * v, bc * v);
            for (std::uint32_t i = 0; i < v; ++i)
                for (std::uint32_t j = 0; j < v; ++j)
                    if (mask.at(br * v + i, bc * v + j) != lead)
                        return fail_at(br * v + i, bc * v + j,
                                       "block is neither kept nor pruned "
                                       "as a whole");
        }
    return {};
}

ValidationReport validate_shfl_bw(const SparsityMask& mask, std::uint32_t v) {
    for (const auto& [bits, members] : support_classes(mask))
        if (members.size() % v != 0)
            return fail_at(members.front(), 0,
                           "support class of size " +
                               std::to_string(members.size()) +
                               " is not a multiple of V");
    return {};
}

ValidationReport validate_balanced(const SparsityMask& mask, std::uint32_t n,
                                   std::uint32_t m) {
    for (std::uint32_t r = 0; r < mask.rows; ++r)
        for (std::uint32_t w = 0; w * m < mask.cols; ++w) {
            std::uint32_t count = 0;
            for (std::uint32_t j = 0; j < m; ++j)
                count += mask.at(r, w * m + j);
            if (count != n)
                return fail_at(r, w * m,
                               "window holds " + std::to_string(count) +
                                   " non-zeros, expected " +
                                   std::to_string(n));
        }
    return {};
}

} // namespace

ValidationReport validate_pattern(const SparsityMask& mask,
                                  PatternKind pattern,
                                  const PatternParams& params) {
    switch (pattern) {
    case PatternKind::Unstructured:
        return {};
    case PatternKind::VectorWise:
    case PatternKind::ShflBW:
        if (params.v == 0 || mask.rows % params.v != 0)
            throw BadParams("V must divide M");
        return pattern == PatternKind::VectorWise
                   ? validate_vector_wise(mask, params.v)
                   : validate_shfl_bw(mask, params.v);
    case PatternKind::BlockWise:
        if (params.v == 0 || mask.rows % params.v != 0 ||
            mask.cols % params.v != 0)
            throw BadParams("V must divide both M and K");
        return validate_block_wise(mask, params.v);
    case PatternKind::Balanced:
        if (params.m == 0 || params.n > params.m ||
            mask.cols % params.m != 0)
            throw BadParams("balanced pattern needs n <= m and m | K");
        return validate_balanced(mask, params.n, params.m);
    }
    throw BadParams("unknown pattern kind");
}

ShflBWMatrix compress_shflbw(const DenseMatrix& dense,
                             const SparsityMask& mask, std::uint32_t v) {
    if (dense.rows != mask.rows || dense.cols != mask.cols)
        throw ShapeMismatch("compress_shflbw: dense and mask shapes differ");
    auto report = validate_pattern(mask, PatternKind::ShflBW, {.v = v});
    if (!report.pass)
        throw NonConformantMask("compress_shflbw: " + report.reason +
                                " (row " + std::to_string(report.fail_row) +
                                ")");

    // Split each support class into chunks of V ascending rows, then order
    // the groups by their smallest original row index.
    std::vector<std::vector<std::uint32_t>> groups_rows;
    for (const auto& [bits, members] : support_classes(mask))
        for (std::size_t i = 0; i < members.size(); i += v)
            groups_rows.emplace_back(members.begin() + i,
                                     members.begin() + i + v);
    std::sort(groups_rows.begin(), groups_rows.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });

    ShflBWMatrix out;
    out.core.rows = mask.rows;
    out.core.cols = mask.cols;
    out.core.vector_size = v;
    out.core.groups.reserve(groups_rows.size());
    out.row_indices.reserve(mask.rows);

    for (const auto& rows : groups_rows) {
        VectorWiseGroup grp;
        for (std::uint32_t c = 0; c < mask.cols; ++c)
            if (mask.at(rows.front(), c))
                grp.cols.push_back(c);
        grp.values.resize(std::size_t(grp.cols.size()) * v);
        for (std::size_t j = 0; j < grp.cols.size(); ++j)
            for (std::uint32_t i = 0; i < v; ++i)
                grp.values[j * v + i] = dense.at(rows[i], grp.cols[j]);
        out.core.groups.push_back(std::move(grp));
        out.row_indices.insert(out.row_indices.end(), rows.begin(),
                               rows.end());
    }
    return out;
}

DenseMatrix decompress(const VectorWiseMatrix& m) {
    DenseMatrix out(m.rows, m.cols);
    const std::uint32_t v = m.vector_size;
    for (std::uint32_t g = 0; g < m.group_count(); ++g) {
        const auto& grp = m.groups[g];
        for (std::size_t j = 0; j < grp.cols.size(); ++j)
            for (std::uint32_t i = 0; i < v; ++i)
                out.at(g * v + i, grp.cols[j]) = grp.values[j * v + i];
    }
    return out;
}

DenseMatrix decompress(const ShflBWMatrix& m) {
    DenseMatrix out(m.core.rows, m.core.cols);
    const std::uint32_t v = m.core.vector_size;
    for (std::uint32_t g = 0; g < m.core.group_count(); ++g) {
        const auto& grp = m.core.groups[g];
        for (std::size_t j = 0; j < grp.cols.size(); ++j)
            for (std::uint32_t i = 0; i < v; ++i)
                out.at(m.row_indices[std::size_t(g) * v + i], grp.cols[j]) =
                    grp.values[j * v + i];
    }
    return out;
}

DenseMatrix decompress(const BlockWiseMatrix& m) {
    DenseMatrix out(m.rows, m.cols);
    const std::uint32_t v = m.block_size;
    for (std::uint32_t b = 0; b < m.block_count(); ++b) {
        const auto [br, bc] = m.block_coords[b];
        const float* tile = m.block_values.data() + std::size_t(b) * v * v;
        for (std::uint32_t i = 0; i < v; ++i)
            for (std::uint32_t j = 0; j < v; ++j)
                out.at(br * v + i, bc * v + j) = tile[std::size_t(i) * v + j];
    }
    return out;
}

GroupTiling stitch_to_blockwise(const VectorWiseMatrix& vw,
                                std::uint32_t tile_width) {
    if (tile_width == 0) throw BadParams("tile_width must be positive");
    const std::uint32_t v = vw.vector_size;
    GroupTiling tiling;
    tiling.vector_size = v;
    tiling.tile_width = tile_width;
    tiling.groups.reserve(vw.groups.size());

    for (const auto& grp : vw.groups) {
        std::vector<StitchedTile> tiles;
        for (std::size_t begin = 0; begin < grp.cols.size();
             begin += tile_width) {
            const std::size_t avail =
                std::min<std::size_t>(tile_width, grp.cols.size() - begin);
            StitchedTile tile;
            tile.cols.assign(tile_width, kPadColumn);
            tile.values.assign(std::size_t(tile_width) * v, 0.0f);
            tile.pad_cols = static_cast<std::uint32_t>(tile_width - avail);
            for (std::size_t j = 0; j < avail; ++j) {
                tile.cols[j] = grp.cols[begin + j];
                for (std::uint32_t i = 0; i < v; ++i)
                    tile.values[j * v + i] = grp.values[(begin + j) * v + i];
            }
            tiles.push_back(std::move(tile));
        }
        tiling.groups.push_back(std::move(tiles));
    }
    return tiling;
}

} // namespace shflbw
