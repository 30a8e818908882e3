// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "shflbw/formats.hpp"
#include "shflbw/matrix.hpp"

namespace shflbw {

// SMX1 container, little-endian:
//   magic "SMX1", u32 version=1, u32 kind, u32 M, u32 K, u32 V, u32 G,
//   then a kind-specific payload:
//     0 dense:       M*K f32
//     1 mask:        ceil(M*K/8) bytes, bits packed row-major, LSB first
//     2 vector-wise: per group: u32 n_g, n_g u32 column indices, V*n_g f32
//     3 shfl-bw:     M u32 row_indices, then the vector-wise payload
//     4 block-wise:  u32 nblocks, nblocks x (u32,u32) coords, nblocks x V*V f32
// V and G are 0 where not applicable.

using AnyMatrix = std::variant<DenseMatrix, SparsityMask, VectorWiseMatrix,
                               ShflBWMatrix, BlockWiseMatrix>;

std::vector<std::uint8_t> encode_container(const AnyMatrix& m);
AnyMatrix decode_container(const std::vector<std::uint8_t>& bytes);

void write_container(const AnyMatrix& m, const std::filesystem::path& path);
AnyMatrix read_container(const std::filesystem::path& path);

// Convenience accessors; throw BadParams when the variant holds another kind.
const DenseMatrix& as_dense(const AnyMatrix& m);
const SparsityMask& as_mask(const AnyMatrix& m);
const ShflBWMatrix& as_shflbw(const AnyMatrix& m);

} // namespace shflbw
